import math
from typing import Any, Callable, Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

"""
Primitive operations of the tensor engine.

Each primitive is described by 3 functions:
- check(kind, inputs, attrs) - raises ShapeError if the operands don't fit,
- forward(inputs, attrs) - returns (output, cache),
- backward(grad_out, inputs, output, cache, attrs) - returns one gradient per input
  (None for inputs which can't be differentiated).

All arrays are float64. Row broadcasting (a matrix with a vector of its last extent)
is the only broadcasting supported, and only by add and mul.
"""

# cSpell: words prelu

_Arrays = Sequence[np.ndarray]
_Attrs = Mapping[str, Any]
_Grads = List[Optional[np.ndarray]]


class ShapeError(ValueError):
    pass


class UnknownPrimitiveError(KeyError):
    pass


class Primitive(NamedTuple):
    check: Callable[[str, _Arrays, _Attrs], None]
    forward: Callable[[_Arrays, _Attrs], Tuple[np.ndarray, Any]]
    backward: Callable[[np.ndarray, _Arrays, np.ndarray, Any, _Attrs], _Grads]


def _expect(condition: bool, kind: str, inputs: _Arrays, what: str) -> None:
    if not condition:
        shapes = ", ".join(str(i.shape) for i in inputs)
        raise ShapeError(f"{kind}: {what} (operand shapes: {shapes})")


def _expect_arity(kind: str, inputs: _Arrays, n: int) -> None:
    if len(inputs) != n:
        raise ShapeError(f"{kind}: expected {n} operands, got {len(inputs)}")


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    """Sums grad over the leading axes which were broadcast onto an operand of `shape`."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    return grad


# = ELEMENTWISE = #

def _check_binary(kind: str, inputs: _Arrays, attrs: _Attrs) -> None:
    _expect_arity(kind, inputs, 2)
    a, b = inputs
    same = a.shape == b.shape
    row = b.ndim == 1 and a.ndim >= 1 and a.shape[-1] == b.shape[0]
    _expect(same or row, kind, inputs, "operands must match or the second must be a row vector")


def _add_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    return inputs[0] + inputs[1], None


def _add_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any, attrs: _Attrs) \
        -> _Grads:
    return [g, _unbroadcast(g, inputs[1].shape)]


def _mul_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    return inputs[0] * inputs[1], None


def _mul_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any, attrs: _Attrs) \
        -> _Grads:
    a, b = inputs
    return [g * b, _unbroadcast(g * a, b.shape)]


def _check_unary(kind: str, inputs: _Arrays, attrs: _Attrs) -> None:
    _expect_arity(kind, inputs, 1)


def _scale_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    return inputs[0] * attrs["factor"], None


def _scale_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any, attrs: _Attrs) \
        -> _Grads:
    return [g * attrs["factor"]]


def _sigmoid_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    # tanh form doesn't overflow for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * inputs[0])), None


def _sigmoid_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any, attrs: _Attrs) \
        -> _Grads:
    return [g * out * (1.0 - out)]


def _check_prelu(kind: str, inputs: _Arrays, attrs: _Attrs) -> None:
    _expect_arity(kind, inputs, 2)
    x, slope = inputs
    _expect(slope.ndim == 1 and x.ndim >= 1 and x.shape[-1] == slope.shape[0], kind, inputs,
            "slope must hold one value per channel")


def _prelu_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    x, slope = inputs
    positive = x > 0
    return np.where(positive, x, slope * x), positive


def _prelu_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any, attrs: _Attrs) \
        -> _Grads:
    x, slope = inputs
    positive = cache
    gx = g * np.where(positive, 1.0, slope)
    gslope = _unbroadcast(g * np.where(positive, 0.0, x), slope.shape)
    return [gx, gslope]


# = REDUCTIONS & NORMALIZATION = #

def _check_axis(kind: str, inputs: _Arrays, attrs: _Attrs) -> None:
    _expect_arity(kind, inputs, 1)
    axis = attrs.get("axis", -1)
    _expect(-inputs[0].ndim <= axis < inputs[0].ndim, kind, inputs, f"axis {axis} out of range")
    _expect(inputs[0].shape[axis] > 0, kind, inputs, "reduced axis is empty")


def _softmax_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    axis = attrs.get("axis", -1)
    x = inputs[0]
    shifted = x - np.max(x, axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=axis, keepdims=True), None


def _softmax_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any, attrs: _Attrs) \
        -> _Grads:
    axis = attrs.get("axis", -1)
    return [out * (g - np.sum(g * out, axis=axis, keepdims=True))]


def _layer_norm_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    x = inputs[0]
    mean = x.mean(axis=-1, keepdims=True)
    centered = x - mean
    inv_std = 1.0 / np.sqrt((centered * centered).mean(axis=-1, keepdims=True) + attrs["eps"])
    normalized = centered * inv_std
    return normalized, inv_std


def _layer_norm_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any,
                    attrs: _Attrs) -> _Grads:
    inv_std = cache
    n = out.shape[-1]
    g_sum = g.sum(axis=-1, keepdims=True)
    g_dot = (g * out).sum(axis=-1, keepdims=True)
    return [inv_std * (g - g_sum / n - out * g_dot / n)]


def _check_pool(kind: str, inputs: _Arrays, attrs: _Attrs) -> None:
    _expect_arity(kind, inputs, 1)
    _expect(inputs[0].ndim == 2, kind, inputs, "expected a (time, features) matrix")
    _expect(inputs[0].shape[0] > 0, kind, inputs, "time axis is empty")


def _mean_pool_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    return inputs[0].mean(axis=0), None


def _mean_pool_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any,
                   attrs: _Attrs) -> _Grads:
    x = inputs[0]
    return [np.broadcast_to(g / x.shape[0], x.shape).copy()]


def _sum_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    return np.array(inputs[0].sum()), None


def _sum_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any, attrs: _Attrs) \
        -> _Grads:
    return [np.full(inputs[0].shape, float(g))]


def _as_rows(probs: np.ndarray) -> np.ndarray:
    return probs.reshape(1, -1) if probs.ndim == 1 else probs


def _check_pick(kind: str, inputs: _Arrays, attrs: _Attrs) -> None:
    _expect_arity(kind, inputs, 1)
    _expect(inputs[0].ndim in {1, 2}, kind, inputs,
            "expected a probability vector or a matrix of probability rows")
    probs = _as_rows(inputs[0])
    indices = attrs["indices"]
    _expect(len(indices) == probs.shape[0], kind, inputs,
            f"{len(indices)} gold indices for {probs.shape[0]} rows")
    _expect(all(0 <= i < probs.shape[1] for i in indices), kind, inputs,
            "gold index out of range")


def _neg_log_pick_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    probs = _as_rows(inputs[0])
    rows = np.arange(probs.shape[0])
    picked = probs[rows, np.asarray(attrs["indices"], dtype=np.int64)]
    clamped = np.maximum(picked, attrs["eps"])
    return np.array(-np.log(clamped).sum()), (rows, picked)


def _neg_log_pick_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any,
                      attrs: _Attrs) -> _Grads:
    rows, picked = cache
    grad = np.zeros_like(_as_rows(inputs[0]))
    # The clamp is flat below eps
    live = picked > attrs["eps"]
    gold = np.asarray(attrs["indices"], dtype=np.int64)
    grad[rows[live], gold[live]] = -float(g) / picked[live]
    return [grad.reshape(inputs[0].shape)]


# = LINEAR ALGEBRA = #

def _check_matmul(kind: str, inputs: _Arrays, attrs: _Attrs) -> None:
    _expect_arity(kind, inputs, 2)
    a, b = inputs
    _expect(a.ndim == b.ndim and a.ndim in {2, 3}, kind, inputs,
            "operands must both be matrices or both be batches of matrices")
    _expect(a.shape[-1] == b.shape[-2], kind, inputs,
            f"inner extents differ ({a.shape[-1]} vs {b.shape[-2]})")
    _expect(a.shape[:-2] == b.shape[:-2], kind, inputs, "batch extents differ")


def _matmul_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    return np.matmul(inputs[0], inputs[1]), None


def _matmul_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any, attrs: _Attrs) \
        -> _Grads:
    a, b = inputs
    return [np.matmul(g, np.swapaxes(b, -1, -2)), np.matmul(np.swapaxes(a, -1, -2), g)]


def _check_conv1x1(kind: str, inputs: _Arrays, attrs: _Attrs) -> None:
    _expect_arity(kind, inputs, 3)
    x, w, b = inputs
    _expect(x.ndim == 2 and w.ndim == 2 and b.ndim == 1, kind, inputs,
            "expected (time, in), (out, in) and (out,) operands")
    _expect(x.shape[1] == w.shape[1], kind, inputs,
            f"input has {x.shape[1]} channels, weight expects {w.shape[1]}")
    _expect(w.shape[0] == b.shape[0], kind, inputs, "bias doesn't match the output channels")


def _conv1x1_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    x, w, b = inputs
    return x @ w.T + b, None


def _conv1x1_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any,
                 attrs: _Attrs) -> _Grads:
    x, w, b = inputs
    return [g @ w, g.T @ x, g.sum(axis=0)]


def _check_scaled_dot(kind: str, inputs: _Arrays, attrs: _Attrs) -> None:
    _expect_arity(kind, inputs, 2)
    q, k = inputs
    _expect(q.ndim == k.ndim and q.ndim in {2, 3}, kind, inputs,
            "queries and keys must have the same rank")
    _expect(q.shape[-1] == k.shape[-1], kind, inputs, "query and key sizes differ")
    _expect(q.shape[:-2] == k.shape[:-2], kind, inputs, "batch extents differ")
    _expect(k.shape[-2] > 0, kind, inputs, "no keys to attend to")
    if attrs.get("causal"):
        _expect(q.shape[-2] == k.shape[-2], kind, inputs, "causal scores must be square")


def _scaled_dot_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    q, k = inputs
    scores = np.matmul(q, np.swapaxes(k, -1, -2)) / math.sqrt(q.shape[-1])
    mask = None
    if attrs.get("causal"):
        n = q.shape[-2]
        mask = np.triu(np.ones((n, n), dtype=bool), k=1)
        scores = np.where(mask, -np.inf, scores)
    return scores, mask


def _scaled_dot_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any,
                    attrs: _Attrs) -> _Grads:
    q, k = inputs
    if cache is not None:
        g = np.where(cache, 0.0, g)
    scale = 1.0 / math.sqrt(q.shape[-1])
    return [np.matmul(g, k) * scale, np.matmul(np.swapaxes(g, -1, -2), q) * scale]


# = STRUCTURE = #

def _check_concat(kind: str, inputs: _Arrays, attrs: _Attrs) -> None:
    _expect(len(inputs) > 0, kind, inputs, "nothing to concatenate")
    axis = attrs["axis"]
    ndim = inputs[0].ndim
    _expect(all(i.ndim == ndim for i in inputs), kind, inputs, "operand ranks differ")
    _expect(0 <= axis < ndim, kind, inputs, f"axis {axis} out of range")
    rest = [i.shape[:axis] + i.shape[axis + 1:] for i in inputs]
    _expect(all(r == rest[0] for r in rest), kind, inputs,
            f"extents off axis {axis} differ")


def _concat_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    axis = attrs["axis"]
    splits = np.cumsum([i.shape[axis] for i in inputs])[:-1]
    return np.concatenate(inputs, axis=axis), splits


def _concat_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any, attrs: _Attrs) \
        -> _Grads:
    return list(np.split(g, cache, axis=attrs["axis"]))


def _check_reshape(kind: str, inputs: _Arrays, attrs: _Attrs) -> None:
    _expect_arity(kind, inputs, 1)
    shape = tuple(attrs["shape"])
    _expect(int(np.prod(shape)) == inputs[0].size, kind, inputs,
            f"can't reshape {inputs[0].size} values into {shape}")


def _reshape_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    return inputs[0].reshape(tuple(attrs["shape"])), None


def _reshape_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any,
                 attrs: _Attrs) -> _Grads:
    return [g.reshape(inputs[0].shape)]


def _check_embedding(kind: str, inputs: _Arrays, attrs: _Attrs) -> None:
    _expect_arity(kind, inputs, 1)
    table = inputs[0]
    _expect(table.ndim == 2, kind, inputs, "embedding table must be a matrix")
    bad = [i for i in attrs["ids"] if not 0 <= i < table.shape[0]]
    _expect(not bad, kind, inputs, f"ids {bad} outside of a table with {table.shape[0]} rows")


def _embedding_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    return inputs[0][np.asarray(attrs["ids"], dtype=np.int64)], None


def _embedding_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any,
                   attrs: _Attrs) -> _Grads:
    grad = np.zeros_like(inputs[0])
    np.add.at(grad, np.asarray(attrs["ids"], dtype=np.int64), g)
    return [grad]


def _check_heads(kind: str, inputs: _Arrays, attrs: _Attrs) -> None:
    _expect_arity(kind, inputs, 1)
    x = inputs[0]
    heads = attrs["heads"]
    if kind == "split_heads":
        _expect(x.ndim == 2 and x.shape[1] % heads == 0, kind, inputs,
                f"feature size not divisible by {heads} heads")
    else:
        _expect(x.ndim == 3 and x.shape[0] == heads, kind, inputs, f"expected {heads} heads")


def _split_heads_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    x = inputs[0]
    n, d = x.shape
    heads = attrs["heads"]
    return x.reshape(n, heads, d // heads).transpose(1, 0, 2).copy(), None


def _merge_heads_fwd(inputs: _Arrays, attrs: _Attrs) -> Tuple[np.ndarray, Any]:
    x = inputs[0]
    heads, n, dk = x.shape
    return x.transpose(1, 0, 2).reshape(n, heads * dk).copy(), None


def _split_heads_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any,
                     attrs: _Attrs) -> _Grads:
    return [_merge_heads_fwd([g], attrs)[0]]


def _merge_heads_bwd(g: np.ndarray, inputs: _Arrays, out: np.ndarray, cache: Any,
                     attrs: _Attrs) -> _Grads:
    return [_split_heads_fwd([g], attrs)[0]]


PRIMITIVES: Dict[str, Primitive] = {
    "add": Primitive(_check_binary, _add_fwd, _add_bwd),
    "mul": Primitive(_check_binary, _mul_fwd, _mul_bwd),
    "scale": Primitive(_check_unary, _scale_fwd, _scale_bwd),
    "sigmoid": Primitive(_check_unary, _sigmoid_fwd, _sigmoid_bwd),
    "prelu": Primitive(_check_prelu, _prelu_fwd, _prelu_bwd),
    "softmax": Primitive(_check_axis, _softmax_fwd, _softmax_bwd),
    "layer_norm": Primitive(_check_axis, _layer_norm_fwd, _layer_norm_bwd),
    "mean_pool": Primitive(_check_pool, _mean_pool_fwd, _mean_pool_bwd),
    "sum": Primitive(_check_unary, _sum_fwd, _sum_bwd),
    "neg_log_pick": Primitive(_check_pick, _neg_log_pick_fwd, _neg_log_pick_bwd),
    "matmul": Primitive(_check_matmul, _matmul_fwd, _matmul_bwd),
    "conv1x1": Primitive(_check_conv1x1, _conv1x1_fwd, _conv1x1_bwd),
    "scaled_dot": Primitive(_check_scaled_dot, _scaled_dot_fwd, _scaled_dot_bwd),
    "concat": Primitive(_check_concat, _concat_fwd, _concat_bwd),
    "reshape": Primitive(_check_reshape, _reshape_fwd, _reshape_bwd),
    "embedding": Primitive(_check_embedding, _embedding_fwd, _embedding_bwd),
    "split_heads": Primitive(_check_heads, _split_heads_fwd, _split_heads_bwd),
    "merge_heads": Primitive(_check_heads, _merge_heads_fwd, _merge_heads_bwd),
}
