from typing import Optional, Sequence

import numpy as np

from ..const import LAYER_NORM_EPS, LOG_CLAMP_EPS
from .tensor import Tensor, apply_primitive

"""
Thin wrappers around apply_primitive, so that model code reads like math.
"""

# cSpell: words prelu


def add(a: Tensor, b: Tensor) -> Tensor:
    return apply_primitive("add", [a, b])


def mul(a: Tensor, b: Tensor) -> Tensor:
    return apply_primitive("mul", [a, b])


def scale(x: Tensor, factor: float) -> Tensor:
    return apply_primitive("scale", [x], {"factor": float(factor)})


def matmul(a: Tensor, b: Tensor) -> Tensor:
    return apply_primitive("matmul", [a, b])


def concat(xs: Sequence[Tensor], axis: int) -> Tensor:
    return apply_primitive("concat", list(xs), {"axis": axis})


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    return apply_primitive("softmax", [x], {"axis": axis})


def sigmoid(x: Tensor) -> Tensor:
    return apply_primitive("sigmoid", [x])


def prelu(x: Tensor, slope: Tensor) -> Tensor:
    return apply_primitive("prelu", [x, slope])


def layer_norm(x: Tensor, gain: Optional[Tensor] = None, bias: Optional[Tensor] = None,
               eps: float = LAYER_NORM_EPS) -> Tensor:
    """Row-wise layer normalization, followed by the affine gain/bias when given."""
    y = apply_primitive("layer_norm", [x], {"eps": eps})
    if gain is not None:
        y = mul(y, gain)
    if bias is not None:
        y = add(y, bias)
    return y


def conv1x1(x: Tensor, weight: Tensor, bias: Tensor) -> Tensor:
    """1×1 convolution over time: a position-wise affine map, weight is (out, in)."""
    return apply_primitive("conv1x1", [x, weight, bias])


def embedding(table: Tensor, ids: Sequence[int]) -> Tensor:
    return apply_primitive("embedding", [table], {"ids": [int(i) for i in ids]})


def mean_pool(x: Tensor) -> Tensor:
    """Average over the time axis: (time, features) → (features,)"""
    return apply_primitive("mean_pool", [x])


def scaled_dot(q: Tensor, k: Tensor, causal: bool = False) -> Tensor:
    """Attention scores q·kᵀ/√d_k; causal masks out keys after each query."""
    return apply_primitive("scaled_dot", [q, k], {"causal": causal})


def split_heads(x: Tensor, heads: int) -> Tensor:
    return apply_primitive("split_heads", [x], {"heads": heads})


def merge_heads(x: Tensor, heads: int) -> Tensor:
    return apply_primitive("merge_heads", [x], {"heads": heads})


def total(x: Tensor) -> Tensor:
    return apply_primitive("sum", [x])


def neg_log_pick(probs: Tensor, indices: Sequence[int], eps: float = LOG_CLAMP_EPS) -> Tensor:
    """−Σ log p[row, index[row]], with p clamped from below at eps.
    A single probability vector takes a single index.
    """
    return apply_primitive("neg_log_pick", [probs], {"indices": [int(i) for i in indices],
                                                     "eps": eps})


def dropout(x: Tensor, rate: float, rng: Optional[np.random.Generator]) -> Tensor:
    """Inverted dropout; identity when rate is 0 or no generator is given."""
    if rate <= 0 or rng is None:
        return x
    keep = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return mul(x, Tensor(keep))


def reshape(x: Tensor, *shape: int) -> Tensor:
    return apply_primitive("reshape", [x], {"shape": shape})
