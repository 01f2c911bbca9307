import itertools
import threading
from typing import Any, Dict, Iterable, List, Mapping, Optional, Sequence

import numpy as np

from .primitives import PRIMITIVES, ShapeError, UnknownPrimitiveError

"""
Dense tensors and the tape recording primitive applications for reverse-mode
differentiation.

Tapes are activated with a `with Tape() as tape:` block. Primitives applied while
a tape is active are recorded when any operand requires grad; outside of a tape
nothing is recorded and results never require grad.
"""

__all__ = [
    "Tensor", "Tape", "TapeError", "apply_primitive", "backward", "zero_grad",
    "ShapeError", "UnknownPrimitiveError",
]

_node_ids = itertools.count(1)
_local = threading.local()


class TapeError(RuntimeError):
    pass


class Tensor:
    """
    A dense double-precision value. `values` must not be mutated,
    except for parameters updated by an optimizer.
    """
    __slots__ = ("values", "requires_grad", "node_id", "grad", "tape")

    def __init__(self, values: Any, requires_grad: bool = False) -> None:
        self.values: np.ndarray = np.array(values, dtype=np.float64)
        self.requires_grad = requires_grad
        self.node_id = next(_node_ids)
        self.grad: Optional[np.ndarray] = None
        self.tape: Optional["Tape"] = None

    @classmethod
    def zeros(cls, *shape: int) -> "Tensor":
        return cls(np.zeros(shape))

    @property
    def shape(self) -> tuple:
        return self.values.shape

    def item(self) -> float:
        return float(self.values)

    def __repr__(self) -> str:
        grad_flag = ", requires_grad" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}{grad_flag}, node_id={self.node_id})"


class _Record:
    __slots__ = ("kind", "inputs", "output", "cache", "attrs")

    def __init__(self, kind: str, inputs: List[Tensor], output: Tensor, cache: Any,
                 attrs: Mapping[str, Any]) -> None:
        self.kind = kind
        self.inputs = inputs
        self.output = output
        self.cache = cache
        self.attrs = attrs


class Tape:
    """Ordered records of primitive applications. Usable for exactly one backward pass."""

    def __init__(self) -> None:
        self.records: List[_Record] = []
        self.consumed = False

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, *exc_info: Any) -> None:
        stack = _tape_stack()
        assert stack and stack[-1] is self, "Logical error: tapes exited out of order"
        stack.pop()

    def __len__(self) -> int:
        return len(self.records)

    def backward(self, loss: Tensor) -> Dict[int, Tensor]:
        """
        Propagates d(loss)/d(x) to every requires_grad node recorded on this tape.
        Gradients of leaf tensors (parameters) are also added to their `.grad`.
        Returns a mapping node_id → gradient.
        """
        if self.consumed:
            raise TapeError("tape already consumed by a previous backward pass")
        if loss.values.size != 1:
            raise TapeError(f"backward requires a scalar loss, got shape {loss.shape}")
        if loss.tape is not self:
            raise TapeError(f"loss (node {loss.node_id}) was not produced on this tape")

        self.consumed = True
        grads: Dict[int, np.ndarray] = {loss.node_id: np.ones_like(loss.values)}
        leaves: Dict[int, Tensor] = {}

        for record in reversed(self.records):
            grad_out = grads.get(record.output.node_id)
            if grad_out is None:
                continue

            primitive = PRIMITIVES[record.kind]
            input_values = [i.values for i in record.inputs]
            input_grads = primitive.backward(grad_out, input_values, record.output.values,
                                             record.cache, record.attrs)

            for tensor, grad in zip(record.inputs, input_grads):
                if not tensor.requires_grad or grad is None:
                    continue

                # Fan-out: contributions of every use are summed
                if tensor.node_id in grads:
                    grads[tensor.node_id] = grads[tensor.node_id] + grad
                else:
                    grads[tensor.node_id] = grad

                if tensor.tape is None:
                    leaves[tensor.node_id] = tensor

        for node_id, leaf in leaves.items():
            if leaf.grad is None:
                leaf.grad = grads[node_id].copy()
            else:
                leaf.grad += grads[node_id]

        return {node_id: Tensor(grad) for node_id, grad in grads.items()}


def _tape_stack() -> List[Tape]:
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


def active_tape() -> Optional[Tape]:
    stack = _tape_stack()
    return stack[-1] if stack else None


def apply_primitive(kind: str, operands: Sequence[Tensor],
                    attrs: Optional[Mapping[str, Any]] = None) -> Tensor:
    """
    Applies a primitive to its operands and returns the result.
    Appends a record to the active tape if any operand requires grad.
    """
    primitive = PRIMITIVES.get(kind)
    if primitive is None:
        raise UnknownPrimitiveError(f"unknown primitive {kind!r}")

    attrs = attrs or {}
    input_values = [i.values for i in operands]
    primitive.check(kind, input_values, attrs)
    out_values, cache = primitive.forward(input_values, attrs)

    tape = active_tape()
    track = tape is not None and any(i.requires_grad for i in operands)

    out = Tensor.__new__(Tensor)
    out.values = out_values
    out.requires_grad = track
    out.node_id = next(_node_ids)
    out.grad = None
    out.tape = tape if track else None

    if track:
        assert tape is not None
        tape.records.append(_Record(kind, list(operands), out, cache, attrs))

    return out


def backward(loss: Tensor) -> Dict[int, Tensor]:
    """Runs the backward pass of the tape which produced loss."""
    if loss.tape is None:
        raise TapeError("loss does not depend on any recorded computation")
    return loss.tape.backward(loss)


def zero_grad(params: Iterable[Tensor]) -> None:
    """Starts an optimization step: resets accumulated gradients to zero."""
    for p in params:
        p.grad = np.zeros_like(p.values)
