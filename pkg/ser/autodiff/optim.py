from dataclasses import dataclass, field
from typing import Dict, Mapping

import numpy as np

from .primitives import ShapeError
from .tensor import Tensor


class MissingGradientError(KeyError):
    pass


@dataclass
class AdamState:
    """Moment accumulators and hyperparameters of the Adam optimizer"""
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)


def gradient_map(params: Mapping[str, Tensor]) -> Dict[int, Tensor]:
    """Returns the gradients accumulated in params' `.grad`, keyed by node id."""
    result: Dict[int, Tensor] = {}
    for name, p in params.items():
        if p.grad is None:
            raise MissingGradientError(f"parameter {name!r} has no accumulated gradient")
        result[p.node_id] = Tensor(p.grad)
    return result


def adam_step(params: Mapping[str, Tensor], grads: Mapping[int, Tensor],
              state: AdamState) -> Mapping[str, Tensor]:
    """
    Updates every parameter in place with one bias-corrected Adam step.
    `grads` is keyed by the parameters' node ids, as returned by backward().
    """
    # Validate everything first, so that a bad call leaves params untouched
    for name, p in params.items():
        g = grads.get(p.node_id)
        if g is None:
            raise MissingGradientError(f"no gradient for parameter {name!r}")
        if g.shape != p.shape:
            raise ShapeError(f"adam_step: gradient of {name!r} has shape {g.shape}, "
                             f"parameter has {p.shape}")
        if name in state.m and state.m[name].shape != p.shape:
            raise ShapeError(f"adam_step: moments of {name!r} have shape "
                             f"{state.m[name].shape}, parameter has {p.shape}")

    state.t += 1
    correction1 = 1.0 - state.beta1 ** state.t
    correction2 = 1.0 - state.beta2 ** state.t

    for name, p in params.items():
        g = grads[p.node_id].values
        m = state.m.setdefault(name, np.zeros_like(p.values))
        v = state.v.setdefault(name, np.zeros_like(p.values))

        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g

        m_hat = m / correction1
        v_hat = v / correction2
        p.values -= state.lr * m_hat / (np.sqrt(v_hat) + state.epsilon)

    return params
