from .gradcheck import CheckReport, grad_check
from .optim import AdamState, MissingGradientError, adam_step, gradient_map
from .primitives import PRIMITIVES, ShapeError, UnknownPrimitiveError
from .tensor import Tape, TapeError, Tensor, apply_primitive, backward, zero_grad

"""
`autodiff` is a minimal dense-tensor engine with reverse-mode differentiation.
"""
