from dataclasses import dataclass, field
from typing import List, Mapping, Optional

import numpy as np

from ..autodiff import Tensor
from ..autodiff import ops

"""
Transformer building blocks shared by the encoders, the correction decoder
and the fusion module. Every block reads its tensors from a parameter map
under a dotted prefix (see params.py for the layout).
"""

# cSpell: words prelu

Params = Mapping[str, Tensor]


@dataclass
class Runtime:
    """Per-call settings threaded through the blocks"""
    heads: int
    dropout: float = 0.0
    rng: Optional[np.random.Generator] = None

    # Attention weights of every attention block, in evaluation order
    attention: List[Tensor] = field(default_factory=list)

    def drop(self, x: Tensor) -> Tensor:
        return ops.dropout(x, self.dropout, self.rng)


def affine(x: Tensor, params: Params, prefix: str) -> Tensor:
    return ops.conv1x1(x, params[prefix + "w"], params[prefix + "b"])


def norm(x: Tensor, params: Params, prefix: str) -> Tensor:
    return ops.layer_norm(x, params[prefix + "g"], params[prefix + "b"])


def attention(query: Tensor, context: Tensor, params: Params, prefix: str, rt: Runtime,
              causal: bool = False) -> Tensor:
    """Multi-head scaled dot-product attention; output length equals query length."""
    q = ops.split_heads(affine(query, params, prefix + "q."), rt.heads)
    k = ops.split_heads(affine(context, params, prefix + "k."), rt.heads)
    v = ops.split_heads(affine(context, params, prefix + "v."), rt.heads)

    weights = ops.softmax(ops.scaled_dot(q, k, causal), axis=-1)
    rt.attention.append(weights)

    mixed = ops.merge_heads(ops.matmul(weights, v), rt.heads)
    return affine(mixed, params, prefix + "o.")


def feed_forward(x: Tensor, params: Params, prefix: str) -> Tensor:
    hidden = ops.prelu(affine(x, params, prefix + "in."), params[prefix + "slope"])
    return affine(hidden, params, prefix + "out.")


def residual_norm(x: Tensor, sublayer: Tensor, params: Params, prefix: str,
                  rt: Runtime) -> Tensor:
    return norm(ops.add(x, rt.drop(sublayer)), params, prefix)


def transformer_layer(x: Tensor, params: Params, prefix: str, rt: Runtime,
                      memory: Optional[Tensor] = None, causal: bool = False) -> Tensor:
    """
    Post-norm transformer layer: self-attention, then (when memory is given)
    cross-attention into memory, then the position-wise feed-forward net.
    """
    x = residual_norm(x, attention(x, x, params, prefix + "self.", rt, causal),
                      params, prefix + "ln_self.", rt)

    if memory is not None:
        x = residual_norm(x, attention(x, memory, params, prefix + "cross.", rt),
                          params, prefix + "ln_cross.", rt)

    return residual_norm(x, feed_forward(x, params, prefix + "ffn."),
                         params, prefix + "ln_ffn.", rt)


def positions(table: Tensor, length: int) -> Tensor:
    """First `length` rows of a learned position table"""
    if length > table.shape[0]:
        raise ValueError(f"sequence of {length} positions exceeds the position table "
                         f"({table.shape[0]} rows)")
    return ops.embedding(table, range(length))
