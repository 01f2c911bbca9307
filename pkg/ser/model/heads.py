from typing import Dict, List, Mapping, Sequence, Tuple

from ..autodiff import Tensor
from ..autodiff import ops
from ..const import BOS_ID, EOS_ID
from .config import ModelConfig
from .encoders import embed_tokens
from .layers import Params, Runtime, affine, transformer_layer

"""
Auxiliary heads on top of H_T: error detection (one K/D/C distribution per
hypothesis token) and teacher-forced error correction (one decoder run per
change position).
"""


def aed_head(h_t: Tensor, params: Params) -> Tensor:
    """Row-wise probabilities of KEEP, DELETE and CHANGE (n × 3)"""
    return ops.softmax(affine(h_t, params, "aed."), axis=-1)


def decoder_io(target: Sequence[int], d_max: int) -> Tuple[List[int], List[int]]:
    """
    Returns the (inputs, gold outputs) of one teacher-forced decoder run.
    The target is truncated so that with <EOS> it fits in d_max steps.
    """
    kept = list(target[:d_max - 1])
    return [BOS_ID] + kept, kept + [EOS_ID]


def aec_decode_teacher_forced(h_t: Tensor, change_positions: Sequence[int],
                              targets: Mapping[int, Sequence[int]], params: Params,
                              cfg: ModelConfig, rt: Runtime,
                              allow_empty: bool = False) -> Dict[int, Tensor]:
    """
    Runs the correction decoder at every change position k and returns
    k → step distributions (len(target) + 1 rows, the last one trained towards <EOS>).

    The step-t input is FC(TE(z_t) + PE(t) ⊕ h_T[k]), z_0 = <BOS>. A single decoder layer
    attends causally over the decoded prefix and fully over H_T.
    """
    n = h_t.shape[0]
    result: Dict[int, Tensor] = {}

    for k in change_positions:
        if not 0 <= k < n:
            raise IndexError(f"change position {k} outside of a hypothesis of {n} tokens")

        target = targets.get(k)
        if target is None or (not target and not allow_empty):
            raise ValueError(f"change position {k} has no correction target")

        inputs, _ = decoder_io(target, cfg.d_max)
        steps = len(inputs)

        h_k = ops.embedding(h_t, [k] * steps)
        x = affine(ops.concat([embed_tokens(inputs, params), h_k], axis=1), params, "aec.in.")
        x = transformer_layer(x, params, "aec.dec.", rt, memory=h_t, causal=True)

        result[k] = ops.softmax(affine(x, params, "aec.out."), axis=-1)

    return result
