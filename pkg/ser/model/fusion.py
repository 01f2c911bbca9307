from typing import Dict, NamedTuple, Sequence

from ..autodiff import ShapeError, Tensor
from ..autodiff import ops
from .layers import Params, Runtime, attention, feed_forward, norm, residual_norm

"""
Multimodal fusion: cross-modal encoders producing modality-specific
representations, hybrid-modal attention extracting what both modalities share,
and the modality-invariant representation built from it.

The joint timeline H_ST is always speech positions first, then text positions.
"""

# cSpell: words prelu

MODALITIES = ("s", "t")


class HmaOutput(NamedTuple):
    share: Tensor   # cross-attention from H_ST into one modality, (m'+n) × d
    mask: Tensor    # sigmoid gate, (m'+n) × d
    gated: Tensor   # share ⊙ mask


class MirOutput(NamedTuple):
    h_st: Tensor
    invariant: Tensor
    hma: Dict[str, HmaOutput]


def _check_features(where: str, *xs: Tensor) -> None:
    sizes = {x.shape[-1] for x in xs}
    if len(sizes) != 1:
        shapes = ", ".join(str(x.shape) for x in xs)
        raise ShapeError(f"{where}: feature sizes differ ({shapes})")


def cme_block(query_side: Tensor, context_side: Tensor, params: Params, prefix: str,
              rt: Runtime) -> Tensor:
    """Cross-modal encoder: queries from one modality, keys and values from the other."""
    _check_features("cme_block", query_side, context_side)
    x = residual_norm(query_side, attention(query_side, context_side, params, prefix + "att.", rt),
                      params, prefix + "ln_att.", rt)
    return residual_norm(x, feed_forward(x, params, prefix + "ffn."), params,
                         prefix + "ln_ffn.", rt)


def _canvas(h_spe: Tensor, total: int, tag: str) -> Tensor:
    """Places a modality's rows at its own positions of the joint timeline, zeros elsewhere."""
    pad = total - h_spe.shape[0]
    if pad < 0:
        raise ShapeError(f"hma: modality {tag!r} has {h_spe.shape[0]} positions, "
                         f"the joint sequence only {total}")
    if pad == 0:
        return h_spe

    zeros = Tensor.zeros(pad, h_spe.shape[1])
    return ops.concat([h_spe, zeros] if tag == "s" else [zeros, h_spe], axis=0)


def hma(h_spe: Tensor, h_st: Tensor, params: Params, tag: str, rt: Runtime) -> HmaOutput:
    """Hybrid-modal attention of the joint sequence into modality `tag` ("s" or "t")."""
    if tag not in MODALITIES:
        raise ValueError(f"unknown modality tag {tag!r}")
    _check_features("hma", h_spe, h_st)

    share = attention(h_st, h_spe, params, f"hma.{tag}.att.", rt)

    canvas = _canvas(h_spe, h_st.shape[0], tag)
    mask_in = ops.concat([canvas, h_st], axis=1)
    mask = ops.sigmoid(ops.conv1x1(mask_in, params[f"hma.{tag}.mask.w"],
                                   params[f"hma.{tag}.mask.b"]))

    return HmaOutput(share, mask, ops.mul(share, mask))


def mir(h_s_spe: Tensor, h_t_spe: Tensor, h_s: Tensor, h_t: Tensor, params: Params,
        rt: Runtime) -> MirOutput:
    """H_ST^(inv) = LayerNorm(H_ST + Σ_i PReLU(Conv1x1(H_i^(b))))"""
    _check_features("mir", h_s_spe, h_t_spe, h_s, h_t)
    if h_s_spe.shape != h_s.shape or h_t_spe.shape != h_t.shape:
        raise ShapeError(f"mir: modality-specific shapes {h_s_spe.shape}, {h_t_spe.shape} "
                         f"don't match encoder shapes {h_s.shape}, {h_t.shape}")

    h_st = ops.concat([h_s, h_t], axis=0)
    outputs: Dict[str, HmaOutput] = {}
    x = h_st

    for tag, h_spe in zip(MODALITIES, (h_s_spe, h_t_spe)):
        outputs[tag] = hma(h_spe, h_st, params, tag, rt)
        branch = ops.conv1x1(outputs[tag].gated, params[f"mir.{tag}.conv.w"],
                             params[f"mir.{tag}.conv.b"])
        x = ops.add(x, ops.prelu(branch, params[f"mir.{tag}.conv.slope"]))

    return MirOutput(h_st, norm(x, params, "mir.ln."), outputs)


def fuse(h_s_spe: Tensor, h_t_spe: Tensor, h_inv: Tensor) -> Tensor:
    """H_ST^(fus): the three blocks concatenated along time, 2(m'+n) × d"""
    _check_features("fuse", h_s_spe, h_t_spe, h_inv)
    if h_inv.shape[0] != h_s_spe.shape[0] + h_t_spe.shape[0]:
        raise ShapeError(f"fuse: invariant block has {h_inv.shape[0]} positions, expected "
                         f"{h_s_spe.shape[0] + h_t_spe.shape[0]}")
    return ops.concat([h_s_spe, h_t_spe, h_inv], axis=0)


def _classify_vector(features: Tensor, params: Params) -> Tensor:
    n_emotions = params["cls.b"].shape[0]
    logits = ops.conv1x1(ops.reshape(features, 1, features.shape[0]),
                         params["cls.w"], params["cls.b"])
    return ops.softmax(ops.reshape(logits, n_emotions), axis=-1)


def classify(h_fus: Tensor, params: Params) -> Tensor:
    """Emotion probabilities: SoftMax(FC(temporal mean of H_ST^(fus)))"""
    if h_fus.shape[0] == 0:
        raise ValueError("classify: empty time axis")
    return _classify_vector(ops.mean_pool(h_fus), params)


def classify_pooled(parts: Sequence[Tensor], params: Params) -> Tensor:
    """Emotion probabilities from per-modality temporal means, concatenated along features."""
    pooled = [ops.mean_pool(i) for i in parts]
    return _classify_vector(pooled[0] if len(pooled) == 1 else ops.concat(pooled, axis=0),
                            params)
