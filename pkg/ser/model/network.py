import logging
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from ..align import AlignmentLabeling, label_edits
from ..autodiff import Tensor
from ..const import DEFAULT_BETA, DEFAULT_GAMMA, EDIT_LABELS, KEEP, UNK_ID
from ..synthdata.dataobj import UtteranceExample
from .config import ModelConfig
from .dataobj import ForwardBundle
from .encoders import encode_speech, encode_text
from .fusion import classify, classify_pooled, cme_block, fuse, mir
from .heads import aec_decode_teacher_forced, aed_head
from .layers import Params, Runtime
from .losses import Losses, compute_losses
from .modes import Mode

"""
Forward passes of the whole network, for training (all heads, all losses)
and for inference (emotion path only).
"""

_logger = logging.getLogger("MfAec.network")


class Supervision(NamedTuple):
    """Gold auxiliary data derived from aligning the model's text input against the transcript"""
    labeling: AlignmentLabeling
    labels: List[int]
    positions: List[int]
    targets: Dict[int, List[int]]


def text_input(tokens: Sequence[int]) -> List[int]:
    """Token ids fed to the text encoder; an empty hypothesis becomes a lone <UNK>."""
    return list(tokens) if tokens else [UNK_ID]


def select_text(example: UtteranceExample, text_source: str) -> List[int]:
    if text_source == "asr":
        return example.asr
    elif text_source == "transcript":
        return example.transcript
    raise ValueError(f"unknown text source {text_source!r}")


def supervision(hyp: Sequence[int], ref: Sequence[int], mode: Mode) -> Optional[Supervision]:
    """
    Aligns hyp against ref. Returns None for an empty hypothesis, which has no
    positions to supervise.

    Normally only CHANGE positions are decoded. When the detection head is disabled,
    every position is decoded: KEEP towards itself, DELETE towards nothing.
    """
    if not hyp:
        return None
    labeling = label_edits(hyp, ref)

    labels = [EDIT_LABELS.index(i) for i in labeling.labels]
    targets: Dict[int, List[int]] = {k: list(v) for k, v in labeling.targets.items()}  # type: ignore

    if mode.aec_everywhere:
        for pos, label in enumerate(labeling.labels):
            if pos not in targets:
                targets[pos] = [hyp[pos]] if label == KEEP else []
        positions = list(range(len(hyp)))
    else:
        positions = labeling.change_positions()

    return Supervision(labeling, labels, positions, targets)


def _emotion_path(frames: Optional[np.ndarray], tokens: Optional[Sequence[int]],
                  params: Params, cfg: ModelConfig, mode: Mode, rt: Runtime) -> ForwardBundle:
    h_s: Optional[Tensor] = None
    h_t: Optional[Tensor] = None

    if mode.speech:
        if frames is None:
            raise ValueError(f"mode {mode.name!r} needs speech frames")
        h_s = encode_speech(frames, params, cfg, rt)
    if mode.text:
        h_t = encode_text(text_input(tokens or []), params, cfg, rt)

    if mode.mf:
        assert h_s is not None and h_t is not None
        h_s_spe = cme_block(h_s, h_t, params, "cme.s.", rt)
        h_t_spe = cme_block(h_t, h_s, params, "cme.t.", rt)
        fusion = mir(h_s_spe, h_t_spe, h_s, h_t, params, rt)
        h_fus = fuse(h_s_spe, h_t_spe, fusion.invariant)

        return ForwardBundle(
            emotion=classify(h_fus, params),
            h_s=h_s, h_t=h_t, h_s_spe=h_s_spe, h_t_spe=h_t_spe,
            h_st=fusion.h_st, h_st_inv=fusion.invariant, h_st_fus=h_fus,
            hma=fusion.hma,
        )

    parts = [i for i in (h_s, h_t) if i is not None]
    return ForwardBundle(emotion=classify_pooled(parts, params), h_s=h_s, h_t=h_t)


def forward_infer(frames: Optional[np.ndarray], asr_tokens: Optional[Sequence[int]],
                  params: Params, cfg: ModelConfig, mode: Mode) -> Tensor:
    """Emotion probabilities. The detection and correction heads are never touched."""
    rt = Runtime(cfg.heads)
    return _emotion_path(frames, asr_tokens, params, cfg, mode, rt).emotion


def forward_train(example: UtteranceExample, params: Params, cfg: ModelConfig, mode: Mode,
                  beta: float = DEFAULT_BETA, gamma: float = DEFAULT_GAMMA,
                  text_source: str = "asr",
                  rng: Optional[np.random.Generator] = None) -> Tuple[ForwardBundle, Losses]:
    """
    Full forward pass with every head the mode enables, and the example's losses.
    Dropout is applied only when rng is given.
    """
    rt = Runtime(cfg.heads, cfg.dropout, rng)
    hyp = select_text(example, text_source) if mode.text else []
    bundle = _emotion_path(example.frames, hyp, params, cfg, mode, rt)

    gold: Optional[Supervision] = None
    if mode.aed or mode.aec:
        gold = supervision(hyp, example.transcript, mode)
        if gold is None and example.transcript:
            _logger.warning(f"{example.id}: empty hypothesis against a nonempty transcript, "
                            "auxiliary losses skipped")

    if gold is not None:
        assert bundle.h_t is not None
        if mode.aed:
            bundle.aed = aed_head(bundle.h_t, params)
        if mode.aec:
            bundle.aec = aec_decode_teacher_forced(bundle.h_t, gold.positions, gold.targets,
                                                   params, cfg, rt,
                                                   allow_empty=mode.aec_everywhere)

    bundle.attention = rt.attention
    losses = compute_losses(
        bundle, example.emotion,
        gold.labels if gold else None,
        gold.targets if gold else None,
        beta, gamma,
    )
    return bundle, losses
