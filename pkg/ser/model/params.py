from typing import Dict, List, Mapping, Tuple, TypeVar

import numpy as np

from ..autodiff import Tensor
from ..const import EDIT_LABELS, PRELU_INIT_SLOPE
from .config import ModelConfig
from .modes import Mode

"""
Parameter layout of the network.

Names are dotted paths; their shapes follow from (ModelConfig, Mode) alone.
Tensors under the `aed.` and `aec.` prefixes belong to the auxiliary heads
and are not needed at inference.
"""

# cSpell: words prelu

ModelParams = Dict[str, Tensor]
_Shapes = Dict[str, Tuple[int, ...]]
_T = TypeVar("_T")

AUX_PREFIXES = ("aed.", "aec.")


def is_aux(name: str) -> bool:
    return name.startswith(AUX_PREFIXES)


def _affine(shapes: _Shapes, prefix: str, n_in: int, n_out: int) -> None:
    shapes[prefix + "w"] = (n_out, n_in)
    shapes[prefix + "b"] = (n_out,)


def _layer_norm(shapes: _Shapes, prefix: str, d: int) -> None:
    shapes[prefix + "g"] = (d,)
    shapes[prefix + "b"] = (d,)


def _attention(shapes: _Shapes, prefix: str, d: int) -> None:
    for proj in ("q", "k", "v", "o"):
        _affine(shapes, f"{prefix}{proj}.", d, d)


def _feed_forward(shapes: _Shapes, prefix: str, d: int, hidden: int) -> None:
    _affine(shapes, prefix + "in.", d, hidden)
    shapes[prefix + "slope"] = (hidden,)
    _affine(shapes, prefix + "out.", hidden, d)


def _transformer_layer(shapes: _Shapes, prefix: str, cfg: ModelConfig,
                       cross: bool = False) -> None:
    """Self-attention (+ cross-attention) and feed-forward sublayers, each layer-normed"""
    _attention(shapes, prefix + "self.", cfg.d)
    _layer_norm(shapes, prefix + "ln_self.", cfg.d)
    if cross:
        _attention(shapes, prefix + "cross.", cfg.d)
        _layer_norm(shapes, prefix + "ln_cross.", cfg.d)
    _feed_forward(shapes, prefix + "ffn.", cfg.d, cfg.ffn_dim)
    _layer_norm(shapes, prefix + "ln_ffn.", cfg.d)


def param_shapes(cfg: ModelConfig, mode: Mode) -> _Shapes:
    """Returns the name → shape layout of every tensor the mode uses."""
    shapes: _Shapes = {}
    d = cfg.d

    # Token tables are shared by the text encoder and the correction decoder
    if mode.text:
        shapes["text.te"] = (cfg.vocab_size, d)
        shapes["text.pe"] = (cfg.max_len, d)
        for layer in range(cfg.enc_layers_text):
            _transformer_layer(shapes, f"text.enc{layer}.", cfg)

    if mode.speech:
        _affine(shapes, "speech.conv.", cfg.downsample * cfg.frame_dim, d)
        shapes["speech.conv.slope"] = (d,)
        shapes["speech.pe"] = (cfg.max_frames, d)
        for layer in range(cfg.enc_layers_speech):
            _transformer_layer(shapes, f"speech.enc{layer}.", cfg)

    if mode.aed:
        _affine(shapes, "aed.", d, len(EDIT_LABELS))

    if mode.aec:
        _affine(shapes, "aec.in.", 2 * d, d)
        _transformer_layer(shapes, "aec.dec.", cfg, cross=True)
        _affine(shapes, "aec.out.", d, cfg.vocab_size)

    if mode.mf:
        for i in ("s", "t"):
            _attention(shapes, f"cme.{i}.att.", d)
            _layer_norm(shapes, f"cme.{i}.ln_att.", d)
            _feed_forward(shapes, f"cme.{i}.ffn.", d, cfg.ffn_dim)
            _layer_norm(shapes, f"cme.{i}.ln_ffn.", d)

            _attention(shapes, f"hma.{i}.att.", d)
            _affine(shapes, f"hma.{i}.mask.", 2 * d, d)

            _affine(shapes, f"mir.{i}.conv.", d, d)
            shapes[f"mir.{i}.conv.slope"] = (d,)
        _layer_norm(shapes, "mir.ln.", d)

    _affine(shapes, "cls.", mode.classifier_inputs * d, cfg.n_emotions)
    return shapes


def _init_value(name: str, shape: Tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
    leaf = name.rsplit(".", 1)[-1]

    if leaf == "slope":
        return np.full(shape, PRELU_INIT_SLOPE)
    elif leaf == "g":
        return np.ones(shape)
    elif leaf == "b":
        return np.zeros(shape)
    elif leaf in {"te", "pe"}:
        return rng.normal(0.0, 0.1, size=shape)
    else:
        # Affine weights are (out, in)
        return rng.normal(0.0, 1.0 / np.sqrt(shape[1]), size=shape)


def init_params(cfg: ModelConfig, mode: Mode, seed: int) -> ModelParams:
    """Randomly initializes every parameter of the mode. Deterministic given the seed."""
    cfg.validate()
    rng = np.random.default_rng(seed)
    return {
        name: Tensor(_init_value(name, shape, rng), requires_grad=True)
        for name, shape in param_shapes(cfg, mode).items()
    }


def strip_aux(params: Mapping[str, _T]) -> Tuple[Dict[str, _T], List[str]]:
    """Drops tensors exclusive to the AED/AEC heads. Returns (kept, dropped names)."""
    kept = {k: v for k, v in params.items() if not is_aux(k)}
    dropped = [k for k in params if is_aux(k)]
    return kept, dropped


def missing_for_mode(params: ModelParams, cfg: ModelConfig, mode: Mode,
                     inference: bool = True) -> List[str]:
    """Lists parameters the mode needs which are absent or have the wrong shape."""
    problems: List[str] = []
    for name, shape in param_shapes(cfg, mode).items():
        if inference and is_aux(name):
            continue
        p = params.get(name)
        if p is None:
            problems.append(f"{name} (missing)")
        elif p.shape != shape:
            problems.append(f"{name} (shape {p.shape}, expected {shape})")
    return problems
