from typing import Sequence

import numpy as np

from ..autodiff import ShapeError, Tensor
from ..autodiff import ops
from .config import ModelConfig
from .layers import Params, Runtime, positions, transformer_layer

# cSpell: words prelu


def downsampled_length(m: int, cfg: ModelConfig) -> int:
    return m // cfg.downsample


def encode_speech(frames: np.ndarray, params: Params, cfg: ModelConfig, rt: Runtime) -> Tensor:
    """
    Encodes raw speech frames (m × frame_dim) into H_S (m' × d), m' = m // downsample.

    Consecutive groups of `downsample` frames are stacked and passed through a strided
    convolution (kernel = stride = downsample) with PReLU; trailing frames which don't
    fill a whole group are dropped.
    """
    if frames.ndim != 2 or frames.shape[1] != cfg.frame_dim:
        raise ShapeError(f"encode_speech: expected (m, {cfg.frame_dim}) frames, "
                         f"got {frames.shape}")

    m = frames.shape[0]
    m_down = downsampled_length(m, cfg)
    if m_down < 1:
        raise ValueError(f"speech input too short: {m} frames, need at least "
                         f"{cfg.downsample}")
    if m_down > cfg.max_frames:
        raise ValueError(f"speech input too long: {m_down} downsampled positions exceed "
                         f"max_frames={cfg.max_frames}")

    stacked = Tensor(frames[:m_down * cfg.downsample].reshape(m_down, -1))
    x = ops.prelu(ops.conv1x1(stacked, params["speech.conv.w"], params["speech.conv.b"]),
                  params["speech.conv.slope"])
    x = ops.add(x, positions(params["speech.pe"], m_down))

    for layer in range(cfg.enc_layers_speech):
        x = transformer_layer(x, params, f"speech.enc{layer}.", rt)

    return x


def embed_tokens(tokens: Sequence[int], params: Params) -> Tensor:
    """TE(T) + PE(T)"""
    return ops.add(ops.embedding(params["text.te"], tokens),
                   positions(params["text.pe"], len(tokens)))


def encode_text(tokens: Sequence[int], params: Params, cfg: ModelConfig, rt: Runtime) -> Tensor:
    """Encodes token ids into H_T (n × d): a bidirectional encoder over TE + PE."""
    if not tokens:
        raise ValueError("encode_text: empty token sequence")

    bad = [i for i in tokens if not 0 <= i < cfg.vocab_size]
    if bad:
        raise ValueError(f"encode_text: token ids {bad} outside of the vocabulary "
                         f"({cfg.vocab_size} entries)")
    if len(tokens) > cfg.max_len:
        raise ValueError(f"encode_text: {len(tokens)} tokens exceed max_len={cfg.max_len}")

    x = embed_tokens(tokens, params)
    for layer in range(cfg.enc_layers_text):
        x = transformer_layer(x, params, f"text.enc{layer}.", rt)

    return x
