import json
import logging
import struct
from dataclasses import dataclass, field
from typing import Any, BinaryIO, Dict, List, Optional

import numpy as np

from ..autodiff import Tensor
from ..const import CHECKPOINT_MAGIC, CHECKPOINT_VERSION
from ..model import ModelConfig, ModelParams, get_mode, param_shapes
from ..model import strip_aux as drop_aux
from ..util import ensure_parent_exists

"""
Binary checkpoints.

Layout (all integers little-endian):
- magic b"MFAEC", u16 format version,
- u32-length-prefixed UTF-8 blocks: ModelConfig as key=value lines, mode name, RNG state JSON,
- u64 training step,
- u32 tensor count, then per tensor sorted by name:
  u16-length-prefixed name, u8 rank, u32 per extent, the values as little-endian float64.
"""

_logger = logging.getLogger("MfAec.checkpoint")


class CheckpointFormatError(ValueError):
    pass


@dataclass
class Checkpoint:
    config: ModelConfig
    mode: str
    params: Dict[str, np.ndarray]
    step: int = 0
    rng_state: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_params(cls, params: ModelParams, config: ModelConfig, mode: str, step: int = 0,
                    rng_state: Optional[Dict[str, Any]] = None) -> "Checkpoint":
        return cls(config, mode, {k: v.values.copy() for k, v in params.items()}, step,
                   rng_state or {})

    def model_params(self) -> ModelParams:
        """Fresh trainable tensors holding copies of the stored values"""
        return {k: Tensor(v, requires_grad=True) for k, v in self.params.items()}

    def stripped(self) -> "Checkpoint":
        """Copy without the tensors exclusive to the detection and correction heads"""
        kept, dropped = drop_aux(self.params)
        _logger.debug(f"Stripped: {', '.join(dropped) or 'nothing'}")
        return Checkpoint(self.config, self.mode, kept, self.step, dict(self.rng_state))

    def to_bytes(self) -> bytes:
        blocks = [
            self.config.to_kv(),
            self.mode,
            json.dumps(self.rng_state, sort_keys=True, separators=(",", ":")),
        ]

        parts: List[bytes] = [CHECKPOINT_MAGIC, struct.pack("<H", CHECKPOINT_VERSION)]
        for block in blocks:
            raw = block.encode("utf-8")
            parts.append(struct.pack("<I", len(raw)))
            parts.append(raw)

        parts.append(struct.pack("<Q", self.step))
        parts.append(struct.pack("<I", len(self.params)))

        for name in sorted(self.params):
            values = np.asarray(self.params[name], dtype="<f8")
            raw_name = name.encode("utf-8")
            parts.append(struct.pack("<H", len(raw_name)))
            parts.append(raw_name)
            parts.append(struct.pack("<B", values.ndim))
            parts.append(struct.pack(f"<{values.ndim}I", *values.shape))
            parts.append(values.tobytes(order="C"))

        return b"".join(parts)


class _Reader:
    def __init__(self, f: BinaryIO, path: str) -> None:
        self.f = f
        self.path = path

    def read(self, n: int, what: str) -> bytes:
        data = self.f.read(n)
        if len(data) != n:
            raise CheckpointFormatError(f"{self.path}: truncated while reading {what}")
        return data

    def unpack(self, fmt: str, what: str) -> tuple:
        return struct.unpack(fmt, self.read(struct.calcsize(fmt), what))

    def text(self, what: str) -> str:
        length, = self.unpack("<I", what)
        try:
            return self.read(length, what).decode("utf-8")
        except UnicodeDecodeError:
            raise CheckpointFormatError(f"{self.path}: {what} is not valid UTF-8") from None


def save_checkpoint(checkpoint: Checkpoint, path: str) -> None:
    ensure_parent_exists(path)
    with open(path, mode="wb") as f:
        f.write(checkpoint.to_bytes())
    _logger.info(f"Saved checkpoint ({len(checkpoint.params)} tensors) to {path}")


def load_checkpoint(path: str, strip_aux: bool = False) -> Checkpoint:
    """
    Reads a checkpoint. Magic and version are checked before anything else is read;
    every tensor must belong to the layout of the stored (config, mode).
    """
    with open(path, mode="rb") as f:
        r = _Reader(f, path)

        magic = f.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointFormatError(f"{path}: not a checkpoint (bad magic {magic!r})")
        version, = r.unpack("<H", "version")
        if version != CHECKPOINT_VERSION:
            raise CheckpointFormatError(f"{path}: unsupported checkpoint version {version} "
                                        f"(expected {CHECKPOINT_VERSION})")

        try:
            config = ModelConfig.from_kv(r.text("model config"))
            mode = get_mode(r.text("mode")).name
        except (KeyError, ValueError) as e:
            if isinstance(e, CheckpointFormatError):
                raise
            raise CheckpointFormatError(f"{path}: bad header: {e}") from None

        try:
            rng_state = json.loads(r.text("rng state"))
        except json.JSONDecodeError as e:
            raise CheckpointFormatError(f"{path}: bad rng state: {e}") from None

        step, = r.unpack("<Q", "step")
        count, = r.unpack("<I", "tensor count")
        layout = param_shapes(config, get_mode(mode))
        params: Dict[str, np.ndarray] = {}

        for _ in range(count):
            name_len, = r.unpack("<H", "tensor name")
            name = r.read(name_len, "tensor name").decode("utf-8", errors="replace")
            expected = layout.get(name)
            if expected is None:
                raise CheckpointFormatError(f"{path}: unknown tensor {name!r}")
            if name in params:
                raise CheckpointFormatError(f"{path}: duplicate tensor {name!r}")

            ndim, = r.unpack("<B", f"rank of {name}")
            shape = r.unpack(f"<{ndim}I", f"shape of {name}")
            if shape != expected:
                raise CheckpointFormatError(f"{path}: tensor {name!r} has shape {shape}, "
                                            f"expected {expected}")

            size = int(np.prod(shape, dtype=np.int64)) * 8
            data = r.read(size, f"values of {name}")
            params[name] = np.frombuffer(data, dtype="<f8").astype(np.float64).reshape(shape)

        if f.read(1):
            raise CheckpointFormatError(f"{path}: trailing data after the last tensor")

    checkpoint = Checkpoint(config, mode, params, step, rng_state)
    _logger.info(f"Loaded checkpoint ({len(params)} tensors, mode {mode}) from {path}")
    return checkpoint.stripped() if strip_aux else checkpoint
