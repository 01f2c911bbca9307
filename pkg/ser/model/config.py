from dataclasses import asdict, dataclass, fields
from typing import Dict


@dataclass
class ModelConfig:
    """Architectural dimensions of the network"""
    vocab_size: int
    n_emotions: int
    frame_dim: int
    d: int = 64
    heads: int = 4
    enc_layers_speech: int = 2
    enc_layers_text: int = 2
    downsample: int = 4
    d_max: int = 8          # decode-length cap, <EOS> included
    dropout: float = 0.0
    max_len: int = 64       # capacity of the token position table
    max_frames: int = 64    # capacity of the speech position table (downsampled positions)
    ffn_dim: int = 128

    def validate(self) -> None:
        positive = ["vocab_size", "n_emotions", "frame_dim", "d", "heads", "enc_layers_speech",
                    "enc_layers_text", "downsample", "max_len", "max_frames", "ffn_dim"]
        for name in positive:
            if getattr(self, name) < 1:
                raise ValueError(f"ModelConfig.{name} must be positive "
                                 f"(got {getattr(self, name)})")

        if self.d % self.heads != 0:
            raise ValueError(f"hidden size {self.d} is not divisible by {self.heads} heads")
        if self.d_max < 2:
            raise ValueError(f"d_max must leave room for <BOS> and <EOS> (got {self.d_max})")
        if self.d_max > self.max_len:
            raise ValueError(f"d_max ({self.d_max}) exceeds the position table ({self.max_len})")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1) (got {self.dropout})")

    def to_kv(self) -> str:
        return "".join(f"{k}={v}\n" for k, v in asdict(self).items())

    @classmethod
    def from_kv(cls, text: str) -> "ModelConfig":
        types = {f.name: f.type for f in fields(cls)}
        values: Dict[str, object] = {}

        for line in text.splitlines():
            if not line:
                continue
            key, _, raw = line.partition("=")
            if key not in types:
                raise KeyError(f"unknown ModelConfig field {key!r}")
            values[key] = types[key](raw)  # type: ignore

        config = cls(**values)  # type: ignore
        config.validate()
        return config
