import os
from dataclasses import dataclass, fields
from typing import Any, Callable, Dict, Iterable, List, Optional, Protocol

import coloredlogs

from .const import (DEFAULT_BATCH_SIZE, DEFAULT_BETA, DEFAULT_EPOCHS,
                    DEFAULT_GAMMA, DEFAULT_LR, LOGGING_FMT, LOGGING_STYLE)

"""
Module containing various utility functions
"""


# = TYPE UTILITIES = #

class CsvWriter(Protocol):
    def writerow(self, __row: Iterable[Any]) -> Any: ...


# = CONFIG UTILITIES = #

def read_kv_file(path: str) -> Dict[str, str]:
    """Reads a flat `key = value` document.
    Blank lines and lines starting with '#' are ignored; keys may not repeat.
    """
    result: Dict[str, str] = {}
    with open(path, mode="r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue

            key, sep, value = line.partition("=")
            key = key.strip()
            if not sep or not key:
                raise ValueError(f"{path}:{line_no}: expected 'key = value', got {line!r}")
            if key in result:
                raise ValueError(f"{path}:{line_no}: duplicate key {key!r}")

            result[key] = value.strip()

    return result


def _parse_bool(value: str) -> bool:
    lowered = value.casefold()
    if lowered in {"1", "true", "yes", "on"}:
        return True
    elif lowered in {"0", "false", "no", "off"}:
        return False
    raise ValueError(f"not a boolean: {value!r}")


_CONVERTERS: Dict[Any, Callable[[str], Any]] = {
    int: int,
    float: float,
    str: str,
    bool: _parse_bool,
    "int": int,
    "float": float,
    "str": str,
    "bool": _parse_bool,
}


def apply_kv(obj: Any, values: Dict[str, str], source: str = "<config>") -> None:
    """Overwrites dataclass fields of obj with values parsed from a key-value mapping.
    Unknown keys are an error.
    """
    known = {f.name: f for f in fields(obj)}

    for key, raw in values.items():
        field = known.get(key)
        if field is None:
            raise KeyError(f"{source}: unknown key {key!r}")

        # Optional[str] paths are the only non-scalar annotation
        converter = _CONVERTERS.get(field.type, str)
        try:
            setattr(obj, key, converter(raw))
        except ValueError as e:
            raise ValueError(f"{source}: bad value for {key!r}: {e}") from None


# = DATA UTILITIES = #

@dataclass
class TrainConfig:
    """Everything that steers a single training run"""

    # Optimization
    lr: float = DEFAULT_LR
    batch_size: int = DEFAULT_BATCH_SIZE
    epochs: int = DEFAULT_EPOCHS
    beta: float = DEFAULT_BETA     # weight of the auxiliary tasks
    gamma: float = DEFAULT_GAMMA   # weight of AED against AEC
    seed: int = 7
    mode: str = "full"
    eval_interval: int = 1
    text_source: str = "asr"       # "asr" or "transcript"

    # Architecture (vocab_size, n_emotions and frame_dim come from the corpus)
    d: int = 64
    heads: int = 4
    enc_layers_speech: int = 2
    enc_layers_text: int = 2
    downsample: int = 4
    d_max: int = 8
    dropout: float = 0.0
    max_len: int = 64
    max_frames: int = 64
    ffn_dim: int = 128

    # Paths
    data: Optional[str] = None
    eval_data: Optional[str] = None

    def validate(self) -> None:
        if self.beta < 0 or self.gamma < 0:
            raise ValueError(f"beta and gamma must be nonnegative (got {self.beta}, {self.gamma})")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive (got {self.batch_size})")
        if self.epochs < 0:
            raise ValueError(f"epochs must be nonnegative (got {self.epochs})")
        if self.eval_interval < 1:
            raise ValueError(f"eval_interval must be positive (got {self.eval_interval})")
        if self.text_source not in {"asr", "transcript"}:
            raise ValueError(f"text_source must be 'asr' or 'transcript' "
                             f"(got {self.text_source!r})")

        # Checked here to fail before any data is read
        from .model.modes import get_mode
        get_mode(self.mode)

    @classmethod
    def from_kv(cls, path: str, overrides: Optional[Dict[str, str]] = None) -> "TrainConfig":
        cfg = cls()
        apply_kv(cfg, read_kv_file(path), path)
        if overrides:
            apply_kv(cfg, overrides, "<command line>")
        cfg.validate()
        return cfg


def setup_logging(verbose: bool = False) -> None:
    coloredlogs.install(
        level="DEBUG" if verbose else "INFO",
        style=LOGGING_STYLE,
        fmt=LOGGING_FMT
    )


def parse_list(text: str, item: Callable[[str], Any] = str) -> List[Any]:
    """Parses a comma-separated command line list, e.g. '1,2,3'."""
    return [item(i.strip()) for i in text.split(",") if i.strip()]


# = FILE SYSTEM UTILITIES = #

def ensure_dir_exists(path: str) -> bool:
    """Ensures such given directory exists.
    Returns False if directory was just created, True if it already exists.
    """
    try:
        os.makedirs(path)
        return False
    except FileExistsError:
        return True


def ensure_parent_exists(file_path: str) -> None:
    """Ensures the directory containing file_path exists."""
    parent = os.path.dirname(file_path)
    if parent:
        ensure_dir_exists(parent)
