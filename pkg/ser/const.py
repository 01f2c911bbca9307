"""
Constant values used all over the place.
Model defaults live next to ModelConfig in model/config.py.
"""

from typing import List

# cSpell: words MFAEC

# Logging attributes
LOGGING_STYLE = "{"
LOGGING_FMT = "[{levelname}] {name}: {message}"

# Reserved vocabulary entries, in id order
PAD = "<PAD>"
BOS = "<BOS>"
EOS = "<EOS>"
UNK = "<UNK>"
RESERVED_TOKENS = [PAD, BOS, EOS, UNK]
PAD_ID, BOS_ID, EOS_ID, UNK_ID = range(4)

# Edit labels, index = AED class id
KEEP = "K"
DELETE = "D"
CHANGE = "C"
EDIT_LABELS = [KEEP, DELETE, CHANGE]

# Numerical constants
LAYER_NORM_EPS = 1e-5
LOG_CLAMP_EPS = 1e-12
PRELU_INIT_SLOPE = 0.25

# Checkpoint format
CHECKPOINT_MAGIC = b"MFAEC"
CHECKPOINT_VERSION = 1

# Corpus file format
CORPUS_MAGIC = "#MFAEC-CORPUS"
CORPUS_VERSION = 1
CORPUS_FIELDS = ["id", "emotion", "transcript", "asr", "frames_shape", "frames"]
FRAME_DECIMALS = 8

# Training defaults
DEFAULT_LR = 1e-3
DEFAULT_BATCH_SIZE = 16
DEFAULT_EPOCHS = 30
DEFAULT_BETA = 0.1
DEFAULT_GAMMA = 3.0

# Metrics CSV header, without the per-class recall columns which depend on e
METRICS_HEAD = ["run_id", "mode", "seed", "epoch", "uar"]
METRICS_TAIL = ["loss_emo", "loss_d", "loss_e", "wall_s"]


def metrics_header(n_emotions: int) -> List[str]:
    """Returns the full metrics CSV header for e emotion classes."""
    return METRICS_HEAD + [f"recall_{i}" for i in range(n_emotions)] + METRICS_TAIL
