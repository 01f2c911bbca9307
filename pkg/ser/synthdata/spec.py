from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ..const import RESERVED_TOKENS
from ..util import apply_kv, read_kv_file

"""
Parameters of the synthetic corpus and of the simulated ASR channel
"""


@dataclass
class CorpusSpec:
    """
    Shape of the synthetic corpus.

    Content token ids start after the reserved tokens. Emotion c owns the disjoint
    keyword block of `keywords_per_emotion` ids starting at
    first_content + c·keywords_per_emotion; the background distribution is uniform
    over every content id. A transcript token is a keyword with probability alpha.
    """
    vocab_size: int = 40             # reserved tokens included
    n_emotions: int = 4
    alpha: float = 0.9               # emotion-discriminative mass
    keywords_per_emotion: int = 5
    min_len: int = 3
    max_len: int = 8
    frame_dim: int = 8
    frames_per_token: int = 4
    noise: float = 0.1               # σ of the per-frame Gaussian noise
    emotion_offset: float = 0.5      # scale of the per-emotion frame offset
    seed: int = 7

    @property
    def first_content(self) -> int:
        return len(RESERVED_TOKENS)

    @property
    def n_content(self) -> int:
        return self.vocab_size - self.first_content

    def keyword_block(self, emotion: int) -> range:
        start = self.first_content + emotion * self.keywords_per_emotion
        return range(start, start + self.keywords_per_emotion)

    def token_distribution(self, emotion: int) -> np.ndarray:
        """Categorical distribution over all vocabulary ids for one emotion"""
        dist = np.zeros(self.vocab_size)
        dist[self.first_content:] = (1.0 - self.alpha) / self.n_content
        block = self.keyword_block(emotion)
        dist[block.start:block.stop] += self.alpha / self.keywords_per_emotion
        return dist

    def validate(self) -> None:
        if self.n_emotions < 1:
            raise ValueError(f"n_emotions must be positive (got {self.n_emotions})")
        if self.keywords_per_emotion < 1:
            raise ValueError("keywords_per_emotion must be positive "
                             f"(got {self.keywords_per_emotion})")
        if self.first_content + self.n_emotions * self.keywords_per_emotion > self.vocab_size:
            raise ValueError(f"vocab_size={self.vocab_size} can't hold {self.n_emotions} "
                             f"keyword blocks of {self.keywords_per_emotion} tokens")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must be in [0, 1] (got {self.alpha})")
        if not 1 <= self.min_len <= self.max_len:
            raise ValueError(f"empty utterance length range [{self.min_len}, {self.max_len}]")
        if self.frame_dim < 1 or self.frames_per_token < 1:
            raise ValueError("frame_dim and frames_per_token must be positive")
        if not np.isfinite(self.noise) or self.noise < 0:
            raise ValueError(f"noise must be finite and nonnegative (got {self.noise})")
        if not np.isfinite(self.emotion_offset):
            raise ValueError(f"emotion_offset must be finite (got {self.emotion_offset})")

    @classmethod
    def from_kv(cls, path: str, overrides: Optional[Dict[str, str]] = None) -> "CorpusSpec":
        spec = cls()
        apply_kv(spec, read_kv_file(path), path)
        if overrides:
            apply_kv(spec, overrides, "<command line>")
        spec.validate()
        return spec


@dataclass
class CorruptionSpec:
    """
    Simulated ASR channel. Substitutes are drawn uniformly from the content
    tokens other than the original; inserted tokens uniformly from all content tokens.
    """
    p_sub: float = 0.1
    p_del: float = 0.05
    p_ins: float = 0.05
    seed: int = 7

    def validate(self) -> None:
        for name in ("p_sub", "p_del", "p_ins"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1] (got {value})")
        if self.p_sub + self.p_del > 1.0:
            raise ValueError(f"p_sub + p_del exceeds 1 ({self.p_sub} + {self.p_del})")

    @property
    def expected_wer(self) -> float:
        """
        Approximate expected edit operations per reference token. A deleted token
        with an insertion on either side aligns as a single substitution.
        """
        return self.p_sub + self.p_del + self.p_ins - 2 * self.p_del * self.p_ins

    @classmethod
    def from_kv(cls, path: str, overrides: Optional[Dict[str, str]] = None) \
            -> "CorruptionSpec":
        spec = cls()
        apply_kv(spec, read_kv_file(path), path)
        if overrides:
            apply_kv(spec, overrides, "<command line>")
        spec.validate()
        return spec
