from dataclasses import dataclass, field
from typing import List

import numpy as np

"""
Classes describing synthetic utterances and corpora
"""


@dataclass
class UtteranceExample:
    """One sample: speech frames S (m × frame_dim), ASR tokens T, transcript C, emotion L"""
    id: str
    frames: np.ndarray
    asr: List[int]
    transcript: List[int]
    emotion: int

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, UtteranceExample):
            return NotImplemented
        return self.id == other.id and self.emotion == other.emotion \
            and self.asr == other.asr and self.transcript == other.transcript \
            and self.frames.shape == other.frames.shape \
            and bool(np.array_equal(self.frames, other.frames))


@dataclass
class Corpus:
    """Utterances together with the extents the model needs to be built for them"""
    vocab_size: int
    n_emotions: int
    frame_dim: int
    examples: List[UtteranceExample] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.examples)

    def class_counts(self) -> List[int]:
        counts = [0] * self.n_emotions
        for example in self.examples:
            counts[example.emotion] += 1
        return counts
