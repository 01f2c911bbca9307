from dataclasses import dataclass, field
from typing import Dict, Hashable, Iterable, List, Sequence

from ..const import CHANGE, DELETE, KEEP, RESERVED_TOKENS, UNK_ID

"""
Classes used when aligning hypotheses against reference transcripts
"""

__all__ = ["Vocab", "AlignmentLabeling", "EditCounts", "TokenSequence", "UnalignableError"]

# Alignment works on any hashable tokens; the model uses integer ids
TokenSequence = Sequence[Hashable]


class UnalignableError(ValueError):
    pass


class Vocab:
    """Bidirectional token ↔ id map. Ids 0-3 are the reserved <PAD>, <BOS>, <EOS>, <UNK>."""
    __slots__ = ("tokens", "ids")

    def __init__(self, content: Iterable[str]) -> None:
        self.tokens: List[str] = list(RESERVED_TOKENS)
        self.ids: Dict[str, int] = {t: i for i, t in enumerate(self.tokens)}

        for token in content:
            if token in self.ids:
                raise ValueError(f"duplicate or reserved vocabulary entry {token!r}")
            self.ids[token] = len(self.tokens)
            self.tokens.append(token)

    @classmethod
    def synthetic(cls, n_content: int) -> "Vocab":
        """Creates a vocabulary with content tokens w0, w1, …, w{n_content-1}."""
        return cls(f"w{i}" for i in range(n_content))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def first_content_id(self) -> int:
        return len(RESERVED_TOKENS)

    def is_reserved(self, token_id: int) -> bool:
        return token_id < len(RESERVED_TOKENS)

    def encode(self, tokens: Iterable[str]) -> List[int]:
        return [self.ids.get(t, UNK_ID) for t in tokens]

    def decode(self, ids: Iterable[int]) -> List[str]:
        return [self.tokens[i] for i in ids]


@dataclass
class AlignmentLabeling:
    """
    Per-hypothesis-token edit labels (K/D/C), with the target sequence of every CHANGE.

    `anchors` are the hypothesis positions matched by the LCS. An anchor carries a
    CHANGE label only when an insertion was attached to it.
    """
    labels: List[str]
    targets: Dict[int, List[Hashable]] = field(default_factory=dict)
    anchors: List[int] = field(default_factory=list)
    alignable: bool = True

    @classmethod
    def unalignable(cls) -> "AlignmentLabeling":
        """Result for an empty hypothesis against a nonempty reference."""
        return cls(labels=[], alignable=False)

    def change_positions(self) -> List[int]:
        return [i for i, label in enumerate(self.labels) if label == CHANGE]

    def promoted_anchors(self) -> List[int]:
        """Anchors relabeled CHANGE because an insertion was attached to them"""
        return [i for i in self.anchors if self.labels[i] == CHANGE]

    def count(self, label: str) -> int:
        return sum(1 for i in self.labels if i == label)

    def validate(self, hyp_length: int) -> None:
        if len(self.labels) != hyp_length:
            raise ValueError(f"labeling has {len(self.labels)} labels for a hypothesis "
                             f"of {hyp_length} tokens")
        for pos, label in enumerate(self.labels):
            if label not in {KEEP, DELETE, CHANGE}:
                raise ValueError(f"unknown edit label {label!r} at position {pos}")
            if label == CHANGE and not self.targets.get(pos):
                raise ValueError(f"CHANGE at position {pos} has no target")
            if label != CHANGE and pos in self.targets:
                raise ValueError(f"{label} at position {pos} carries a target")


@dataclass
class EditCounts:
    """Substitutions, deletions and insertions turning a hypothesis into the reference"""
    __slots__ = ("substitutions", "deletions", "insertions")

    substitutions: int
    deletions: int
    insertions: int

    @property
    def total(self) -> int:
        return self.substitutions + self.deletions + self.insertions
