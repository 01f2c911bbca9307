from dataclasses import dataclass
from typing import Dict, List

"""
Model variants: the full model, its ablations and the single-modal baselines.
"""


@dataclass(frozen=True)
class Mode:
    __slots__ = ("name", "speech", "text", "mf", "aed", "aec")

    name: str
    speech: bool  # speech encoder feeds the classifier
    text: bool    # text encoder feeds the classifier
    mf: bool      # CME + MIR fusion, otherwise pooled features are concatenated
    aed: bool     # error detection head and loss
    aec: bool     # error correction decoder and loss

    @property
    def aec_everywhere(self) -> bool:
        """Without detection, every hypothesis token is corrected from scratch."""
        return self.aec and not self.aed

    @property
    def classifier_inputs(self) -> int:
        """Classifier input size, in multiples of d"""
        if self.mf:
            return 1
        return int(self.speech) + int(self.text)


MODES: Dict[str, Mode] = {m.name: m for m in [
    #    name                speech text   mf     aed    aec
    Mode("full",             True,  True,  True,  True,  True),
    Mode("no-aed",           True,  True,  True,  False, True),
    Mode("no-aec",           True,  True,  True,  True,  False),
    Mode("no-mf",            True,  True,  False, True,  True),
    Mode("baseline",         True,  True,  False, False, False),
    Mode("speech-only",      True,  False, False, False, False),
    Mode("text-only",        False, True,  False, True,  True),
    Mode("text-only-no-aed", False, True,  False, False, True),
    Mode("text-only-no-aec", False, True,  False, True,  False),
    Mode("text-baseline",    False, True,  False, False, False),
]}


def get_mode(name: str) -> Mode:
    mode = MODES.get(name)
    if mode is None:
        raise ValueError(f"unknown mode {name!r}, expected one of: {', '.join(MODES)}")
    return mode


def mode_names() -> List[str]:
    return list(MODES)
