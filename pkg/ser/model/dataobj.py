from dataclasses import dataclass, field
from typing import Dict, List, Optional

from ..autodiff import Tensor
from .fusion import HmaOutput

"""
Classes holding the activations of a forward pass
"""


@dataclass
class ForwardBundle:
    """
    Every activation of one forward pass. Entries of disabled parts are None:
    speech-only and text-only modes lack one encoder, non-fusion modes lack
    h_s_spe..h_st_fus, and inference lacks aed/aec.
    """
    emotion: Tensor                          # (e,)
    h_s: Optional[Tensor] = None             # (m', d)
    h_t: Optional[Tensor] = None             # (n, d)
    h_s_spe: Optional[Tensor] = None         # (m', d)
    h_t_spe: Optional[Tensor] = None         # (n, d)
    h_st: Optional[Tensor] = None            # (m'+n, d)
    h_st_inv: Optional[Tensor] = None        # (m'+n, d)
    h_st_fus: Optional[Tensor] = None        # (2(m'+n), d)
    hma: Dict[str, HmaOutput] = field(default_factory=dict)
    aed: Optional[Tensor] = None             # (n, 3)
    aec: Optional[Dict[int, Tensor]] = None  # position → (steps, vocab_size)
    attention: List[Tensor] = field(default_factory=list)

    def probability_rows(self) -> List[Tensor]:
        """Every softmax output of the pass"""
        result = [self.emotion] + self.attention
        if self.aed is not None:
            result.append(self.aed)
        if self.aec:
            result.extend(self.aec[k] for k in sorted(self.aec))
        return result
