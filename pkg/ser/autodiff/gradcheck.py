import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np

from .tensor import Tape, Tensor

"""
Finite-difference verification of the gradients computed by the tape.
"""

_logger = logging.getLogger("MfAec.gradcheck")

_Entry = Tuple[str, Tuple[int, ...]]


@dataclass
class CheckReport:
    """Result of grad_check. Flagged entries are excluded from the pass criterion."""
    tol: float
    max_rel_error: Dict[str, float] = field(default_factory=dict)
    worst_entry: Dict[str, Tuple[int, ...]] = field(default_factory=dict)
    flagged: List[_Entry] = field(default_factory=list)
    nonfinite: List[_Entry] = field(default_factory=list)
    checked: int = 0

    @property
    def passed(self) -> bool:
        return not self.nonfinite and all(e <= self.tol for e in self.max_rel_error.values())

    def failures(self) -> Dict[str, float]:
        return {k: v for k, v in self.max_rel_error.items() if v > self.tol}


def _entries(shape: Tuple[int, ...], max_entries: Optional[int],
             rng: np.random.Generator) -> List[Tuple[int, ...]]:
    every = list(np.ndindex(*shape))
    if max_entries is None or len(every) <= max_entries:
        return every
    picked = rng.choice(len(every), size=max_entries, replace=False)
    return [every[i] for i in sorted(picked)]


def grad_check(f: Callable[[], Tensor], params: Mapping[str, Tensor], h: float = 1e-5,
               tol: float = 1e-4, max_entries: Optional[int] = None, seed: int = 0,
               floor: float = 1e-4, kink_rel: float = 0.1) -> CheckReport:
    """
    Compares gradients from the tape against central differences of f.

    f must be deterministic and compute a scalar from the current values of params.
    The relative error of an entry is |a - n| / max(|a|, |n|, floor): below floor the
    check bounds the absolute error by tol·floor instead, so round-off on vanishing
    gradients doesn't fail it. Pass floor=0 for a purely relative check.
    Entries where the one-sided differences disagree by more than both
    kink_rel × (their magnitude) and 1000·h are flagged as non-differentiable
    points and excluded. With max_entries set, at most that many randomly chosen
    entries of every parameter are checked.
    """
    if h <= 0:
        raise ValueError(f"finite-difference step must be positive (got {h})")

    report = CheckReport(tol=tol)
    rng = np.random.default_rng(seed)

    # Analytic gradients
    with Tape() as tape:
        loss = f()
    analytic = tape.backward(loss)
    f0 = loss.item()
    kink_abs = 1e3 * h

    for name, p in params.items():
        grad = analytic.get(p.node_id)
        grad_values = grad.values if grad is not None else np.zeros_like(p.values)
        worst = 0.0
        worst_idx: Tuple[int, ...] = ()

        for idx in _entries(p.shape, max_entries, rng):
            original = p.values[idx]
            try:
                p.values[idx] = original + h
                f_plus = f().item()
                p.values[idx] = original - h
                f_minus = f().item()
            finally:
                p.values[idx] = original

            a = float(grad_values[idx])
            if not all(np.isfinite([f0, f_plus, f_minus, a])):
                report.nonfinite.append((name, idx))
                continue

            forward = (f_plus - f0) / h
            backward = (f0 - f_minus) / h
            jump = abs(forward - backward)
            if jump > kink_abs and jump > kink_rel * max(abs(forward), abs(backward)):
                _logger.warning(f"{name}{list(idx)}: non-differentiable point, skipped")
                report.flagged.append((name, idx))
                continue

            numeric = (f_plus - f_minus) / (2 * h)
            scale = max(abs(a), abs(numeric), floor)
            rel = abs(a - numeric) / scale if scale > 0 else 0.0
            report.checked += 1
            if rel >= worst:
                worst = rel
                worst_idx = idx

        report.max_rel_error[name] = worst
        report.worst_entry[name] = worst_idx

    return report
