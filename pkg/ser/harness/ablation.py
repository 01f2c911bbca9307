import logging
import statistics
from copy import copy
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from ..model import get_mode
from ..synthdata import Corpus, UtteranceExample
from ..util import TrainConfig
from .evaluator import MetricsReport, metrics_row, summary_row, write_metrics_csv
from .trainer import train

_logger = logging.getLogger("MfAec.ablation")


@dataclass
class AblationRun:
    mode: str
    seed: int
    report: MetricsReport

    @property
    def run_id(self) -> str:
        return f"{self.mode}-s{self.seed}"


@dataclass
class AblationTable:
    n_emotions: int
    runs: List[AblationRun] = field(default_factory=list)

    def medians(self) -> Dict[str, float]:
        """Median final UAR per mode, in the order the modes were run"""
        by_mode: Dict[str, List[float]] = {}
        for run in self.runs:
            by_mode.setdefault(run.mode, []).append(run.report.uar)
        return {mode: statistics.median(uars) for mode, uars in by_mode.items()}

    def rows(self, timing: bool = False) -> List[List[str]]:
        return [metrics_row(i.run_id, i.mode, i.seed, i.report, timing) for i in self.runs]

    def median_rows(self) -> List[List[str]]:
        """One `median-<mode>` row per mode; only the uar column is filled"""
        return [summary_row(f"median-{mode}", mode, median, self.n_emotions)
                for mode, median in self.medians().items()]

    def write_csv(self, path: str, timing: bool = False) -> None:
        """Per-run rows in run order, followed by the per-mode median rows"""
        write_metrics_csv(path, self.n_emotions, self.rows(timing) + self.median_rows())


def ablate(base: TrainConfig, modes: Sequence[str], seeds: Sequence[int], corpus: Corpus,
           eval_examples: Optional[Sequence[UtteranceExample]] = None) -> AblationTable:
    """Trains and evaluates every (mode, seed) pair; each run reports its final epoch."""
    if not modes or not seeds:
        raise ValueError("ablation needs at least one mode and one seed")
    for mode in modes:
        get_mode(mode)

    table = AblationTable(corpus.n_emotions)

    for mode in modes:
        for seed in seeds:
            cfg = copy(base)
            cfg.mode = mode
            cfg.seed = seed
            # Only the final state is compared
            cfg.eval_interval = max(cfg.epochs, 1)

            _logger.info(f"Training mode {mode}, seed {seed}")
            _, reports = train(cfg, corpus, eval_examples)
            if not reports:
                raise ValueError("ablation runs need at least one epoch")

            table.runs.append(AblationRun(mode, seed, reports[-1]))
            _logger.info(f"{mode}, seed {seed}: UAR {reports[-1].uar:.4f}")

    for mode, median in table.medians().items():
        _logger.info(f"Median UAR of {mode}: {median:.4f}")

    return table
