import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from ..align import wer
from ..const import LOG_CLAMP_EPS, metrics_header
from ..model import Mode, ModelConfig, ModelParams, forward_infer, get_mode, missing_for_mode
from ..model.network import select_text
from ..synthdata import UtteranceExample
from ..util import CsvWriter, ensure_parent_exists
from .checkpoint import Checkpoint

"""
Evaluation of the emotion classifier: confusion matrix, per-class recall,
unweighted average recall, and the metrics CSV.
"""


class ModeMismatchError(ValueError):
    pass


@dataclass
class MetricsReport:
    """
    Metrics of one evaluation. Classes without gold examples have a NaN recall
    and don't count towards the UAR.
    """
    uar: float
    recalls: List[float]
    confusion: List[List[int]]   # rows = gold, columns = predicted
    epoch: int = -1
    loss_emo: Optional[float] = None
    loss_d: Optional[float] = None
    loss_e: Optional[float] = None
    mean_wer: Optional[float] = None
    wall_s: float = field(default=0.0, compare=False)


def confusion_matrix(gold: Sequence[int], predicted: Sequence[int],
                     n_classes: int) -> np.ndarray:
    if len(gold) != len(predicted):
        raise ValueError(f"{len(gold)} gold labels for {len(predicted)} predictions")

    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    for g, p in zip(gold, predicted):
        confusion[g, p] += 1
    return confusion


def recalls(confusion: np.ndarray) -> List[float]:
    support = confusion.sum(axis=1)
    return [float(confusion[c, c] / support[c]) if support[c] else math.nan
            for c in range(confusion.shape[0])]


def uar(confusion: np.ndarray) -> float:
    present = [r for r in recalls(confusion) if not math.isnan(r)]
    if not present:
        raise ValueError("unweighted average recall of an empty evaluation set")
    return float(sum(present) / len(present))


def report_from_predictions(gold: Sequence[int], predicted: Sequence[int],
                            n_classes: int) -> MetricsReport:
    confusion = confusion_matrix(gold, predicted, n_classes)
    return MetricsReport(
        uar=uar(confusion),
        recalls=recalls(confusion),
        confusion=confusion.tolist(),
    )


def argmax_lowest(probabilities: np.ndarray) -> int:
    """Index of the largest probability, ties going to the lowest index."""
    return int(np.argmax(probabilities))


def corpus_wer(examples: Sequence[UtteranceExample]) -> Optional[float]:
    """Mean word error rate of the ASR hypotheses, skipping empty transcripts."""
    rates = [wer(i.asr, i.transcript) for i in examples if i.transcript]
    if not rates:
        return None
    return float(sum(rates, Fraction(0)) / len(rates))


class Evaluator:
    """
    Runs the inference path over a corpus. The work may be sharded across threads;
    shards are contiguous and reduced in corpus order.
    """

    def __init__(self, params: ModelParams, config: ModelConfig, mode: Mode,
                 text_source: str = "asr", workers: int = 1) -> None:
        self.logger = logging.getLogger("MfAec.Evaluator")
        problems = missing_for_mode(params, config, mode)
        if problems:
            raise ModeMismatchError(f"parameters don't fit mode {mode.name!r}: "
                                    + "; ".join(problems))

        self.params = params
        self.config = config
        self.mode = mode
        self.text_source = text_source
        self.workers = max(1, workers)

    @classmethod
    def from_checkpoint(cls, checkpoint: Checkpoint, mode: Optional[str] = None,
                        text_source: str = "asr", workers: int = 1) -> "Evaluator":
        return cls(checkpoint.model_params(), checkpoint.config,
                   get_mode(mode or checkpoint.mode), text_source, workers)

    def _predict_one(self, example: UtteranceExample) -> np.ndarray:
        tokens = select_text(example, self.text_source) if self.mode.text else None
        return forward_infer(example.frames, tokens, self.params, self.config,
                             self.mode).values

    def _predict_shard(self, shard: Sequence[UtteranceExample]) -> List[np.ndarray]:
        return [self._predict_one(i) for i in shard]

    def predict(self, examples: Sequence[UtteranceExample]) -> List[np.ndarray]:
        """Emotion probabilities of every example, in corpus order"""
        if self.workers == 1 or len(examples) < 2:
            return self._predict_shard(examples)

        bounds = np.linspace(0, len(examples), self.workers + 1).astype(int)
        shards = [examples[a:b] for a, b in zip(bounds, bounds[1:])]
        self.logger.debug(f"Shard sizes: {[len(i) for i in shards]}")

        with ThreadPoolExecutor(self.workers) as pool:
            results = list(pool.map(self._predict_shard, shards))
        return [p for shard in results for p in shard]

    def evaluate(self, examples: Sequence[UtteranceExample], epoch: int = -1) -> MetricsReport:
        probabilities = self.predict(examples)
        gold = [i.emotion for i in examples]
        predicted = [argmax_lowest(p) for p in probabilities]

        report = report_from_predictions(gold, predicted, self.config.n_emotions)
        absent = [c for c, r in enumerate(report.recalls) if math.isnan(r)]
        if absent:
            self.logger.warning(f"No gold examples of classes {absent}; "
                                f"UAR averages the other {len(report.recalls) - len(absent)}")
        report.epoch = epoch
        report.loss_emo = float(np.mean([
            -math.log(max(p[g], LOG_CLAMP_EPS)) for p, g in zip(probabilities, gold)
        ]))
        report.mean_wer = corpus_wer(examples)
        return report


def evaluate(checkpoint: Checkpoint, examples: Sequence[UtteranceExample],
             mode: Optional[str] = None, text_source: str = "asr",
             workers: int = 1) -> MetricsReport:
    """Evaluates a checkpoint; mode defaults to the one it was trained in."""
    evaluator = Evaluator.from_checkpoint(checkpoint, mode, text_source, workers)
    report = evaluator.evaluate(examples)
    evaluator.logger.info(f"UAR {report.uar:.4f} over {len(examples)} utterances")
    return report


# = METRICS CSV = #

def _cell(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def metrics_row(run_id: str, mode: str, seed: Optional[int], report: MetricsReport,
                timing: bool = False) -> List[str]:
    return [
        run_id, mode, "" if seed is None else str(seed), str(report.epoch), _cell(report.uar),
        *(_cell(i) for i in report.recalls),
        _cell(report.loss_emo), _cell(report.loss_d), _cell(report.loss_e),
        _cell(report.wall_s) if timing else "",
    ]


def summary_row(run_id: str, mode: str, uar_value: float, n_emotions: int) -> List[str]:
    """A row aggregating several runs: no seed, epoch, recalls, losses or timing"""
    row = [""] * len(metrics_header(n_emotions))
    row[0], row[1], row[4] = run_id, mode, _cell(uar_value)
    return row


def write_metrics_header(writer: CsvWriter, n_emotions: int) -> None:
    writer.writerow(metrics_header(n_emotions))


def write_metrics_csv(path: str, n_emotions: int, rows: Sequence[List[str]]) -> None:
    ensure_parent_exists(path)
    with open(path, mode="w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        write_metrics_header(writer, n_emotions)
        for row in rows:
            writer.writerow(row)
