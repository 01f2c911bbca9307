import logging
import os
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from .align import edit_counts, format_labeling, label_edits, pair_by_id, read_token_lines, wer
from .align.dataobj import EditCounts
from .harness import (ablate, evaluate, load_checkpoint, metrics_row, save_checkpoint, train,
                      write_metrics_csv)
from .harness.evaluator import MetricsReport
from .synthdata import (CorpusSpec, CorruptionSpec, corrupt_corpus, gen_corpus, read_corpus,
                        write_corpus)
from .util import TrainConfig, ensure_parent_exists

"""
Module contains functions that coordinate a single command-line subcommand each.
"""

_logger = logging.getLogger("MfAec.coordinators")


def run_gen_data(spec_path: str, n: int, corrupt_path: Optional[str], out: str,
                 seed: Optional[int] = None, workers: int = 1) -> None:
    spec = CorpusSpec.from_kv(spec_path)
    corpus = gen_corpus(spec, n, seed, workers)

    if corrupt_path:
        corruption = CorruptionSpec.from_kv(corrupt_path)
        if seed is not None:
            corruption.seed = seed
        corrupt_corpus(corpus, corruption)
        _logger.info(f"Corrupted hypotheses (expected WER {corruption.expected_wer:.4f})")

    ensure_parent_exists(out)
    write_corpus(out, corpus)


def run_align(hyp_path: str, ref_path: str, out: Optional[str] = None) -> EditCounts:
    """Writes one labeling line per utterance, and logs the corpus-level WER statistics."""
    hyps = dict(read_token_lines(hyp_path))
    refs = dict(read_token_lines(ref_path))

    lines: List[str] = []
    totals = EditCounts(0, 0, 0)
    rates: List[Fraction] = []

    for utt_id, hyp, ref in pair_by_id(hyps, refs):
        lines.append(format_labeling(utt_id, label_edits(hyp, ref)))

        counts = edit_counts(hyp, ref)
        totals.substitutions += counts.substitutions
        totals.deletions += counts.deletions
        totals.insertions += counts.insertions
        if ref:
            rates.append(wer(hyp, ref))

    if out:
        ensure_parent_exists(out)
        with open(out, mode="w", encoding="utf-8", newline="\n") as f:
            f.writelines(i + "\n" for i in lines)
    else:
        for line in lines:
            print(line)

    if rates:
        mean = sum(rates, Fraction(0)) / len(rates)
        _logger.info(f"Mean WER {float(mean):.4f} over {len(rates)} utterances "
                     f"(S={totals.substitutions}, D={totals.deletions}, "
                     f"I={totals.insertions})")
    return totals


def _overrides(data: Optional[str], eval_data: Optional[str], seed: Optional[int]) \
        -> Dict[str, str]:
    result: Dict[str, str] = {}
    if data:
        result["data"] = data
    if eval_data:
        result["eval_data"] = eval_data
    if seed is not None:
        result["seed"] = str(seed)
    return result


def _load_config(config_path: str, data: Optional[str], eval_data: Optional[str],
                 seed: Optional[int]) -> TrainConfig:
    cfg = TrainConfig.from_kv(config_path, _overrides(data, eval_data, seed))
    if not cfg.data:
        raise ValueError("no training corpus: set 'data' in the config or pass --data")
    return cfg


def run_train(config_path: str, data: Optional[str], out: str,
              eval_data: Optional[str] = None, metrics: Optional[str] = None,
              seed: Optional[int] = None, timing: bool = False) -> List[MetricsReport]:
    cfg = _load_config(config_path, data, eval_data, seed)
    corpus = read_corpus(cfg.data)  # type: ignore
    eval_examples = read_corpus(cfg.eval_data).examples if cfg.eval_data else None

    checkpoint, reports = train(cfg, corpus, eval_examples)
    save_checkpoint(checkpoint, out)

    if metrics:
        run_id = os.path.splitext(os.path.basename(out))[0]
        rows = [metrics_row(run_id, cfg.mode, cfg.seed, i, timing) for i in reports]
        write_metrics_csv(metrics, corpus.n_emotions, rows)

    return reports


def run_eval(ckpt: str, data: str, metrics: Optional[str] = None, strip_aux: bool = False,
             mode: Optional[str] = None, workers: int = 1, text_source: str = "asr",
             timing: bool = False) -> MetricsReport:
    checkpoint = load_checkpoint(ckpt, strip_aux)
    corpus = read_corpus(data)
    report = evaluate(checkpoint, corpus.examples, mode, text_source, workers)

    if report.mean_wer is not None:
        _logger.info(f"Mean WER of the evaluated hypotheses: {report.mean_wer:.4f}")

    if metrics:
        run_id = os.path.splitext(os.path.basename(ckpt))[0]
        seed = checkpoint.rng_state.get("seed")
        row = metrics_row(run_id, mode or checkpoint.mode, seed, report, timing)
        write_metrics_csv(metrics, checkpoint.config.n_emotions, [row])

    return report


def run_ablate(config_path: str, modes: Sequence[str], seeds: Sequence[int], out: str,
               data: Optional[str] = None, eval_data: Optional[str] = None,
               timing: bool = False) -> None:
    cfg = _load_config(config_path, data, eval_data, None)
    corpus = read_corpus(cfg.data)  # type: ignore
    eval_examples = read_corpus(cfg.eval_data).examples if cfg.eval_data else None

    table = ablate(cfg, modes, seeds, corpus, eval_examples)
    table.write_csv(out, timing)


def run_strip(ckpt: str, out: str) -> None:
    save_checkpoint(load_checkpoint(ckpt, strip_aux=True), out)
