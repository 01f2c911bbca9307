import csv
import logging
import math
from copy import copy
from pathlib import Path
from typing import List, Tuple

import numpy as np
import numpy.testing as npt
import pytest

from ser.const import metrics_header
from ser.coordinators import run_eval, run_strip, run_train
from ser.harness import (Checkpoint, CheckpointFormatError, ModeMismatchError,
                         NonFiniteLossError, ablate, confusion_matrix, evaluate,
                         load_checkpoint, metrics_row, recalls, save_checkpoint, train, uar,
                         write_metrics_csv)
from ser.harness.evaluator import report_from_predictions
from ser.model import get_mode, init_params, is_aux
from ser.synthdata import (Corpus, CorpusSpec, CorruptionSpec, corrupt_corpus, gen_corpus,
                           write_corpus)
from ser.util import TrainConfig

DATA_CURATED = Path(__file__).parent.parent / "data_curated"


@pytest.fixture
def trained(tiny_train_config: TrainConfig, tiny_corpus: Corpus) -> Checkpoint:
    checkpoint, _ = train(tiny_train_config, tiny_corpus)
    return checkpoint


def _read_csv(path: Path) -> List[List[str]]:
    with path.open(mode="r", encoding="utf-8", newline="") as f:
        return list(csv.reader(f))


def _write_train_config(path: Path, cfg: TrainConfig, data: Path) -> None:
    keys = ["lr", "batch_size", "epochs", "seed", "mode", "d", "heads", "enc_layers_speech",
            "enc_layers_text", "downsample", "d_max", "max_len", "max_frames", "ffn_dim"]
    lines = [f"{k} = {getattr(cfg, k)}" for k in keys] + [f"data = {data}"]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# = UNWEIGHTED AVERAGE RECALL = #

def test_uar_perfect() -> None:
    report = report_from_predictions([0, 1, 2, 3, 1], [0, 1, 2, 3, 1], 4)
    assert report.uar == 1.0
    npt.assert_array_equal(report.confusion, np.diag([1, 2, 1, 1]))


def test_uar_is_mean_of_recalls() -> None:
    confusion = confusion_matrix([0, 0, 1, 1], [0, 1, 1, 1], 2)
    assert recalls(confusion) == [0.5, 1.0]
    assert uar(confusion) == 0.75


def test_uar_constant_predictor() -> None:
    gold = [0] * 10 + [1] * 3 + [2] * 5 + [3] * 2
    assert uar(confusion_matrix(gold, [1] * len(gold), 4)) == 0.25


def test_uar_skips_absent_classes() -> None:
    confusion = confusion_matrix([0, 0, 2], [0, 1, 2], 4)
    found = recalls(confusion)
    assert math.isnan(found[1]) and math.isnan(found[3])
    assert uar(confusion) == 0.75

    with pytest.raises(ValueError):
        uar(confusion_matrix([], [], 4))


def test_confusion_matrix() -> None:
    rng = np.random.default_rng(0)
    gold = rng.integers(4, size=200).tolist()
    predicted = rng.integers(4, size=200).tolist()
    confusion = confusion_matrix(gold, predicted, 4)

    npt.assert_array_equal(confusion.sum(axis=1), np.bincount(gold, minlength=4))
    npt.assert_array_equal(confusion.sum(axis=0), np.bincount(predicted, minlength=4))

    with pytest.raises(ValueError):
        confusion_matrix([0, 1], [0], 4)


def test_uar_brute_force() -> None:
    rng = np.random.default_rng(1)
    for _ in range(50):
        gold = rng.integers(4, size=40)
        predicted = rng.integers(4, size=40)

        per_class = [np.mean(predicted[gold == c] == c) for c in range(4) if np.any(gold == c)]
        assert uar(confusion_matrix(gold.tolist(), predicted.tolist(), 4)) \
            == pytest.approx(np.mean(per_class))


def test_uar_class_relabeling_invariance() -> None:
    rng = np.random.default_rng(2)
    gold = rng.integers(4, size=60)
    predicted = rng.integers(4, size=60)
    bijection = rng.permutation(4)

    original = uar(confusion_matrix(gold.tolist(), predicted.tolist(), 4))
    renamed = uar(confusion_matrix(bijection[gold].tolist(), bijection[predicted].tolist(), 4))
    assert renamed == pytest.approx(original)


# = CHECKPOINTS = #

def test_checkpoint_round_trip(tmp_path: Path, trained: Checkpoint) -> None:
    first, second = tmp_path / "first.ckpt", tmp_path / "second.ckpt"
    save_checkpoint(trained, str(first))
    loaded = load_checkpoint(str(first))

    assert loaded.config == trained.config
    assert (loaded.mode, loaded.step, loaded.rng_state["seed"]) == ("full", 8, 7)
    assert loaded.params.keys() == trained.params.keys()
    for name, values in trained.params.items():
        npt.assert_array_equal(loaded.params[name], values)

    save_checkpoint(loaded, str(second))
    assert first.read_bytes() == second.read_bytes()


def test_checkpoint_bad_magic(tmp_path: Path) -> None:
    path = tmp_path / "bad.ckpt"
    path.write_bytes(b"NOT A CHECKPOINT")
    with pytest.raises(CheckpointFormatError, match="magic"):
        load_checkpoint(str(path))


def test_checkpoint_truncated(tmp_path: Path, trained: Checkpoint) -> None:
    path = tmp_path / "short.ckpt"
    path.write_bytes(trained.to_bytes()[:-3])
    with pytest.raises(CheckpointFormatError, match="truncated"):
        load_checkpoint(str(path))


def test_checkpoint_trailing_data(tmp_path: Path, trained: Checkpoint) -> None:
    path = tmp_path / "long.ckpt"
    path.write_bytes(trained.to_bytes() + b"\0")
    with pytest.raises(CheckpointFormatError, match="trailing"):
        load_checkpoint(str(path))


def test_checkpoint_unknown_tensor(tmp_path: Path, trained: Checkpoint) -> None:
    path = tmp_path / "odd.ckpt"
    trained.params["zzz.bogus"] = np.zeros(3)
    save_checkpoint(trained, str(path))
    with pytest.raises(CheckpointFormatError, match="unknown tensor"):
        load_checkpoint(str(path))


def test_stripped_checkpoint(tmp_path: Path, trained: Checkpoint, tiny_corpus: Corpus) -> None:
    full, lean = tmp_path / "full.ckpt", tmp_path / "lean.ckpt"
    save_checkpoint(trained, str(full))
    run_strip(str(full), str(lean))

    stripped = load_checkpoint(str(lean))
    assert not any(is_aux(i) for i in stripped.params)
    assert any(is_aux(i) for i in trained.params)
    assert lean.stat().st_size < full.stat().st_size

    assert evaluate(stripped, tiny_corpus.examples) == evaluate(trained, tiny_corpus.examples)
    assert evaluate(load_checkpoint(str(full), strip_aux=True), tiny_corpus.examples) \
        == evaluate(trained, tiny_corpus.examples)


def test_mode_mismatch(trained: Checkpoint, tiny_corpus: Corpus) -> None:
    with pytest.raises(ModeMismatchError, match="baseline"):
        evaluate(trained, tiny_corpus.examples, mode="baseline")


# = TRAINING = #

def test_zero_epochs(tiny_train_config: TrainConfig, tiny_corpus: Corpus) -> None:
    cfg = copy(tiny_train_config)
    cfg.epochs = 0
    checkpoint, reports = train(cfg, tiny_corpus)

    assert reports == []
    assert checkpoint.step == 0
    initial = init_params(checkpoint.config, get_mode("full"), cfg.seed)
    for name, tensor in initial.items():
        npt.assert_array_equal(checkpoint.params[name], tensor.values)


def test_training_is_reproducible(tmp_path: Path, tiny_train_config: TrainConfig,
                                  tiny_corpus: Corpus) -> None:
    outputs: List[Tuple[bytes, str]] = []
    for run in ("a", "b"):
        checkpoint, reports = train(tiny_train_config, tiny_corpus)
        metrics = tmp_path / f"{run}.csv"
        write_metrics_csv(str(metrics), 4, [metrics_row("run", "full", 7, i) for i in reports])
        outputs.append((checkpoint.to_bytes(), metrics.read_text(encoding="utf-8")))

    assert outputs[0] == outputs[1]


def test_training_reports(tiny_train_config: TrainConfig, tiny_corpus: Corpus) -> None:
    cfg = copy(tiny_train_config)
    cfg.epochs = 3
    cfg.eval_interval = 2
    _, reports = train(cfg, tiny_corpus)

    # Every eval_interval-th epoch and the last one
    assert [i.epoch for i in reports] == [1, 2]
    for report in reports:
        assert 0.0 <= report.uar <= 1.0
        assert report.loss_emo is not None and report.loss_emo > 0
        assert report.loss_d is not None and report.loss_d > 0
        assert report.loss_e is not None and report.loss_e > 0


def test_seed_changes_the_model(tiny_train_config: TrainConfig, tiny_corpus: Corpus) -> None:
    other = copy(tiny_train_config)
    other.seed = 8
    first, _ = train(tiny_train_config, tiny_corpus)
    second, _ = train(other, tiny_corpus)
    assert first.to_bytes() != second.to_bytes()


def test_non_finite_loss(tiny_train_config: TrainConfig, tiny_corpus: Corpus) -> None:
    for example in tiny_corpus.examples:
        example.frames = np.full_like(example.frames, np.nan)

    with np.errstate(invalid="ignore"), pytest.raises(NonFiniteLossError) as error:
        train(tiny_train_config, tiny_corpus)
    assert error.value.batch_id.startswith("epoch 0 batch 0")


def test_empty_corpus(tiny_train_config: TrainConfig) -> None:
    with pytest.raises(ValueError, match="empty corpus"):
        train(tiny_train_config, Corpus(12, 4, 4))


def test_unknown_mode(tiny_train_config: TrainConfig, tiny_corpus: Corpus) -> None:
    cfg = copy(tiny_train_config)
    cfg.mode = "half"
    with pytest.raises(ValueError, match="unknown mode"):
        train(cfg, tiny_corpus)


@pytest.mark.parametrize("mode", ["no-mf", "speech-only", "text-only", "text-baseline"])
def test_train_other_modes(mode: str, tiny_train_config: TrainConfig,
                           tiny_corpus: Corpus) -> None:
    cfg = copy(tiny_train_config)
    cfg.mode = mode
    cfg.epochs = 1
    checkpoint, reports = train(cfg, tiny_corpus)

    assert checkpoint.mode == mode
    assert len(reports) == 1
    assert evaluate(checkpoint, tiny_corpus.examples) == \
        evaluate(checkpoint.stripped(), tiny_corpus.examples)


# = EVALUATION = #

def test_threaded_evaluation(trained: Checkpoint, tiny_corpus: Corpus) -> None:
    sequential = evaluate(trained, tiny_corpus.examples, workers=1)
    threaded = evaluate(trained, tiny_corpus.examples, workers=3)
    assert threaded == sequential
    assert sum(map(sum, sequential.confusion)) == len(tiny_corpus)


def test_evaluation_report(trained: Checkpoint, tiny_corpus: Corpus) -> None:
    report = evaluate(trained, tiny_corpus.examples)
    assert report.loss_emo is not None and report.loss_emo > 0
    assert report.mean_wer is not None and report.mean_wer >= 0
    assert report.loss_d is None and report.loss_e is None

    # Reference transcripts in place of hypotheses
    with_transcripts = evaluate(trained, tiny_corpus.examples, text_source="transcript")
    assert sum(map(sum, with_transcripts.confusion)) == len(tiny_corpus)


def test_absent_classes_are_reported(trained: Checkpoint, tiny_corpus: Corpus,
                                     caplog: pytest.LogCaptureFixture) -> None:
    emotion = tiny_corpus.examples[0].emotion
    subset = [i for i in tiny_corpus.examples if i.emotion == emotion]

    with caplog.at_level(logging.WARNING, logger="MfAec.Evaluator"):
        report = evaluate(trained, subset)

    assert sum(math.isnan(i) for i in report.recalls) == 3
    assert report.uar == report.recalls[emotion]
    warnings = [i.getMessage() for i in caplog.records
                if i.levelno == logging.WARNING and "No gold examples" in i.getMessage()]
    assert len(warnings) == 1
    assert f"{sorted(set(range(4)) - {emotion})}" in warnings[0]

    caplog.clear()
    with caplog.at_level(logging.WARNING, logger="MfAec.Evaluator"):
        evaluate(trained, tiny_corpus.examples)
    assert not any("No gold examples" in i.getMessage() for i in caplog.records) \
        or len({i.emotion for i in tiny_corpus.examples}) < 4


def test_metrics_csv(tmp_path: Path, tiny_train_config: TrainConfig,
                     tiny_corpus: Corpus) -> None:
    _, reports = train(tiny_train_config, tiny_corpus)
    path = tmp_path / "metrics" / "run.csv"
    write_metrics_csv(str(path), 4, [metrics_row("run", "full", 7, i) for i in reports])

    rows = _read_csv(path)
    assert rows[0] == metrics_header(4)
    assert len(rows) == 1 + len(reports)

    for row, report in zip(rows[1:], reports):
        record = dict(zip(rows[0], row))
        assert (record["run_id"], record["mode"], record["seed"]) == ("run", "full", "7")
        assert int(record["epoch"]) == report.epoch
        assert float(record["uar"]) == report.uar
        assert float(record["loss_emo"]) == report.loss_emo
        assert record["wall_s"] == ""


def test_metrics_row_timing() -> None:
    report = report_from_predictions([0, 1], [0, 0], 3)
    report.wall_s = 1.5
    row = metrics_row("r", "full", None, report, timing=True)
    assert row[2] == ""
    assert row[-1] == "1.5"
    assert row[6] == "0.0" and row[7] == "nan"
    assert len(row) == len(metrics_header(3))


# = ABLATION = #

def test_ablation_matches_direct_run(tmp_path: Path, tiny_train_config: TrainConfig,
                                     tiny_corpus: Corpus) -> None:
    table = ablate(tiny_train_config, ["full"], [7], tiny_corpus)
    _, reports = train(tiny_train_config, tiny_corpus)

    assert len(table.runs) == 1
    assert table.runs[0].report == reports[-1]
    assert table.medians() == {"full": reports[-1].uar}

    path = tmp_path / "ablation.csv"
    table.write_csv(str(path))
    rows = _read_csv(path)
    assert rows[0] == metrics_header(4)
    assert rows[1][:3] == ["full-s7", "full", "7"]
    assert rows[2][:2] == ["median-full", "full"]


def test_ablation_csv_holds_the_whole_table(tmp_path: Path, tiny_train_config: TrainConfig,
                                            tiny_corpus: Corpus) -> None:
    cfg = copy(tiny_train_config)
    cfg.epochs = 1
    table = ablate(cfg, ["full", "no-mf"], [7, 8, 9], tiny_corpus)

    path = tmp_path / "ablation.csv"
    table.write_csv(str(path))
    rows = _read_csv(path)

    assert rows == [metrics_header(4)] + table.rows() + table.median_rows()
    assert [i[0] for i in rows[1:7]] == ["full-s7", "full-s8", "full-s9",
                                         "no-mf-s7", "no-mf-s8", "no-mf-s9"]

    medians = {i[1]: float(i[4]) for i in rows[7:]}
    assert medians == table.medians()
    for mode, median in medians.items():
        uars = sorted(float(i[4]) for i in rows[1:7] if i[1] == mode)
        assert median == uars[1]


def test_ablation_validates_modes(tiny_train_config: TrainConfig, tiny_corpus: Corpus) -> None:
    with pytest.raises(ValueError, match="unknown mode"):
        ablate(tiny_train_config, ["full", "bogus"], [1], tiny_corpus)
    with pytest.raises(ValueError):
        ablate(tiny_train_config, [], [1], tiny_corpus)


# = COMMANDS = #

def test_run_train_and_eval(tmp_path: Path, tiny_train_config: TrainConfig,
                            tiny_corpus: Corpus) -> None:
    data = tmp_path / "train.tsv"
    config = tmp_path / "train.txt"
    write_corpus(str(data), tiny_corpus)
    _write_train_config(config, tiny_train_config, data)

    ckpt = tmp_path / "out" / "model.ckpt"
    train_metrics = tmp_path / "out" / "train.csv"
    reports = run_train(str(config), None, str(ckpt), metrics=str(train_metrics))
    assert ckpt.exists()
    assert len(_read_csv(train_metrics)) == 1 + len(reports)

    eval_metrics = tmp_path / "out" / "eval.csv"
    report = run_eval(str(ckpt), str(data), str(eval_metrics), workers=2)
    rows = _read_csv(eval_metrics)
    assert len(rows) == 2
    assert rows[1][:3] == ["model", "full", "7"]
    assert float(rows[1][4]) == report.uar

    # Final training evaluation runs over the training corpus too
    assert report.uar == reports[-1].uar


def test_run_train_needs_data(tmp_path: Path, tiny_train_config: TrainConfig) -> None:
    config = tmp_path / "train.txt"
    config.write_text("epochs = 1\n", encoding="utf-8")
    with pytest.raises(ValueError, match="no training corpus"):
        run_train(str(config), None, str(tmp_path / "model.ckpt"))


# = LONG-RUNNING CHECKS = #

@pytest.fixture(scope="module")
def pinned_corpora() -> Tuple[Corpus, Corpus]:
    spec = CorpusSpec.from_kv(str(DATA_CURATED / "corpus_spec.txt"))
    channel = CorruptionSpec.from_kv(str(DATA_CURATED / "corruption_spec.txt"))

    train_corpus = corrupt_corpus(gen_corpus(spec, 2000, seed=7), channel)
    channel.seed = 8
    eval_corpus = corrupt_corpus(gen_corpus(spec, 500, seed=8), channel)
    return train_corpus, eval_corpus


@pytest.mark.slow
def test_learning_check(pinned_corpora: Tuple[Corpus, Corpus]) -> None:
    train_corpus, eval_corpus = pinned_corpora
    cfg = TrainConfig.from_kv(str(DATA_CURATED / "train_config.txt"))
    cfg.eval_interval = 1

    _, reports = train(cfg, train_corpus, eval_corpus.examples)
    totals = [i.loss_emo + cfg.beta * (cfg.gamma * i.loss_d + i.loss_e)  # type: ignore
              for i in reports[:5]]

    assert all(a > b for a, b in zip(totals, totals[1:]))
    assert max(i.uar for i in reports) >= 0.90


@pytest.mark.slow
def test_ablation_trend(pinned_corpora: Tuple[Corpus, Corpus],
                        caplog: pytest.LogCaptureFixture) -> None:
    train_corpus, eval_corpus = pinned_corpora
    cfg = TrainConfig.from_kv(str(DATA_CURATED / "train_config.txt"))

    with caplog.at_level(logging.INFO, logger="MfAec.ablation"):
        table = ablate(cfg, ["full", "no-mf"], [1, 2, 3, 4, 5], train_corpus,
                       eval_corpus.examples)

    medians = table.medians()
    assert len(table.runs) == 10
    assert any("Median UAR of no-mf" in i.getMessage() for i in caplog.records)
    if medians["full"] < medians["no-mf"]:
        pytest.xfail(f"median UAR of full ({medians['full']:.4f}) below no-mf "
                     f"({medians['no-mf']:.4f})")
