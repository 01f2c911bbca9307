import hashlib
from dataclasses import replace
from pathlib import Path

import numpy as np
import numpy.testing as npt
import pytest

from ser.align import edit_distance
from ser.coordinators import run_gen_data
from ser.harness.evaluator import corpus_wer, report_from_predictions
from ser.synthdata import (Corpus, CorpusFormatError, CorpusSpec, CorruptionSpec, corrupt,
                           corrupt_corpus, gen_corpus, read_corpus, write_corpus)

DATA_CURATED = Path(__file__).parent.parent / "data_curated"


# = GENERATION = #

def test_generation_is_deterministic(tiny_corpus_spec: CorpusSpec) -> None:
    first = gen_corpus(tiny_corpus_spec, 50, seed=1)
    second = gen_corpus(tiny_corpus_spec, 50, seed=1)
    assert first.examples == second.examples

    other = gen_corpus(tiny_corpus_spec, 50, seed=2)
    assert first.examples != other.examples


def test_threaded_generation_matches_sequential(tiny_corpus_spec: CorpusSpec) -> None:
    sequential = gen_corpus(tiny_corpus_spec, 40, seed=1)
    threaded = gen_corpus(tiny_corpus_spec, 40, seed=1, workers=4)
    assert sequential.examples == threaded.examples


def test_samples_share_the_acoustic_world(tiny_corpus_spec: CorpusSpec) -> None:
    quiet = replace(tiny_corpus_spec, noise=0.0)
    a = gen_corpus(quiet, 30, seed=1).examples
    b = gen_corpus(quiet, 30, seed=2).examples

    # Same token and emotion ⇒ same noiseless frames, whatever the sampling seed
    first_frames = {(i.emotion, i.transcript[0]): i.frames[0] for i in a}
    for example in b:
        key = (example.emotion, example.transcript[0])
        if key in first_frames:
            npt.assert_array_equal(example.frames[0], first_frames[key])


def test_utterance_shapes(tiny_corpus_spec: CorpusSpec) -> None:
    corpus = gen_corpus(tiny_corpus_spec, 30, seed=3)
    for example in corpus.examples:
        assert 2 <= len(example.transcript) <= 5
        assert example.asr == example.transcript
        assert example.frames.shape == (2 * len(example.transcript), 4)
        assert all(4 <= t < 12 for t in example.transcript)


def test_separable_corpus() -> None:
    spec = CorpusSpec(alpha=1.0, noise=0.0)
    corpus = gen_corpus(spec, 400, seed=4)

    owners = {}
    for example in corpus.examples:
        block = spec.keyword_block(example.emotion)
        assert all(t in block for t in example.transcript)
        for token in example.transcript:
            assert owners.setdefault(token, example.emotion) == example.emotion

    # Unigram counts over the keyword blocks recover every label
    predicted = [
        int(np.argmax([sum(t in spec.keyword_block(c) for t in i.transcript)
                       for c in range(spec.n_emotions)]))
        for i in corpus.examples
    ]
    report = report_from_predictions([i.emotion for i in corpus.examples], predicted,
                                     spec.n_emotions)
    assert report.uar == 1.0


def test_class_balance() -> None:
    corpus = gen_corpus(CorpusSpec(), 4000, seed=7)
    shares = np.array(corpus.class_counts()) / len(corpus)
    assert np.all(np.abs(shares - 0.25) <= 0.05)


def test_token_distribution() -> None:
    spec = CorpusSpec()
    dist = spec.token_distribution(2)
    assert dist.sum() == pytest.approx(1.0)
    assert np.all(dist[:4] == 0)
    assert dist[spec.keyword_block(2).start] > dist[spec.keyword_block(0).start]


def test_invalid_specs() -> None:
    with pytest.raises(ValueError, match="alpha"):
        CorpusSpec(alpha=1.5).validate()
    with pytest.raises(ValueError, match="keyword blocks"):
        CorpusSpec(vocab_size=10).validate()
    with pytest.raises(ValueError):
        gen_corpus(CorpusSpec(), 0)
    with pytest.raises(ValueError, match="p_sub \\+ p_del"):
        CorruptionSpec(p_sub=0.6, p_del=0.6).validate()


def test_spec_files() -> None:
    spec = CorpusSpec.from_kv(str(DATA_CURATED / "corpus_spec.txt"))
    assert (spec.n_emotions, spec.alpha, spec.noise, spec.seed) == (4, 0.9, 0.1, 7)

    channel = CorruptionSpec.from_kv(str(DATA_CURATED / "corruption_spec.txt"))
    assert (channel.p_sub, channel.p_del, channel.p_ins) == (0.1, 0.05, 0.05)


def test_spec_file_unknown_key(tmp_path: Path) -> None:
    path = tmp_path / "spec.txt"
    path.write_text("alpha = 0.5\ncolour = blue\n", encoding="utf-8")
    with pytest.raises(KeyError, match="colour"):
        CorpusSpec.from_kv(str(path))


# = CORRUPTION = #

def test_noiseless_channel() -> None:
    transcript = [4, 8, 15, 16, 23]
    assert corrupt(transcript, CorruptionSpec(0.0, 0.0, 0.0), "u", 40) == transcript


def test_deleting_channel() -> None:
    assert corrupt([4, 8, 15], CorruptionSpec(p_sub=0.0, p_del=1.0, p_ins=0.0), "u", 40) == []


def test_substitutes_differ_from_the_original() -> None:
    transcript = list(range(4, 40))
    hyp = corrupt(transcript, CorruptionSpec(p_sub=1.0, p_del=0.0, p_ins=0.0), "u", 40)
    assert len(hyp) == len(transcript)
    assert all(h != t and 4 <= h < 40 for h, t in zip(hyp, transcript))


def test_corruption_depends_on_the_utterance_id() -> None:
    channel = CorruptionSpec(p_sub=0.3, p_del=0.1, p_ins=0.1, seed=1)
    transcript = list(range(4, 30))
    assert corrupt(transcript, channel, "a", 40) == corrupt(transcript, channel, "a", 40)
    assert corrupt(transcript, channel, "a", 40) != corrupt(transcript, channel, "b", 40)


def test_corruption_keeps_labels_and_transcripts(tiny_corpus_spec: CorpusSpec) -> None:
    corpus = gen_corpus(tiny_corpus_spec, 30, seed=6)
    before = [(i.emotion, list(i.transcript)) for i in corpus.examples]
    corrupt_corpus(corpus, CorruptionSpec(0.3, 0.2, 0.2))
    assert [(i.emotion, i.transcript) for i in corpus.examples] == before


def test_measured_wer_matches_expectation() -> None:
    channel = CorruptionSpec(p_sub=0.1, p_del=0.05, p_ins=0.05, seed=7)
    corpus = corrupt_corpus(gen_corpus(CorpusSpec(), 1000, seed=7), channel)

    edits = sum(edit_distance(i.asr, i.transcript) for i in corpus.examples)
    tokens = sum(len(i.transcript) for i in corpus.examples)
    assert abs(edits / tokens - channel.expected_wer) <= 0.02


def test_mean_utterance_wer_matches_expectation() -> None:
    channel = CorruptionSpec(p_sub=0.1, p_del=0.05, p_ins=0.05, seed=7)
    corpus = corrupt_corpus(gen_corpus(CorpusSpec(), 1000, seed=7), channel)

    mean = corpus_wer(corpus.examples)
    assert mean is not None
    assert abs(mean - channel.expected_wer) <= 0.02


# = CORPUS FILES = #

def test_round_trip(tmp_path: Path, tiny_corpus: Corpus) -> None:
    path = tmp_path / "corpus.tsv"
    write_corpus(str(path), tiny_corpus)
    loaded = read_corpus(str(path))

    assert (loaded.vocab_size, loaded.n_emotions, loaded.frame_dim) == (12, 4, 4)
    assert len(loaded) == len(tiny_corpus)
    for read, written in zip(loaded.examples, tiny_corpus.examples):
        assert (read.id, read.emotion, read.asr, read.transcript) \
            == (written.id, written.emotion, written.asr, written.transcript)
        npt.assert_allclose(read.frames, written.frames, rtol=0, atol=5e-9)


def test_single_utterance_round_trip(tmp_path: Path, tiny_corpus: Corpus) -> None:
    example = tiny_corpus.examples[0]
    example.frames = np.round(example.frames, 8)
    single = Corpus(12, 4, 4, [example])

    path = tmp_path / "single.tsv"
    write_corpus(str(path), single)
    assert read_corpus(str(path)).examples == [example]


def test_rewrite_is_byte_stable(tmp_path: Path) -> None:
    corpus = gen_corpus(CorpusSpec(), 1000, seed=9)
    first, second = tmp_path / "first.tsv", tmp_path / "second.tsv"
    write_corpus(str(first), corpus)
    write_corpus(str(second), read_corpus(str(first)))

    digest = hashlib.sha256(first.read_bytes()).hexdigest()
    assert hashlib.sha256(second.read_bytes()).hexdigest() == digest

    write_corpus(str(second), gen_corpus(CorpusSpec(), 1000, seed=9))
    assert hashlib.sha256(second.read_bytes()).hexdigest() == digest


def test_empty_corpus(tmp_path: Path) -> None:
    path = tmp_path / "empty.tsv"
    write_corpus(str(path), Corpus(40, 4, 8))
    assert len(path.read_text(encoding="utf-8").splitlines()) == 1
    assert read_corpus(str(path)).examples == []


@pytest.mark.parametrize("mangle, line_no, field", [
    (lambda lines: ["#NOT-A-CORPUS"] + lines[1:], 1, "magic"),
    (lambda lines: [lines[0].replace("version=1", "version=9")] + lines[1:], 1, "version"),
    (lambda lines: lines[:2] + ["\t".join(lines[2].split("\t")[:4])] + lines[3:], 3, "frames_shape"),
    (lambda lines: lines[:1] + [lines[1].replace("\t", "\t99 ", 3)] + lines[2:], 2, "asr"),
    (lambda lines: lines[:1] + [lines[1] + " 0.5"] + lines[2:], 2, "frames"),
    (lambda lines: lines[:1] + ["u\t7\t4\t4\t2x4\t" + " ".join(["0"] * 8)] + lines[2:], 2,
     "emotion"),
])
def test_format_errors(tmp_path: Path, tiny_corpus: Corpus, mangle, line_no: int,
                       field: str) -> None:
    path = tmp_path / "corpus.tsv"
    write_corpus(str(path), tiny_corpus)
    lines = path.read_text(encoding="utf-8").splitlines()
    path.write_text("\n".join(mangle(lines)) + "\n", encoding="utf-8")

    with pytest.raises(CorpusFormatError) as error:
        read_corpus(str(path))
    assert error.value.line_no == line_no
    assert error.value.field == field


def test_run_gen_data(tmp_path: Path) -> None:
    out = tmp_path / "data" / "train.tsv"
    run_gen_data(str(DATA_CURATED / "corpus_spec.txt"), 20,
                 str(DATA_CURATED / "corruption_spec.txt"), str(out), seed=3)

    corpus = read_corpus(str(out))
    assert len(corpus) == 20
    assert any(i.asr != i.transcript for i in corpus.examples)
