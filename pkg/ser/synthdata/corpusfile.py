import logging
from typing import IO, Dict, Iterator, List, Protocol

import numpy as np

from ..const import CORPUS_FIELDS, CORPUS_MAGIC, CORPUS_VERSION, FRAME_DECIMALS
from .dataobj import Corpus, UtteranceExample

"""
Line-oriented corpus files.

The first line is the header:
#MFAEC-CORPUS <TAB> version=1 <TAB> vocab_size=… <TAB> n_emotions=… <TAB> frame_dim=…
    <TAB> fields=id,emotion,transcript,asr,frames_shape,frames
Then every utterance takes one line with the tab-separated fields:
id, emotion id, transcript ids, ASR ids (both space-separated), `m×frame_dim`,
and the m·frame_dim frame values, row-major, space-separated fixed-point decimals.
"""

_logger = logging.getLogger("MfAec.corpusfile")

_HEADER_KEYS = ["version", "vocab_size", "n_emotions", "frame_dim", "fields"]


class CorpusFormatError(ValueError):
    def __init__(self, line_no: int, field: str, message: str) -> None:
        super().__init__(f"line {line_no}, field {field!r}: {message}")
        self.line_no = line_no
        self.field = field


class _WithReadline(Protocol):
    def readline(self) -> str:
        ...


def _format_ids(ids: List[int]) -> str:
    return " ".join(str(i) for i in ids)


def format_record(example: UtteranceExample) -> str:
    m, frame_dim = example.frames.shape
    frames = " ".join(f"{v:.{FRAME_DECIMALS}f}" for v in example.frames.ravel())
    return "\t".join([
        example.id,
        str(example.emotion),
        _format_ids(example.transcript),
        _format_ids(example.asr),
        f"{m}x{frame_dim}",
        frames,
    ])


def format_header(corpus: Corpus) -> str:
    return "\t".join([
        CORPUS_MAGIC,
        f"version={CORPUS_VERSION}",
        f"vocab_size={corpus.vocab_size}",
        f"n_emotions={corpus.n_emotions}",
        f"frame_dim={corpus.frame_dim}",
        f"fields={','.join(CORPUS_FIELDS)}",
    ])


def write_corpus(path: str, corpus: Corpus) -> None:
    with open(path, mode="w", encoding="utf-8", newline="\n") as f:
        f.write(format_header(corpus) + "\n")
        for example in corpus.examples:
            f.write(format_record(example) + "\n")

    _logger.info(f"Wrote {len(corpus)} utterances to {path}")


class Parser:
    """
    Reads a corpus file. Call parse_header() first, then exhaust parse_records().
    Every malformed line raises CorpusFormatError naming the line and the field.
    """

    def __init__(self, reader: _WithReadline) -> None:
        self.r = reader
        self.line_no = 0
        self.vocab_size = 0
        self.n_emotions = 0
        self.frame_dim = 0

    def _error(self, field: str, message: str) -> CorpusFormatError:
        return CorpusFormatError(self.line_no, field, message)

    def _int(self, field: str, raw: str, low: int = 0, high: int = -1) -> int:
        try:
            value = int(raw)
        except ValueError:
            raise self._error(field, f"not an integer: {raw!r}") from None
        if value < low or (high >= 0 and value >= high):
            raise self._error(field, f"value {value} out of range")
        return value

    def _ids(self, field: str, raw: str) -> List[int]:
        return [self._int(field, i, 0, self.vocab_size) for i in raw.split()]

    def parse_header(self) -> None:
        line = self.r.readline()
        self.line_no = 1
        parts = line.rstrip("\r\n").split("\t")

        if not line or parts[0] != CORPUS_MAGIC:
            raise self._error("magic", f"expected {CORPUS_MAGIC!r}")

        values: Dict[str, str] = {}
        for part in parts[1:]:
            key, sep, value = part.partition("=")
            if not sep or key not in _HEADER_KEYS:
                raise self._error("header", f"unexpected entry {part!r}")
            values[key] = value

        missing = [i for i in _HEADER_KEYS if i not in values]
        if missing:
            raise self._error(missing[0], "missing from the header")

        if self._int("version", values["version"]) != CORPUS_VERSION:
            raise self._error("version", f"unsupported version {values['version']} "
                                         f"(expected {CORPUS_VERSION})")
        if values["fields"] != ",".join(CORPUS_FIELDS):
            raise self._error("fields", f"unexpected field list {values['fields']!r}")

        self.vocab_size = self._int("vocab_size", values["vocab_size"], 1)
        self.n_emotions = self._int("n_emotions", values["n_emotions"], 1)
        self.frame_dim = self._int("frame_dim", values["frame_dim"], 1)

    def _frames(self, shape_raw: str, values_raw: str) -> np.ndarray:
        m_raw, sep, dim_raw = shape_raw.partition("x")
        if not sep:
            raise self._error("frames_shape", f"expected 'm x frame_dim', got {shape_raw!r}")
        m = self._int("frames_shape", m_raw)
        if self._int("frames_shape", dim_raw) != self.frame_dim:
            raise self._error("frames_shape", f"frame size {dim_raw} differs from the "
                                              f"header's {self.frame_dim}")

        try:
            values = [float(i) for i in values_raw.split()]
        except ValueError as e:
            raise self._error("frames", str(e)) from None

        if len(values) != m * self.frame_dim:
            raise self._error("frames", f"{len(values)} values for shape "
                                        f"{m}x{self.frame_dim}")
        if not all(np.isfinite(values)):
            raise self._error("frames", "non-finite value")

        return np.array(values, dtype=np.float64).reshape(m, self.frame_dim)

    def parse_records(self) -> Iterator[UtteranceExample]:
        while (line := self.r.readline()):
            self.line_no += 1
            line = line.rstrip("\r\n")
            if not line:
                continue

            parts = line.split("\t")
            if len(parts) != len(CORPUS_FIELDS):
                field = CORPUS_FIELDS[min(len(parts), len(CORPUS_FIELDS) - 1)]
                raise self._error(field, f"expected {len(CORPUS_FIELDS)} fields, "
                                         f"got {len(parts)}")

            utt_id, emotion, transcript, asr, shape, frames = parts
            if not utt_id:
                raise self._error("id", "empty utterance id")

            yield UtteranceExample(
                id=utt_id,
                frames=self._frames(shape, frames),
                asr=self._ids("asr", asr),
                transcript=self._ids("transcript", transcript),
                emotion=self._int("emotion", emotion, 0, self.n_emotions),
            )


def read_corpus(path: str) -> Corpus:
    with open(path, mode="r", encoding="utf-8", newline="") as f:
        return _read(f, path)


def _read(f: IO[str], path: str) -> Corpus:
    parser = Parser(f)
    parser.parse_header()
    corpus = Corpus(parser.vocab_size, parser.n_emotions, parser.frame_dim,
                    list(parser.parse_records()))

    _logger.info(f"Loaded {len(corpus)} utterances from {path}")
    return corpus
