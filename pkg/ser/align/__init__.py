from typing import Dict, Iterator, List, Tuple

from .dataobj import AlignmentLabeling, EditCounts, TokenSequence, UnalignableError, Vocab
from .lcs import apply_labeling, label_edits, lcs_align
from .measures import edit_counts, edit_distance, wer

"""
`align` labels ASR hypotheses against reference transcripts (KEEP/DELETE/CHANGE)
and measures their word error rate.
"""


def read_token_lines(path: str) -> Iterator[Tuple[str, List[str]]]:
    """
    Reads a file of utterances, one per line: `id<TAB>space-separated tokens`.
    Yields (id, tokens). Blank lines are skipped.
    """
    with open(path, mode="r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue

            utt_id, sep, tokens = line.partition("\t")
            if not sep:
                raise ValueError(f"{path}:{line_no}: expected 'id<TAB>tokens'")

            yield utt_id, tokens.split()


def format_labeling(utt_id: str, labeling: AlignmentLabeling) -> str:
    """One output line: id, TAB, labels, TAB, `position:target tokens` joined with ';'."""
    if not labeling.alignable:
        return f"{utt_id}\tUNALIGNABLE\t"

    targets = ";".join(
        f"{pos}:{' '.join(str(t) for t in target)}"
        for pos, target in sorted(labeling.targets.items())
    )
    return f"{utt_id}\t{' '.join(labeling.labels)}\t{targets}"


def pair_by_id(hyps: Dict[str, List[str]], refs: Dict[str, List[str]]) \
        -> Iterator[Tuple[str, List[str], List[str]]]:
    """Yields (id, hyp, ref) in reference file order; every reference needs a hypothesis."""
    for utt_id, ref in refs.items():
        hyp = hyps.get(utt_id)
        if hyp is None:
            raise KeyError(f"no hypothesis for utterance {utt_id!r}")
        yield utt_id, hyp, ref
