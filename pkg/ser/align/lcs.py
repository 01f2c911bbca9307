from typing import Dict, Hashable, List, Tuple

from ..const import CHANGE, DELETE, KEEP
from .dataobj import AlignmentLabeling, TokenSequence, UnalignableError

"""
LCS alignment of an ASR hypothesis against its reference transcript,
and the KEEP/DELETE/CHANGE labeling derived from it.
"""


def _suffix_table(hyp: TokenSequence, ref: TokenSequence) -> List[List[int]]:
    """table[i][j] = LCS length of hyp[i:] and ref[j:]"""
    n, p = len(hyp), len(ref)
    table = [[0] * (p + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, below = table[i], table[i + 1]
        for j in range(p - 1, -1, -1):
            if hyp[i] == ref[j]:
                row[j] = below[j + 1] + 1
            else:
                row[j] = max(below[j], row[j + 1])
    return table


def lcs_align(hyp: TokenSequence, ref: TokenSequence) -> List[Tuple[int, int]]:
    """
    Returns the (hyp_index, ref_index) pairs of a longest common subsequence.
    Among equally long alignments the leftmost one is picked:
    equal tokens are matched as soon as they're encountered, and otherwise
    a hypothesis token is skipped before a reference token.
    """
    table = _suffix_table(hyp, ref)
    pairs: List[Tuple[int, int]] = []
    i, j = 0, 0

    while i < len(hyp) and j < len(ref):
        if hyp[i] == ref[j]:
            pairs.append((i, j))
            i += 1
            j += 1
        elif table[i + 1][j] >= table[i][j + 1]:
            i += 1
        else:
            j += 1

    return pairs


def label_edits(hyp: TokenSequence, ref: TokenSequence) -> AlignmentLabeling:
    """
    Labels every hypothesis token KEEP, DELETE or CHANGE, so that applying the labels
    reproduces the reference.

    Between consecutive LCS anchors:
    - hypothesis gap tokens facing an empty reference gap are deleted,
    - otherwise the first hypothesis gap token changes into the whole reference gap,
      and the rest of the hypothesis gap is deleted,
    - a reference gap facing an empty hypothesis gap (an insertion) is attached to
      the following anchor (target = inserted tokens + the anchor), or, at the very
      end, to the preceding anchor (target = the anchor + inserted tokens).
    """
    if not hyp:
        return AlignmentLabeling(labels=[]) if not ref else AlignmentLabeling.unalignable()

    pairs = lcs_align(hyp, ref)
    labels = [DELETE] * len(hyp)
    targets: Dict[int, List[Hashable]] = {}

    for i, _ in pairs:
        labels[i] = KEEP

    # Sentinels turn the leading and trailing gaps into ordinary gaps
    bounds = [(-1, -1)] + pairs + [(len(hyp), len(ref))]

    for (prev_i, prev_j), (next_i, next_j) in zip(bounds, bounds[1:]):
        hyp_gap = range(prev_i + 1, next_i)
        ref_gap = list(ref[prev_j + 1:next_j])

        if not ref_gap:
            continue

        elif hyp_gap:
            labels[hyp_gap[0]] = CHANGE
            targets[hyp_gap[0]] = ref_gap

        elif next_i < len(hyp):
            labels[next_i] = CHANGE
            targets[next_i] = ref_gap + [hyp[next_i]]

        else:
            # Trailing insertion - the last token is an anchor, maybe already extended
            anchor = prev_i
            labels[anchor] = CHANGE
            targets[anchor] = targets.get(anchor, [hyp[anchor]]) + ref_gap

    return AlignmentLabeling(labels=labels, targets=targets, anchors=[i for i, _ in pairs])


def apply_labeling(hyp: TokenSequence, labeling: AlignmentLabeling) -> List[Hashable]:
    """Rebuilds the reference: KEEP copies, DELETE drops, CHANGE emits its target."""
    if not labeling.alignable:
        raise UnalignableError("an unalignable labeling can't rebuild its reference")
    if len(labeling.labels) != len(hyp):
        raise ValueError(f"labeling has {len(labeling.labels)} labels for a hypothesis "
                         f"of {len(hyp)} tokens")

    result: List[Hashable] = []
    for pos, (token, label) in enumerate(zip(hyp, labeling.labels)):
        if label == KEEP:
            result.append(token)
        elif label == CHANGE:
            result.extend(labeling.targets[pos])
        elif label != DELETE:
            raise ValueError(f"unknown edit label {label!r} at position {pos}")

    return result
