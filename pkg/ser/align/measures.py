from fractions import Fraction
from typing import List

from .dataobj import EditCounts, TokenSequence

"""
Word error rate - Levenshtein distance over tokens, normalized by the reference length.
"""

# cSpell: words levenshtein


def _distance_table(hyp: TokenSequence, ref: TokenSequence) -> List[List[int]]:
    """table[i][j] = edit distance between hyp[:i] and ref[:j], with unit costs"""
    table = [[j for j in range(len(ref) + 1)]]
    for i in range(1, len(hyp) + 1):
        row = [i] + [0] * len(ref)
        above = table[i - 1]
        for j in range(1, len(ref) + 1):
            cost = 0 if hyp[i - 1] == ref[j - 1] else 1
            row[j] = min(above[j - 1] + cost, above[j] + 1, row[j - 1] + 1)
        table.append(row)
    return table


def edit_distance(hyp: TokenSequence, ref: TokenSequence) -> int:
    return _distance_table(hyp, ref)[len(hyp)][len(ref)]


def edit_counts(hyp: TokenSequence, ref: TokenSequence) -> EditCounts:
    """
    Splits the edit distance into substitutions, deletions (reference tokens missing
    from the hypothesis) and insertions (extra hypothesis tokens).
    Traceback prefers matches/substitutions, then deletions, then insertions.
    """
    table = _distance_table(hyp, ref)
    counts = EditCounts(0, 0, 0)
    i, j = len(hyp), len(ref)

    while i > 0 or j > 0:
        if i > 0 and j > 0:
            cost = 0 if hyp[i - 1] == ref[j - 1] else 1
            if table[i][j] == table[i - 1][j - 1] + cost:
                counts.substitutions += cost
                i -= 1
                j -= 1
                continue

        if j > 0 and table[i][j] == table[i][j - 1] + 1:
            counts.deletions += 1
            j -= 1
        else:
            counts.insertions += 1
            i -= 1

    return counts


def wer(hyp: TokenSequence, ref: TokenSequence) -> Fraction:
    """Word error rate, as an exact fraction."""
    if not ref:
        raise ValueError("word error rate is undefined for an empty reference")
    return Fraction(edit_distance(hyp, ref), len(ref))
