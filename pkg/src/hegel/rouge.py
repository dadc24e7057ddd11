"""ROUGE-N and ROUGE-L over pre-tokenized text.

Counting follows the reference tool: n-gram overlap is clipped multiset
intersection, ROUGE-L uses the plain LCS, and the F score is the balanced
harmonic mean. No stemming and no stopword removal; callers tokenize with
corpus.tokenize so scores are reproducible from raw text.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float


_ZERO = RougeScore(0.0, 0.0, 0.0)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _prf(overlap: int, n_cand: int, n_ref: int) -> RougeScore:
    if overlap == 0:
        return _ZERO
    p = overlap / n_cand
    r = overlap / n_ref
    return RougeScore(p, r, 2.0 * p * r / (p + r))


def rouge_n(candidate: list[str], reference: list[str], n: int) -> RougeScore:
    """Clipped n-gram precision/recall/F1. Empty either side scores zero."""
    if n < 1:
        raise ValueError("n must be >= 1")
    n_cand = max(len(candidate) - n + 1, 0)
    n_ref = max(len(reference) - n + 1, 0)
    if n_cand == 0 or n_ref == 0:
        return _ZERO
    cand = _ngrams(candidate, n)
    ref = _ngrams(reference, n)
    overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
    return _prf(overlap, n_cand, n_ref)


def _lcs_len(a: list[str], b: list[str]) -> int:
    # Rolling single-row DP; O(len(a) * len(b)) time, O(len(b)) space.
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[-1]


def rouge_l(candidate: list[str], reference: list[str]) -> RougeScore:
    """Summary-level ROUGE-L on the concatenated token sequences."""
    if not candidate or not reference:
        return _ZERO
    return _prf(_lcs_len(candidate, reference), len(candidate), len(reference))
