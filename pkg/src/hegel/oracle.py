"""Greedy extractive oracle labels.

Gold summaries are abstractive, so training targets are built by greedily
picking the sentence that most improves the mean of ROUGE-1 F and ROUGE-2 F
against the abstract, stopping when no sentence improves the objective.
"""

from __future__ import annotations

import warnings

from .corpus import Document, tokenize
from .rouge import rouge_n

# Minimum improvement for a greedy step; guards against float noise keeping
# the loop alive on ties.
EPSILON = 1e-9

MAX_ORACLE_SENTS = 30


def _objective(candidate: list[str], reference: list[str]) -> float:
    r1 = rouge_n(candidate, reference, 1).f1
    r2 = rouge_n(candidate, reference, 2).f1
    return 0.5 * (r1 + r2)


def greedy_oracle(document: Document, max_sents: int = MAX_ORACLE_SENTS) -> list[int]:
    """Per-sentence 0/1 labels for the greedy ROUGE-maximizing subset.

    Ties prefer the smaller sentence index; an empty abstract yields all-zero
    labels and a warning. Selection is over sets: candidates are concatenated
    in document order regardless of pick order.
    """
    n = document.n_sentences
    labels = [0] * n
    reference: list[str] = []
    for line in document.abstract:
        reference.extend(tokenize(line))
    if not reference:
        warnings.warn(f"document {document.id!r} has an empty abstract; "
                      "oracle labels are all zero")
        return labels

    sent_tokens = [tokenize(s) for s in document.sentences]
    selected: list[int] = []
    best = 0.0
    while len(selected) < max_sents:
        best_gain_idx = -1
        best_score = best
        for i in range(n):
            if labels[i]:
                continue
            trial = sorted(selected + [i])
            candidate: list[str] = []
            for j in trial:
                candidate.extend(sent_tokens[j])
            score = _objective(candidate, reference)
            if score > best_score + EPSILON:
                best_score = score
                best_gain_idx = i
        if best_gain_idx < 0:
            break
        labels[best_gain_idx] = 1
        selected.append(best_gain_idx)
        best = best_score
    return labels
