"""Keyword extraction and keyword hyperedges.

Candidates are 1- and 2-grams with no stopword member, scored by cosine
similarity between a candidate vector and the document centroid. Two vector
sources are supported: hashed token buckets (offline, matches tfidf_embed's
hash space) and mean rows of the sentences containing the phrase (for
external encoder embeddings). Sentences sharing a top-k phrase form one
hyperedge per phrase.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .corpus import Document, tokenize
from .embed import hash_bucket
from .errors import DataError

TOP_K = 20


def _load_stopwords() -> frozenset[str]:
    text = resources.files("hegel").joinpath("data/stopwords.txt").read_text("utf-8")
    words = set()
    for line in text.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line)
    return frozenset(words)


STOPWORDS = _load_stopwords()


@dataclass(frozen=True)
class Keyword:
    phrase: tuple[str, ...]
    score: float

    @property
    def text(self) -> str:
        return " ".join(self.phrase)


def _candidates(sent_tokens: list[list[str]]) -> dict[tuple[str, ...], list[int]]:
    """Ordered map phrase -> sentence indices containing it contiguously.

    Insertion order is first-occurrence order over the flattened token
    stream, which is the tie-break order for equal scores.
    """
    found: dict[tuple[str, ...], list[int]] = {}
    for row, toks in enumerate(sent_tokens):
        for i, tok in enumerate(toks):
            grams = []
            if tok not in STOPWORDS and not tok.isdigit():
                grams.append((tok,))
            if i + 1 < len(toks):
                nxt = toks[i + 1]
                if (tok not in STOPWORDS and nxt not in STOPWORDS
                        and not (tok.isdigit() and nxt.isdigit())):
                    grams.append((tok, nxt))
            for gram in grams:
                rows = found.setdefault(gram, [])
                if not rows or rows[-1] != row:
                    rows.append(row)
    return found


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def extract_keywords(document: Document, embeddings: np.ndarray, k: int = TOP_K,
                     hash_cfg: tuple[int, int] | None = None) -> list[Keyword]:
    """Top-k phrases by cosine against the mean sentence embedding.

    With hash_cfg=(d, seed) a candidate's vector is the mean of its tokens'
    unit bucket vectors in the same hashed space tfidf_embed uses; otherwise
    it is the mean of the embedding rows of sentences containing the phrase.
    Ties break toward earlier first occurrence. Deterministic throughout.
    """
    X = np.asarray(embeddings, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != document.n_sentences:
        raise DataError(f"embeddings shape {X.shape} does not cover document "
                        f"{document.id!r} ({document.n_sentences} sentences)")
    sent_tokens = [tokenize(s) for s in document.sentences]
    cands = _candidates(sent_tokens)
    if not cands:
        return []
    centroid = X.mean(axis=0)

    scored: list[Keyword] = []
    if hash_cfg is not None:
        d, seed = hash_cfg
        for phrase in cands:
            vec = np.zeros(d, dtype=np.float64)
            for tok in phrase:
                vec[hash_bucket(tok, d, seed)] += 1.0
            scored.append(Keyword(phrase, _cosine(vec, centroid)))
    else:
        for phrase, rows in cands.items():
            vec = X[rows].mean(axis=0)
            scored.append(Keyword(phrase, _cosine(vec, centroid)))

    order = sorted(range(len(scored)), key=lambda i: (-scored[i].score, i))
    return [scored[i] for i in order[:k]]


def keyword_hyperedges(document: Document,
                       keywords: list[Keyword]) -> tuple[np.ndarray, list[Keyword]]:
    """One incidence column per phrase with at least one containing sentence.

    Membership means the phrase occurs as a contiguous token run in the
    sentence. Returns the (n, q) 0/1 matrix and the surviving keywords,
    column-aligned.
    """
    n = document.n_sentences
    sent_tokens = [tokenize(s) for s in document.sentences]
    cols = []
    kept = []
    for kw in keywords:
        size = len(kw.phrase)
        col = np.zeros(n, dtype=np.uint8)
        for row, toks in enumerate(sent_tokens):
            for i in range(len(toks) - size + 1):
                if tuple(toks[i : i + size]) == kw.phrase:
                    col[row] = 1
                    break
        if col.any():
            cols.append(col)
            kept.append(kw)
    A = np.stack(cols, axis=1) if cols else np.zeros((n, 0), dtype=np.uint8)
    return A, kept
