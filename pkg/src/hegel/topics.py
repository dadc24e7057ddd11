"""Latent topics over a document's sentences via collapsed Gibbs LDA.

Each sentence acts as a pseudo-document; after sampling, every sentence is
assigned its argmax topic and same-topic sentences form one hyperedge. The
sampler consumes a pre-generated uniform stream from numpy's PCG64, so runs
are bit-reproducible for a given seed regardless of the JIT being available.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import tokenize
from .errors import DataError

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda fn: fn

LDA_ALPHA = 0.1
LDA_BETA = 0.01
LDA_SWEEPS = 200
TOPICS_CAP = 100


def default_topic_count(n_sentences: int, cap: int = TOPICS_CAP) -> int:
    """min(cap, max(2, n/5)): a handful of sentences per topic, capped."""
    return min(cap, max(2, n_sentences // 5))


@dataclass
class TopicModel:
    n_topics: int
    vocab: list[str]
    theta: np.ndarray        # (n_sentences, K) pseudo-document topic mixtures
    phi: np.ndarray          # (K, V) topic-word distributions
    assignments: np.ndarray  # (n_sentences,) argmax topic per sentence
    topic_token_counts: np.ndarray  # (K, V) final Gibbs counts, for diagnostics


@njit(cache=True)
def _gibbs_sweeps(token_ids, sent_ids, z, n_kt, n_k, n_mk, alpha, beta,
                  uniforms, probs):
    K = n_k.shape[0]
    V = n_kt.shape[1]
    n_tokens = token_ids.shape[0]
    for sweep in range(uniforms.shape[0]):
        for t in range(n_tokens):
            w = token_ids[t]
            m = sent_ids[t]
            k = z[t]
            n_kt[k, w] -= 1
            n_k[k] -= 1
            n_mk[m, k] -= 1
            total = 0.0
            for kk in range(K):
                p = (n_mk[m, kk] + alpha) * (n_kt[kk, w] + beta) / (n_k[kk] + V * beta)
                total += p
                probs[kk] = total
            u = uniforms[sweep, t] * total
            knew = 0
            while probs[knew] < u and knew < K - 1:
                knew += 1
            z[t] = knew
            n_kt[knew, w] += 1
            n_k[knew] += 1
            n_mk[m, knew] += 1


def fit_lda(sentences: list[list[str]] | list[str], n_topics: int,
            alpha: float = LDA_ALPHA, beta: float = LDA_BETA,
            sweeps: int = LDA_SWEEPS, seed: int = 0) -> TopicModel:
    """Collapsed Gibbs sampling over sentences-as-pseudo-documents.

    Accepts raw sentence strings or pre-tokenized lists. Sentences with no
    in-vocabulary tokens get a uniform theta row. An empty vocabulary across
    the whole document is a data error.
    """
    if n_topics < 1:
        raise DataError(f"n_topics must be >= 1, got {n_topics}")
    tokenized = [tokenize(s) if isinstance(s, str) else list(s) for s in sentences]
    n = len(tokenized)
    vocab: list[str] = []
    index: dict[str, int] = {}
    for toks in tokenized:
        for t in toks:
            if t not in index:
                index[t] = len(vocab)
                vocab.append(t)
    if not vocab:
        raise DataError("cannot fit topics: no tokens in any sentence")
    V = len(vocab)
    K = n_topics

    token_ids: list[int] = []
    sent_ids: list[int] = []
    for m, toks in enumerate(tokenized):
        for t in toks:
            token_ids.append(index[t])
            sent_ids.append(m)
    token_arr = np.asarray(token_ids, dtype=np.int64)
    sent_arr = np.asarray(sent_ids, dtype=np.int64)
    n_tokens = token_arr.shape[0]

    rng = np.random.default_rng(seed)
    z = rng.integers(0, K, size=n_tokens, dtype=np.int64)
    n_kt = np.zeros((K, V), dtype=np.int64)
    n_k = np.zeros(K, dtype=np.int64)
    n_mk = np.zeros((n, K), dtype=np.int64)
    np.add.at(n_kt, (z, token_arr), 1)
    np.add.at(n_k, z, 1)
    np.add.at(n_mk, (sent_arr, z), 1)

    if sweeps > 0 and n_tokens > 0:
        uniforms = rng.random((sweeps, n_tokens))
        probs = np.empty(K, dtype=np.float64)
        _gibbs_sweeps(token_arr, sent_arr, z, n_kt, n_k, n_mk,
                      float(alpha), float(beta), uniforms, probs)

    theta = (n_mk + alpha) / (n_mk.sum(axis=1, keepdims=True) + K * alpha)
    phi = (n_kt + beta) / (n_kt.sum(axis=1, keepdims=True) + V * beta)
    return TopicModel(
        n_topics=K,
        vocab=vocab,
        theta=theta,
        phi=phi,
        assignments=np.argmax(theta, axis=1),
        topic_token_counts=n_kt,
    )


def topic_hyperedges(model: TopicModel, n_sentences: int) -> tuple[np.ndarray, list[int]]:
    """Incidence columns from argmax topic membership.

    Topics with no assigned sentence are dropped. Returns the (n, p) 0/1
    matrix and the surviving topic ids, column-aligned. Every sentence
    belongs to exactly one topic column, so rows sum to 1.
    """
    if model.theta.shape[0] != n_sentences:
        raise DataError(f"topic model covers {model.theta.shape[0]} sentences, "
                        f"expected {n_sentences}")
    cols = []
    kept: list[int] = []
    for k in range(model.n_topics):
        members = model.assignments == k
        if members.any():
            cols.append(members.astype(np.uint8))
            kept.append(k)
    A = np.stack(cols, axis=1) if cols else np.zeros((n_sentences, 0), dtype=np.uint8)
    return A, kept
