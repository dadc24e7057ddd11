"""Sentence embeddings: positional encodings, hashed TF-IDF, interchange IO.

Dense sentence vectors normally come from a frozen external encoder via the
HGEMB1 interchange format. For offline runs and tests, tfidf_embed builds
deterministic hashed TF-IDF vectors from the same tokenizer the rest of the
pipeline uses. Hierarchical position offsets are added here too, since they
are part of "what a node looks like" before any learned projection.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .corpus import Document, tokenize
from .errors import ConfigError, FormatError

EMBED_MAGIC = b"HGEMB1"
ENCODER_DIM = 768


@dataclass(frozen=True)
class PositionalConfig:
    """Weights for the two position terms added to each sentence vector."""

    gamma1: float = 0.001
    gamma2: float = 0.001

    def __post_init__(self):
        if self.gamma1 < 0 or self.gamma2 < 0:
            raise ConfigError("position weights must be non-negative")


def positional_encoding(positions, d_model: int) -> np.ndarray:
    """Sinusoidal encoding rows for integer positions.

    Column 2i is sin(pos / 10000^(2i/d_model)) and column 2i+1 is the cosine
    at the same frequency, so d_model must be even.
    """
    if d_model <= 0 or d_model % 2 != 0:
        raise ConfigError(f"d_model must be positive and even, got {d_model}")
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 1)
    i = np.arange(d_model // 2, dtype=np.float64)
    freq = np.power(10000.0, -2.0 * i / d_model)
    angles = pos * freq
    out = np.empty((pos.shape[0], d_model), dtype=np.float64)
    out[:, 0::2] = np.sin(angles)
    out[:, 1::2] = np.cos(angles)
    return out


def hierarchical_offsets(sec_idx, sen_idx, d_model: int,
                         cfg: PositionalConfig = PositionalConfig()) -> np.ndarray:
    """gamma1 * PE(section position) + gamma2 * PE(position within section)."""
    sec = positional_encoding(sec_idx, d_model)
    sen = positional_encoding(sen_idx, d_model)
    return cfg.gamma1 * sec + cfg.gamma2 * sen


def initial_node_reps(embeddings: np.ndarray, document: Document,
                      cfg: PositionalConfig = PositionalConfig()) -> np.ndarray:
    """Add hierarchical position offsets to the raw sentence embeddings.

    Shapes must already agree: one row per flattened sentence. The result
    keeps the input dtype (float32 in the training path).
    """
    X = np.asarray(embeddings)
    if X.ndim != 2:
        raise ConfigError("embeddings must be a 2-D matrix")
    if X.shape[0] != document.n_sentences:
        raise ConfigError(f"embedding rows {X.shape[0]} != sentence count "
                          f"{document.n_sentences} for document {document.id!r}")
    sec_idx, sen_idx = document.positions()
    off = hierarchical_offsets(sec_idx, sen_idx, X.shape[1], cfg)
    return (X.astype(np.float64) + off).astype(X.dtype)


def hash_bucket(token: str, d: int, seed: int) -> int:
    """Stable bucket for a token; independent of process hash randomization."""
    h = hashlib.blake2b(token.encode("utf-8"), digest_size=8,
                        key=seed.to_bytes(8, "little", signed=False))
    return int.from_bytes(h.digest(), "little") % d


def tfidf_embed(document: Document, d: int = ENCODER_DIM, seed: int = 0) -> np.ndarray:
    """Hashed TF-IDF rows, one per sentence, L2-normalized.

    IDF is the smoothed log over the document's own sentences. Sentences with
    no tokens stay all-zero. Deterministic in (document, d, seed).
    """
    if d < 16:
        raise ConfigError(f"embedding dimension must be >= 16, got {d}")
    sent_tokens = [tokenize(s) for s in document.sentences]
    n = len(sent_tokens)
    df: dict[str, int] = {}
    for toks in sent_tokens:
        for t in set(toks):
            df[t] = df.get(t, 0) + 1
    idf = {t: np.log((1.0 + n) / (1.0 + c)) + 1.0 for t, c in df.items()}
    buckets = {t: hash_bucket(t, d, seed) for t in df}
    X = np.zeros((n, d), dtype=np.float32)
    for row, toks in enumerate(sent_tokens):
        for t in toks:
            X[row, buckets[t]] += idf[t]
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    np.divide(X, norms, out=X, where=norms > 0)
    return X


def save_embeddings(path, X: np.ndarray) -> None:
    """Write the interchange format: HGEMB1, u32 LE n, u32 LE d, f32 LE rows."""
    X = np.ascontiguousarray(X, dtype="<f4")
    if X.ndim != 2:
        raise ConfigError("embeddings must be a 2-D matrix")
    with open(path, "wb") as fh:
        fh.write(EMBED_MAGIC)
        fh.write(struct.pack("<II", X.shape[0], X.shape[1]))
        fh.write(X.tobytes())


def load_embeddings(path, expected_n: int | None = None) -> np.ndarray:
    """Read the interchange format; errors name the offending field."""
    with open(path, "rb") as fh:
        magic = fh.read(len(EMBED_MAGIC))
        if magic != EMBED_MAGIC:
            raise FormatError(f"{path}: field 'magic' is {magic!r}, "
                              f"expected {EMBED_MAGIC!r}")
        head = fh.read(8)
        if len(head) != 8:
            raise FormatError(f"{path}: fields 'n'/'d' are truncated")
        n, d = struct.unpack("<II", head)
        if n == 0 or d == 0:
            raise FormatError(f"{path}: fields 'n'/'d' must be positive, got {n}x{d}")
        payload = fh.read(4 * n * d)
        if len(payload) != 4 * n * d:
            raise FormatError(f"{path}: field 'data' is truncated "
                              f"({len(payload)} of {4 * n * d} bytes)")
        if fh.read(1):
            raise FormatError(f"{path}: field 'data' has trailing bytes")
    if expected_n is not None and n != expected_n:
        raise FormatError(f"{path}: field 'n' is {n}, expected {expected_n}")
    return np.frombuffer(payload, dtype="<f4").reshape(n, d).copy()
