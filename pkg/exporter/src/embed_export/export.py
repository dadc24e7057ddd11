"""Encode a corpus with a pre-trained sentence encoder, one .emb per document.

The interchange layout is fixed little-endian: 6-byte magic ``HGEMB1``, u32
sentence count, u32 width, then float32 rows, so a file for n sentences is
exactly 14 + 4*n*768 bytes. Corpus parsing and cleaning are delegated to
``hegel.corpus.load_jsonl``; the row count therefore always equals the
sentence count the pipeline itself sees for the same file.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from hegel.corpus import load_jsonl

MAGIC = b"HGEMB1"
DIM = 768
DEFAULT_MODEL = "sentence-transformers/all-mpnet-base-v2"


class ExportError(RuntimeError):
    """Job configuration or encoder failure."""


@dataclass(frozen=True)
class ExportJob:
    input_path: str
    out_dir: str
    model_name: str = DEFAULT_MODEL
    batch_size: int = 32
    limit: int | None = None

    def __post_init__(self):
        if self.batch_size < 1:
            raise ExportError(f"batch size must be >= 1, got {self.batch_size}")


def load_encoder(model_name: str):
    """Returns encode(sentences, batch_size) -> float32 (n, width) array.

    Imported late so the exporter stays testable on machines without the
    encoder stack; any hub, cache, or network failure surfaces as ExportError.
    """
    try:
        from sentence_transformers import SentenceTransformer
    except ImportError as exc:
        raise ExportError("sentence-transformers is not installed; "
                          "pip install 'embed-export[encoder]'") from exc
    try:
        model = SentenceTransformer(model_name)
    except Exception as exc:
        raise ExportError(f"cannot load encoder {model_name!r}: {exc}") from exc

    def encode(sentences: list[str], batch_size: int) -> np.ndarray:
        out = model.encode(list(sentences), batch_size=batch_size,
                           convert_to_numpy=True, show_progress_bar=False)
        return np.asarray(out, dtype=np.float32)

    return encode


def write_embeddings(path, matrix: np.ndarray) -> None:
    """Atomic write: the finished temp file is renamed over `path` or nothing is."""
    X = np.ascontiguousarray(matrix, dtype="<f4")
    if X.ndim != 2:
        raise ExportError(f"embedding matrix must be 2-D, got {X.ndim}-D")
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name + ".",
                               suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(MAGIC)
            fh.write(struct.pack("<II", X.shape[0], X.shape[1]))
            fh.write(X.tobytes(order="C"))
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.unlink(tmp)


def export_embeddings(job: ExportJob, encoder=None) -> dict:
    """Write one .emb per document plus manifest.json; returns the manifest.

    `encoder` defaults to the job's named sentence-transformer; tests inject
    a stub with the same (sentences, batch_size) -> array signature.
    """
    result = load_jsonl(job.input_path, limit=job.limit)
    if not result.documents:
        raise ExportError(f"{job.input_path}: no usable documents")
    if encoder is None:
        # After corpus validation: a bad input should fail before the
        # multi-second encoder load, not after.
        encoder = load_encoder(job.model_name)

    out_dir = Path(job.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = {}
    for doc in result.documents:
        X = encoder(list(doc.sentences), job.batch_size)
        X = np.asarray(X)
        if X.shape != (doc.n_sentences, DIM):
            raise ExportError(f"{doc.id}: encoder returned {tuple(X.shape)}, "
                              f"expected ({doc.n_sentences}, {DIM})")
        path = out_dir / f"{doc.id}.emb"
        write_embeddings(path, X)
        entries[doc.id] = {"file": path.name, "n": doc.n_sentences, "d": DIM,
                           "bytes": path.stat().st_size}

    manifest = {"model": job.model_name, "dim": DIM, "documents": entries,
                "skipped_lines": len(result.skipped)}
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8")
    return manifest
