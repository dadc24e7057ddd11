"""Incidence-matrix hypergraphs and the on-disk graph cache.

A document's graph has one node per sentence and three families of
hyperedges: sections (every sentence in exactly one), latent topics (argmax
membership), and shared keywords. Topic and keyword edges outside the degree
band are dropped at fusion time; section edges are structural and exempt.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .corpus import Document
from .embed import tfidf_embed
from .errors import DataError, FormatError
from .keywords import Keyword, extract_keywords, keyword_hyperedges
from .topics import default_topic_count, fit_lda, topic_hyperedges

GRAPH_MAGIC = b"HGGRF1"

MIN_DEGREE = 5
MAX_DEGREE = 25

EDGE_SECTION = "section"
EDGE_TOPIC = "topic"
EDGE_KEYWORD = "keyword"


@dataclass
class Hypergraph:
    """0/1 incidence over (sentence nodes) x (typed hyperedges)."""

    incidence: np.ndarray            # (n, m) uint8
    edge_types: tuple[str, ...]      # len m, values EDGE_*
    section_names: tuple[str, ...] = ()
    topic_ids: tuple[int, ...] = ()
    keyword_phrases: tuple[str, ...] = ()

    @property
    def n_nodes(self) -> int:
        return self.incidence.shape[0]

    @property
    def n_edges(self) -> int:
        return self.incidence.shape[1]

    def degrees(self) -> np.ndarray:
        return self.incidence.sum(axis=0)

    def edge_members(self, j: int) -> np.ndarray:
        return np.flatnonzero(self.incidence[:, j])

    def columns_of(self, edge_type: str) -> np.ndarray:
        return np.asarray([i for i, t in enumerate(self.edge_types) if t == edge_type])

    def validate(self) -> None:
        A = self.incidence
        if A.ndim != 2:
            raise DataError("incidence must be 2-D")
        if not np.isin(A, (0, 1)).all():
            raise DataError("incidence entries must be 0 or 1")
        if len(self.edge_types) != A.shape[1]:
            raise DataError("edge_types length must match edge count")
        if (A.sum(axis=0) == 0).any():
            raise DataError("empty hyperedge column")
        if (A.sum(axis=1) == 0).any():
            raise DataError("isolated node: every sentence needs at least "
                            "its section edge")
        sec = self.columns_of(EDGE_SECTION)
        if sec.size == 0:
            raise DataError("graph has no section edges")
        if not (A[:, sec].sum(axis=1) == 1).all():
            raise DataError("each sentence must belong to exactly one section edge")


def section_hyperedges(document: Document) -> np.ndarray:
    """(n, #sections) incidence; rows sum to exactly 1 by the span invariants."""
    n = document.n_sentences
    A = np.zeros((n, len(document.sections)), dtype=np.uint8)
    for j, sec in enumerate(document.sections):
        A[sec.start : sec.stop, j] = 1
    return A


def fuse(a_section: np.ndarray, a_topic: np.ndarray, a_keyword: np.ndarray,
         min_deg: int = MIN_DEGREE, max_deg: int = MAX_DEGREE,
         section_names: tuple[str, ...] = (),
         topic_ids: tuple[int, ...] = (),
         keyword_phrases: tuple[str, ...] = ()) -> Hypergraph:
    """Concatenate section | topic | keyword columns with degree filtering.

    Topic and keyword columns whose degree falls outside [min_deg, max_deg]
    are dropped; section columns are never filtered. Column order within each
    family is preserved.
    """
    if min_deg < 1 or max_deg < min_deg:
        raise DataError(f"bad degree band [{min_deg}, {max_deg}]")

    def _band(A: np.ndarray, meta: tuple) -> tuple[np.ndarray, tuple]:
        if A.shape[1] == 0:
            return A, meta
        deg = A.sum(axis=0)
        keep = (deg >= min_deg) & (deg <= max_deg)
        kept_meta = tuple(m for m, k in zip(meta, keep) if k) if meta else ()
        return A[:, keep], kept_meta

    a_topic, topic_ids = _band(np.asarray(a_topic, dtype=np.uint8), topic_ids)
    a_keyword, keyword_phrases = _band(np.asarray(a_keyword, dtype=np.uint8),
                                       keyword_phrases)
    a_section = np.asarray(a_section, dtype=np.uint8)
    A = np.concatenate([a_section, a_topic, a_keyword], axis=1)
    types = ((EDGE_SECTION,) * a_section.shape[1]
             + (EDGE_TOPIC,) * a_topic.shape[1]
             + (EDGE_KEYWORD,) * a_keyword.shape[1])
    hg = Hypergraph(incidence=A, edge_types=types, section_names=section_names,
                    topic_ids=topic_ids, keyword_phrases=keyword_phrases)
    hg.validate()
    return hg


@dataclass
class GraphBuildResult:
    graph: Hypergraph
    keywords: list[Keyword] = field(default_factory=list)
    n_topics: int = 0


def doc_seed(seed: int, article_id: str) -> int:
    """Stable per-document seed so results never depend on corpus order."""
    h = hashlib.blake2b(article_id.encode("utf-8"), digest_size=8,
                        key=seed.to_bytes(8, "little", signed=False))
    return int.from_bytes(h.digest(), "little") & 0x7FFFFFFF


def build_graph(document: Document, *, seed: int = 0,
                topics_max: int = 100, lda_alpha: float = 0.1,
                lda_beta: float = 0.01, lda_sweeps: int = 200,
                keywords_k: int = 20, min_deg: int = MIN_DEGREE,
                max_deg: int = MAX_DEGREE,
                embeddings: np.ndarray | None = None,
                hash_dim: int = 768) -> GraphBuildResult:
    """Build one document's hypergraph: sections + LDA topics + keywords.

    When no encoder embeddings are given, keyword scoring falls back to the
    hashed TF-IDF space at hash_dim. The per-document seed is derived from
    (seed, article id), so rebuilding any subset of a corpus is bit-identical.
    """
    dseed = doc_seed(seed, document.id)
    n = document.n_sentences

    a_sec = section_hyperedges(document)
    sec_names = tuple(s.name for s in document.sections)

    k_topics = default_topic_count(n, cap=topics_max)
    model = fit_lda(list(document.sentences), k_topics, alpha=lda_alpha,
                    beta=lda_beta, sweeps=lda_sweeps, seed=dseed)
    a_topic, topic_ids = topic_hyperedges(model, n)

    if embeddings is None:
        emb = tfidf_embed(document, d=hash_dim, seed=dseed)
        hash_cfg = (hash_dim, dseed)
    else:
        emb = embeddings
        hash_cfg = None
    kws = extract_keywords(document, emb, k=keywords_k, hash_cfg=hash_cfg)
    a_kw, kept_kws = keyword_hyperedges(document, kws)

    hg = fuse(a_sec, a_topic, a_kw, min_deg=min_deg, max_deg=max_deg,
              section_names=sec_names, topic_ids=tuple(topic_ids),
              keyword_phrases=tuple(kw.text for kw in kept_kws))
    return GraphBuildResult(graph=hg, keywords=kws, n_topics=model.n_topics)


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def save_graph(path, hg: Hypergraph, article_id: str,
               manifest_hash: str = "") -> None:
    """Graph cache record: magic, u32 LE header length, JSON header, then one
    little-endian packed bitset row per node (ceil(m/8) bytes each).
    """
    header = {
        "article_id": article_id,
        "n": hg.n_nodes,
        "m": hg.n_edges,
        "edge_types": list(hg.edge_types),
        "degrees": [int(d) for d in hg.degrees()],
        "section_names": list(hg.section_names),
        "topic_ids": [int(t) for t in hg.topic_ids],
        "keyword_phrases": list(hg.keyword_phrases),
        "manifest_hash": manifest_hash,
    }
    blob = _canonical_json(header)
    packed = np.packbits(hg.incidence.astype(bool), axis=1, bitorder="little")
    with open(path, "wb") as fh:
        fh.write(GRAPH_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        fh.write(packed.tobytes())


def load_graph(path) -> tuple[Hypergraph, dict]:
    with open(path, "rb") as fh:
        magic = fh.read(len(GRAPH_MAGIC))
        if magic != GRAPH_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}, expected {GRAPH_MAGIC!r}")
        raw_len = fh.read(4)
        if len(raw_len) != 4:
            raise FormatError(f"{path}: truncated header length")
        (hlen,) = struct.unpack("<I", raw_len)
        blob = fh.read(hlen)
        if len(blob) != hlen:
            raise FormatError(f"{path}: truncated header")
        try:
            header = json.loads(blob)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}: header is not valid JSON") from exc
        for key in ("article_id", "n", "m", "edge_types"):
            if key not in header:
                raise FormatError(f"{path}: header missing {key!r}")
        n, m = int(header["n"]), int(header["m"])
        row_bytes = (m + 7) // 8
        payload = fh.read(n * row_bytes)
        if len(payload) != n * row_bytes:
            raise FormatError(f"{path}: truncated bitset payload")
        if fh.read(1):
            raise FormatError(f"{path}: trailing bytes after bitset")
    rows = np.frombuffer(payload, dtype=np.uint8).reshape(n, row_bytes)
    A = np.unpackbits(rows, axis=1, count=m, bitorder="little").astype(np.uint8)
    hg = Hypergraph(
        incidence=A,
        edge_types=tuple(header["edge_types"]),
        section_names=tuple(header.get("section_names", ())),
        topic_ids=tuple(header.get("topic_ids", ())),
        keyword_phrases=tuple(header.get("keyword_phrases", ())),
    )
    hg.validate()
    if header.get("degrees") and list(map(int, header["degrees"])) != [
        int(d) for d in hg.degrees()
    ]:
        raise FormatError(f"{path}: stored degrees disagree with bitset")
    return hg, header
