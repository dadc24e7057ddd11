"""Document model and JSONL corpus loading.

A document is a flat list of sentences plus a list of named sections that
partition it into contiguous, non-overlapping spans. Everything downstream
(positional encodings, hyperedges, summary selection) indexes into the
flattened sentence list, so the span invariants are enforced here once and
assumed everywhere else.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import DataError

# Default cap on sentences per document. Long-tail documents in the public
# corpora run past 1500 sentences; attention is quadratic-ish in n, so the
# pipeline truncates rather than choke on outliers.
MAX_SENTENCES = 600

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)
_ABSTRACT_OPEN_RE = re.compile(r"(?i)^\s*<s>\s*")
_ABSTRACT_CLOSE_RE = re.compile(r"(?i)\s*</s>\s*$")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on non-alphanumeric runs; digits are kept.

    "COVID-19 viruses" -> ["covid", "19", "viruses"]. Tokens are never empty
    and never contain whitespace, by construction of the pattern.
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Section:
    """A contiguous half-open span [start, stop) of the flattened sentences."""

    name: str
    start: int
    stop: int

    def __len__(self) -> int:
        return self.stop - self.start


@dataclass(frozen=True)
class Document:
    id: str
    sentences: tuple[str, ...]
    sections: tuple[Section, ...]
    abstract: tuple[str, ...]

    @property
    def n_sentences(self) -> int:
        return len(self.sentences)

    def section_of(self, i: int) -> int:
        for j, sec in enumerate(self.sections):
            if sec.start <= i < sec.stop:
                return j
        raise IndexError(f"sentence index {i} out of range")

    def positions(self) -> tuple[list[int], list[int]]:
        """Per-sentence (section index, index within section), both 0-based."""
        sec_idx: list[int] = []
        sen_idx: list[int] = []
        for j, sec in enumerate(self.sections):
            for k in range(len(sec)):
                sec_idx.append(j)
                sen_idx.append(k)
        return sec_idx, sen_idx

    def to_raw(self) -> dict:
        """Inverse of validate() for documents that already passed it."""
        return {
            "article_id": self.id,
            "sections": [
                list(self.sentences[sec.start : sec.stop]) for sec in self.sections
            ],
            "section_names": [sec.name for sec in self.sections],
            "abstract_text": list(self.abstract),
        }


def _check_invariants(doc: Document) -> None:
    pos = 0
    for sec in doc.sections:
        if sec.start != pos or sec.stop <= sec.start:
            raise DataError(
                f"document {doc.id!r}: section spans must be contiguous and non-empty"
            )
        pos = sec.stop
    if pos != doc.n_sentences:
        raise DataError(f"document {doc.id!r}: section spans must cover all sentences")
    if doc.n_sentences == 0:
        raise DataError(f"document {doc.id!r}: no sentences after cleaning")
    for s in doc.sentences:
        if not s.strip():
            raise DataError(f"document {doc.id!r}: blank sentence survived cleaning")


def _clean_abstract(lines: list) -> tuple[str, ...]:
    out = []
    for line in lines:
        if not isinstance(line, str):
            raise DataError("abstract_text entries must be strings")
        line = _ABSTRACT_OPEN_RE.sub("", line)
        line = _ABSTRACT_CLOSE_RE.sub("", line)
        line = line.strip()
        if line:
            out.append(line)
    return tuple(out)


def validate(raw: dict | Document, max_sentences: int = MAX_SENTENCES,
             counters: dict[str, int] | None = None) -> Document:
    """Build a Document from a raw JSONL record, dropping empty parts.

    Raises DataError when the record is structurally broken or has no usable
    sentences. Validating an already-validated document is the identity.
    Dropped-item counts are accumulated into `counters` when given, under
    keys dropped_sentences / dropped_sections / truncated_sentences.
    """
    if isinstance(raw, Document):
        raw = raw.to_raw()
    if not isinstance(raw, dict):
        raise DataError("record must be a JSON object")
    for key, typ in (("article_id", (str, int)), ("sections", list),
                     ("section_names", list), ("abstract_text", list)):
        if key not in raw:
            raise DataError(f"record is missing field {key!r}")
        if not isinstance(raw[key], typ):
            raise DataError(f"field {key!r} has the wrong type")
    doc_id = str(raw["article_id"])
    if not doc_id:
        raise DataError("article_id must be non-empty")
    if len(raw["sections"]) != len(raw["section_names"]):
        raise DataError(
            f"document {doc_id!r}: sections and section_names lengths differ"
        )

    dropped_sent = 0
    dropped_sec = 0
    truncated = 0
    sentences: list[str] = []
    sections: list[Section] = []
    for name, sec_sentences in zip(raw["section_names"], raw["sections"]):
        if not isinstance(sec_sentences, list):
            raise DataError(f"document {doc_id!r}: each section must be a list")
        if not isinstance(name, str):
            raise DataError(f"document {doc_id!r}: section names must be strings")
        start = len(sentences)
        for s in sec_sentences:
            if not isinstance(s, str):
                raise DataError(f"document {doc_id!r}: sentences must be strings")
            s = s.strip()
            if not s:
                dropped_sent += 1
                continue
            if len(sentences) >= max_sentences:
                truncated += 1
                continue
            sentences.append(s)
        if len(sentences) == start:
            dropped_sec += 1
            continue
        sections.append(Section(name=name, start=start, stop=len(sentences)))

    if counters is not None:
        counters["dropped_sentences"] = counters.get("dropped_sentences", 0) + dropped_sent
        counters["dropped_sections"] = counters.get("dropped_sections", 0) + dropped_sec
        counters["truncated_sentences"] = counters.get("truncated_sentences", 0) + truncated

    doc = Document(
        id=doc_id,
        sentences=tuple(sentences),
        sections=tuple(sections),
        abstract=_clean_abstract(raw["abstract_text"]),
    )
    _check_invariants(doc)
    return doc


@dataclass
class LoadResult:
    documents: list[Document] = field(default_factory=list)
    skipped: list[tuple[int, str]] = field(default_factory=list)
    counters: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.documents)


def load_jsonl(path, limit: int | None = None, strict: bool = False,
               max_sentences: int = MAX_SENTENCES) -> LoadResult:
    """Load documents from a JSONL file in file order.

    Records that fail to parse or validate are skipped and reported in the
    result (1-based line numbers); with strict=True the first bad record
    raises instead. `limit` counts accepted documents.
    """
    result = LoadResult()
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if limit is not None and len(result.documents) >= limit:
                break
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                if strict:
                    raise DataError(f"line {line_no}: invalid JSON: {exc}") from exc
                result.skipped.append((line_no, f"invalid JSON: {exc}"))
                continue
            try:
                doc = validate(raw, max_sentences=max_sentences,
                               counters=result.counters)
            except DataError as exc:
                if strict:
                    raise DataError(f"line {line_no}: {exc}") from exc
                result.skipped.append((line_no, str(exc)))
                continue
            result.documents.append(doc)
    return result
