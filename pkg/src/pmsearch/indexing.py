"""Inverted index over fielded documents and the BM25 per-term score.

Documents carry free-text fields (title, abstract), term-list fields (mesh,
gene annotations) and optional structured demographics for clinical trials.
Statistics (df, postings with positions, lengths) are kept per field because
fields are scored independently.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from math import log
from pathlib import Path

TEXT_FIELDS = ("title", "abstract")
TERM_LIST_FIELDS = ("mesh", "gene")
ALL_FIELDS = TEXT_FIELDS + TERM_LIST_FIELDS

SEX_VALUES = ("male", "female", "all")

# Position gap between entries of a term-list field, so phrases never match
# across entry boundaries.
ENTRY_GAP = 100

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[tuple[str, int]]:
    """Lowercase and split on non-alphanumeric characters.

    Returns (token, position) pairs with 0-based token positions; empty
    tokens are dropped.
    """
    return [(tok, i) for i, tok in enumerate(_TOKEN_RE.findall(text.lower()))]


def tokens_of(text: str) -> list[str]:
    """Token list without positions."""
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Document:
    """A fielded corpus document.

    ``text_fields`` holds running text (title, abstract); ``term_list_fields``
    holds lists of pre-assigned terms (mesh headings, gene tagger output).
    Age bounds and sex are present on clinical-trial documents only.
    """

    doc_id: str
    text_fields: dict[str, str] = field(default_factory=dict)
    term_list_fields: dict[str, list[str]] = field(default_factory=dict)
    min_age: int | None = None
    max_age: int | None = None
    sex: str | None = None

    def __post_init__(self) -> None:
        if not self.doc_id:
            raise ValueError("doc_id must be nonempty")
        if (
            self.min_age is not None
            and self.max_age is not None
            and self.min_age > self.max_age
        ):
            raise ValueError(f"doc {self.doc_id!r}: min_age > max_age")
        if self.sex is not None and self.sex not in SEX_VALUES:
            raise ValueError(f"doc {self.doc_id!r}: bad sex value {self.sex!r}")


@dataclass(frozen=True)
class Bm25Params:
    """BM25 hyperparameters: k1 (tf saturation), b (length normalization)."""

    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self) -> None:
        if not 0.0 <= self.k1 <= 2.0:
            raise ValueError(f"k1 out of range [0, 2]: {self.k1}")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError(f"b out of range [0, 1]: {self.b}")


class FieldStats:
    """Per-field term statistics: df, postings with positions, lengths."""

    __slots__ = ("df", "postings", "doc_length", "avg_length")

    def __init__(self) -> None:
        self.df: dict[str, int] = {}
        # term -> doc_id -> strictly increasing positions
        self.postings: dict[str, dict[str, list[int]]] = {}
        self.doc_length: dict[str, int] = {}
        self.avg_length: float = 0.0

    def tf(self, term: str, doc_id: str) -> int:
        positions = self.postings.get(term)
        if positions is None:
            return 0
        return len(positions.get(doc_id, ()))


class IndexStats:
    """Immutable inverted index. Build once via :func:`build_index`."""

    def __init__(self, doc_count: int, fields: dict[str, FieldStats],
                 structured: dict[str, dict]) -> None:
        self.doc_count = doc_count
        self.fields = fields
        # doc_id -> {"min_age": ..., "max_age": ..., "sex": ...}
        self.structured = structured
        self.doc_ids: tuple[str, ...] = tuple(sorted(structured))

    def field_stats(self, name: str) -> FieldStats:
        try:
            return self.fields[name]
        except KeyError:
            raise KeyError(f"unknown field {name!r}") from None


def _field_tokens(doc: Document, name: str) -> list[tuple[str, int]]:
    """Tokens with positions for one field of one document."""
    if name in doc.text_fields:
        return tokenize(doc.text_fields[name])
    entries = doc.term_list_fields.get(name, [])
    out: list[tuple[str, int]] = []
    base = 0
    for entry in entries:
        toks = tokens_of(entry)
        out.extend((tok, base + i) for i, tok in enumerate(toks))
        base += len(toks) + ENTRY_GAP
    return out


def build_index(docs: list[Document]) -> IndexStats:
    """Build per-field statistics over a document list.

    Rejects duplicate doc ids. The returned index is treated as read-only;
    concurrent searches need no synchronization.
    """
    fields = {name: FieldStats() for name in ALL_FIELDS}
    structured: dict[str, dict] = {}
    for doc in docs:
        if doc.doc_id in structured:
            raise ValueError(f"duplicate doc_id {doc.doc_id!r}")
        structured[doc.doc_id] = {
            "min_age": doc.min_age,
            "max_age": doc.max_age,
            "sex": doc.sex,
        }
        for name, stats in fields.items():
            toks = _field_tokens(doc, name)
            stats.doc_length[doc.doc_id] = len(toks)
            seen: set[str] = set()
            for tok, pos in toks:
                stats.postings.setdefault(tok, {}).setdefault(doc.doc_id, []).append(pos)
                seen.add(tok)
            for tok in seen:
                stats.df[tok] = stats.df.get(tok, 0) + 1
    n = len(docs)
    for stats in fields.values():
        total = sum(stats.doc_length.values())
        stats.avg_length = total / n if n else 0.0
    return IndexStats(n, fields, structured)


def idf(stats: IndexStats, term: str, field_name: str) -> float:
    """ln((N - df + 0.5) / (df + 0.5)); raw value, may go negative.

    Unseen terms use df = 0. An empty corpus is defined to have idf 0.
    """
    n = stats.doc_count
    if n == 0:
        return 0.0
    df = stats.field_stats(field_name).df.get(term, 0)
    return log((n - df + 0.5) / (df + 0.5))


def saturation(tf: float, doc_len: float, avg_len: float, params: Bm25Params) -> float:
    """The tf/length factor: (k1 + 1) tf / (k1 ((1-b) + b L/Lave) + tf)."""
    if tf <= 0:
        return 0.0
    norm = (1.0 - params.b) + params.b * (doc_len / avg_len if avg_len > 0 else 0.0)
    return (params.k1 + 1.0) * tf / (params.k1 * norm + tf)


def bm25_term_score(stats: IndexStats, field_name: str, term: str, doc_id: str,
                    params: Bm25Params) -> float:
    """One term's BM25 summand for one document field; 0 when tf is 0."""
    fs = stats.field_stats(field_name)
    if doc_id not in fs.doc_length:
        raise KeyError(f"unknown doc_id {doc_id!r}")
    tf = fs.tf(term, doc_id)
    if tf == 0:
        return 0.0
    return idf(stats, term, field_name) * saturation(
        tf, fs.doc_length[doc_id], fs.avg_length, params
    )


# ---------------------------------------------------------------------------
# Corpus file I/O (one JSON document per line) and index snapshots.

def document_from_json(obj: dict) -> Document:
    return Document(
        doc_id=str(obj["doc_id"]),
        text_fields={
            "title": str(obj.get("title", "")),
            "abstract": str(obj.get("abstract", "")),
        },
        term_list_fields={
            "mesh": [str(x) for x in obj.get("mesh", [])],
            "gene": [str(x) for x in obj.get("gene", [])],
        },
        min_age=obj.get("min_age"),
        max_age=obj.get("max_age"),
        sex=obj.get("sex"),
    )


def document_to_json(doc: Document) -> dict:
    obj: dict = {
        "doc_id": doc.doc_id,
        "title": doc.text_fields.get("title", ""),
        "abstract": doc.text_fields.get("abstract", ""),
        "mesh": list(doc.term_list_fields.get("mesh", [])),
        "gene": list(doc.term_list_fields.get("gene", [])),
    }
    if doc.min_age is not None:
        obj["min_age"] = doc.min_age
    if doc.max_age is not None:
        obj["max_age"] = doc.max_age
    if doc.sex is not None:
        obj["sex"] = doc.sex
    return obj


def read_corpus(path: str | Path) -> list[Document]:
    """Read a JSON-lines corpus; errors carry 1-based line numbers."""
    docs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                docs.append(document_from_json(obj))
            except (ValueError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad corpus line: {exc}") from exc
    return docs


def write_corpus(docs: list[Document], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc in docs:
            fh.write(json.dumps(document_to_json(doc), sort_keys=True) + "\n")


def save_index(stats: IndexStats, path: str | Path) -> None:
    """Write a deterministic JSON snapshot (byte-identical across runs)."""
    payload = {
        "doc_count": stats.doc_count,
        "structured": stats.structured,
        "fields": {
            name: {
                "df": fs.df,
                "doc_length": fs.doc_length,
                "avg_length": fs.avg_length,
                "postings": fs.postings,
            }
            for name, fs in stats.fields.items()
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))


def load_index(path: str | Path) -> IndexStats:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    fields: dict[str, FieldStats] = {}
    for name, raw in payload["fields"].items():
        fs = FieldStats()
        fs.df = {t: int(v) for t, v in raw["df"].items()}
        fs.doc_length = {d: int(v) for d, v in raw["doc_length"].items()}
        fs.avg_length = float(raw["avg_length"])
        fs.postings = {
            t: {d: [int(p) for p in pos] for d, pos in by_doc.items()}
            for t, by_doc in raw["postings"].items()
        }
        fields[name] = fs
    return IndexStats(int(payload["doc_count"]), fields, payload["structured"])
