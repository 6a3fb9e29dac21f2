"""Compositional query trees and their scoring semantics.

Node kinds: single-term and phrase matches, multi-field bag-of-words,
boolean compounds (must / should / must_not / filter), disjunction-max,
multiplicative weights (negative allowed), and non-scoring demographic
filters. Scores bottom out in the per-term BM25 summand; a phrase scores
like a term whose tf is the exact-adjacency occurrence count and whose df
is the number of documents containing the phrase.

Trees are immutable values and scoring is pure, so concurrent searches
over a built index are safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import isfinite, log

from .indexing import Bm25Params, IndexStats, saturation


@dataclass(frozen=True)
class Term:
    field: str
    term: str


@dataclass(frozen=True)
class Phrase:
    field: str
    terms: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.terms:
            raise ValueError("Phrase needs at least one term")


@dataclass(frozen=True)
class BagOfWords:
    fields: tuple[str, ...]
    terms: tuple[str, ...]


@dataclass(frozen=True)
class Bool:
    must: tuple["QueryNode", ...] = ()
    should: tuple["QueryNode", ...] = ()
    must_not: tuple["QueryNode", ...] = ()
    filter: tuple["QueryNode", ...] = ()


@dataclass(frozen=True)
class DisMax:
    subqueries: tuple["QueryNode", ...]

    def __post_init__(self) -> None:
        if not self.subqueries:
            raise ValueError("DisMax needs at least one subquery")


@dataclass(frozen=True)
class Weighted:
    child: "QueryNode"
    weight: float

    def __post_init__(self) -> None:
        if not isfinite(self.weight):
            raise ValueError("weight must be finite")


@dataclass(frozen=True)
class AgeRange:
    """Non-scoring filter: document's [min_age, max_age] must contain age."""

    age: int


@dataclass(frozen=True)
class SexFilter:
    """Non-scoring filter: document sex equals the given sex or 'all'."""

    sex: str


QueryNode = Term | Phrase | BagOfWords | Bool | DisMax | Weighted | AgeRange | SexFilter


@dataclass(frozen=True)
class ScoredHit:
    doc_id: str
    score: float
    rank: int


def phrase_occurrences(stats: IndexStats, field_name: str,
                       terms: tuple[str, ...]) -> dict[str, int]:
    """Exact-adjacency occurrence counts per document (slop 0)."""
    fs = stats.field_stats(field_name)
    first = fs.postings.get(terms[0])
    if first is None:
        return {}
    counts: dict[str, int] = {}
    rest = [fs.postings.get(t) for t in terms[1:]]
    if any(p is None for p in rest):
        return {}
    for doc_id, positions in first.items():
        later = []
        for p in rest:
            by_doc = p.get(doc_id)  # type: ignore[union-attr]
            if by_doc is None:
                break
            later.append(set(by_doc))
        else:
            count = sum(
                1
                for pos in positions
                if all(pos + offset + 1 in later[offset] for offset in range(len(later)))
            )
            if count:
                counts[doc_id] = count
    return counts


class Searcher:
    """Evaluates query trees against one built index.

    Each node is evaluated into a map {doc_id: score} over exactly the
    documents it matches, composed bottom-up; this keeps matching and
    scoring consistent by construction.
    """

    def __init__(self, stats: IndexStats, params: Bm25Params) -> None:
        self.stats = stats
        self.params = params

    def _eq2(self, df: int, tf: int, doc_len: float, avg_len: float) -> float:
        n = self.stats.doc_count
        if n == 0 or tf <= 0:
            return 0.0
        return log((n - df + 0.5) / (df + 0.5)) * saturation(
            tf, doc_len, avg_len, self.params
        )

    def _term_map(self, field_name: str, term: str) -> dict[str, float]:
        fs = self.stats.field_stats(field_name)
        by_doc = fs.postings.get(term)
        if not by_doc:
            return {}
        df = fs.df[term]
        return {
            d: self._eq2(df, len(pos), fs.doc_length[d], fs.avg_length)
            for d, pos in by_doc.items()
        }

    def _phrase_map(self, node: Phrase) -> dict[str, float]:
        fs = self.stats.field_stats(node.field)
        counts = phrase_occurrences(self.stats, node.field, node.terms)
        df = len(counts)
        return {
            d: self._eq2(df, c, fs.doc_length[d], fs.avg_length)
            for d, c in counts.items()
        }

    def score_map(self, node: QueryNode) -> dict[str, float]:
        if isinstance(node, Term):
            return self._term_map(node.field, node.term)
        if isinstance(node, Phrase):
            return self._phrase_map(node)
        if isinstance(node, BagOfWords):
            acc: dict[str, float] = {}
            for f in node.fields:
                for t in node.terms:
                    for d, s in self._term_map(f, t).items():
                        acc[d] = acc.get(d, 0.0) + s
            return acc
        if isinstance(node, DisMax):
            best: dict[str, float] = {}
            for sub in node.subqueries:
                for d, s in self.score_map(sub).items():
                    if d not in best or s > best[d]:
                        best[d] = s
            return best
        if isinstance(node, Weighted):
            return {d: node.weight * s for d, s in self.score_map(node.child).items()}
        if isinstance(node, AgeRange):
            out: dict[str, float] = {}
            for d, meta in self.stats.structured.items():
                lo, hi = meta.get("min_age"), meta.get("max_age")
                if (lo is None or lo <= node.age) and (hi is None or node.age <= hi):
                    out[d] = 0.0
            return out
        if isinstance(node, SexFilter):
            if node.sex == "all":
                return {d: 0.0 for d in self.stats.doc_ids}
            return {
                d: 0.0
                for d, meta in self.stats.structured.items()
                if meta.get("sex") in (node.sex, "all", None)
            }
        if isinstance(node, Bool):
            return self._bool_map(node)
        raise TypeError(f"unknown query node {type(node).__name__}")

    def _bool_map(self, node: Bool) -> dict[str, float]:
        must_maps = [self.score_map(m) for m in node.must]
        filter_sets = [set(self.score_map(f)) for f in node.filter]
        if must_maps or filter_sets:
            candidates: set[str] = (
                set(must_maps[0]) if must_maps else filter_sets[0].copy()
            )
            for m in must_maps[1:]:
                candidates &= set(m)
            for fset in filter_sets:
                candidates &= fset
        else:
            candidates = set(self.stats.doc_ids)
        for mn in node.must_not:
            candidates -= set(self.score_map(mn))
        if not candidates:
            return {}
        scores = {d: 0.0 for d in candidates}
        for m in must_maps:
            for d in candidates:
                scores[d] += m[d]
        for sh in node.should:
            for d, s in self.score_map(sh).items():
                if d in scores:
                    scores[d] += s
        return scores


def search(stats: IndexStats, query: QueryNode, params: Bm25Params,
           top_k: int) -> list[ScoredHit]:
    """Top-k matching documents, descending score, doc_id breaking ties."""
    if top_k < 1:
        raise ValueError("top_k must be >= 1")
    scored = Searcher(stats, params).score_map(query)
    ranked = sorted(scored.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k]
    return [ScoredHit(d, s, i + 1) for i, (d, s) in enumerate(ranked)]


# ---------------------------------------------------------------------------
# Canonical rendering, used by golden-file tests and --explain output.

def _fmt(w: float) -> str:
    return f"{w:g}"


def render(node: QueryNode, indent: int = 0) -> str:
    """Deterministic human-readable tree for a query."""
    pad = "  " * indent
    if isinstance(node, Term):
        return f"{pad}term[{node.field}] {node.term}"
    if isinstance(node, Phrase):
        return f"{pad}phrase[{node.field}] {' '.join(node.terms)}"
    if isinstance(node, BagOfWords):
        return f"{pad}bow[{','.join(node.fields)}] {' '.join(node.terms)}"
    if isinstance(node, DisMax):
        lines = [f"{pad}dismax"]
        lines += [render(s, indent + 1) for s in node.subqueries]
        return "\n".join(lines)
    if isinstance(node, Weighted):
        return f"{pad}weight {_fmt(node.weight)}\n" + render(node.child, indent + 1)
    if isinstance(node, AgeRange):
        return f"{pad}age {node.age}"
    if isinstance(node, SexFilter):
        return f"{pad}sex {node.sex}"
    if isinstance(node, Bool):
        lines = [f"{pad}bool"]
        for label, children in (
            ("must", node.must),
            ("should", node.should),
            ("must_not", node.must_not),
            ("filter", node.filter),
        ):
            if children:
                lines.append(f"{pad}  {label}:")
                lines += [render(c, indent + 2) for c in children]
        return "\n".join(lines)
    raise TypeError(f"unknown query node {type(node).__name__}")
