"""Lexicon-driven disease/gene expansion, domain stop words, boosting keywords.

Lexicons are plain JSON files (top-level maps ``diseases``, ``genes``,
``solid_tumors``); a small hand-made sample ships with the package. The
domain stop-word list and the positive/negative boosting keyword candidate
lists ship as versioned text files under ``pmsearch/data``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path


def _data_text(name: str) -> str:
    return resources.files("pmsearch.data").joinpath(name).read_text(encoding="utf-8")


def _word_list(name: str) -> tuple[str, ...]:
    return tuple(
        line.strip() for line in _data_text(name).splitlines() if line.strip()
    )


STOPWORDS: frozenset[str] = frozenset(w.lower() for w in _word_list("stopwords.txt"))

POSITIVE_KEYWORDS: tuple[str, ...] = _word_list("keywords_positive.txt")
NEGATIVE_KEYWORDS: tuple[str, ...] = _word_list("keywords_negative.txt")


def _start_keywords() -> tuple[tuple[str, ...], tuple[str, ...]]:
    pos, neg = [], []
    for line in _data_text("keywords_start.txt").splitlines():
        line = line.strip()
        if not line:
            continue
        polarity, word = line.split()
        (pos if polarity == "pos" else neg).append(word)
    return tuple(pos), tuple(neg)


# Keywords known to help, used to seed the configuration search.
START_POSITIVE, START_NEGATIVE = _start_keywords()


def _dedup(items: list[str]) -> list[str]:
    seen: set[str] = set()
    out = []
    for x in items:
        key = x.lower()
        if key not in seen:
            seen.add(key)
            out.append(x)
    return out


@dataclass(frozen=True)
class DiseaseEntry:
    synonyms: tuple[str, ...] = ()
    hypernyms: tuple[str, ...] = ()
    preferred_terms: tuple[str, ...] = ()


@dataclass(frozen=True)
class GeneEntry:
    synonyms: tuple[str, ...] = ()
    description: str = ""


@dataclass
class Lexicons:
    """Disease and gene terminology plus the solid-tumor disease list.

    Disease lookups are case-insensitive; gene symbols are normalized to
    upper case.
    """

    diseases: dict[str, DiseaseEntry] = field(default_factory=dict)
    genes: dict[str, GeneEntry] = field(default_factory=dict)
    solid_tumors: set[str] = field(default_factory=set)

    def disease(self, term: str) -> DiseaseEntry | None:
        return self.diseases.get(term.lower())

    def gene(self, symbol: str) -> GeneEntry | None:
        return self.genes.get(symbol.upper())

    def is_solid_tumor(self, term: str) -> bool:
        return term.lower() in self.solid_tumors


def load_lexicons(path: str | Path) -> Lexicons:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return lexicons_from_json(raw)


def lexicons_from_json(raw: dict) -> Lexicons:
    diseases = {
        name.lower(): DiseaseEntry(
            synonyms=tuple(_dedup([str(s) for s in entry.get("synonyms", [])])),
            hypernyms=tuple(_dedup([str(s) for s in entry.get("hypernyms", [])])),
            preferred_terms=tuple(str(s) for s in entry.get("preferred_terms", [])),
        )
        for name, entry in raw.get("diseases", {}).items()
    }
    genes = {
        sym.upper(): GeneEntry(
            synonyms=tuple(_dedup([str(s) for s in entry.get("synonyms", [])])),
            description=str(entry.get("description", "")),
        )
        for sym, entry in raw.get("genes", {}).items()
    }
    solid = {str(d).lower() for d in raw.get("solid_tumors", [])}
    return Lexicons(diseases=diseases, genes=genes, solid_tumors=solid)


def lexicons_to_json(lex: Lexicons) -> dict:
    return {
        "diseases": {
            name: {
                "synonyms": list(e.synonyms),
                "hypernyms": list(e.hypernyms),
                "preferred_terms": list(e.preferred_terms),
            }
            for name, e in sorted(lex.diseases.items())
        },
        "genes": {
            sym: {"synonyms": list(e.synonyms), "description": e.description}
            for sym, e in sorted(lex.genes.items())
        },
        "solid_tumors": sorted(lex.solid_tumors),
    }


def sample_lexicons() -> Lexicons:
    """The small hand-made biomedical lexicon shipped with the package."""
    return lexicons_from_json(json.loads(_data_text("lexicon_sample.json")))


@dataclass(frozen=True)
class DiseaseExpansion:
    """Expansion terms per class, already gated by the request options."""

    preferred: str | None = None
    synonyms: tuple[str, ...] = ()
    hypernyms: tuple[str, ...] = ()
    solid: bool = False


def expand_disease(term: str, lex: Lexicons, *, preferred: bool = False,
                   synonyms: bool = False, hypernyms: bool = False,
                   solid_tumor: bool = False) -> DiseaseExpansion:
    """Look up the toggled expansion classes for a disease term.

    The preferred term is the majority vote over the lexicon's
    ``preferred_terms`` votes, ties broken lexicographically. A term absent
    from the lexicon expands to nothing.
    """
    entry = lex.disease(term)
    pref = None
    syns: tuple[str, ...] = ()
    hypers: tuple[str, ...] = ()
    if entry is not None:
        if preferred and entry.preferred_terms:
            votes: dict[str, int] = {}
            for t in entry.preferred_terms:
                votes[t] = votes.get(t, 0) + 1
            pref = min(votes, key=lambda t: (-votes[t], t))
        if synonyms:
            syns = entry.synonyms
        if hypernyms:
            hypers = entry.hypernyms
    return DiseaseExpansion(
        preferred=pref,
        synonyms=syns,
        hypernyms=hypers,
        solid=solid_tumor and lex.is_solid_tumor(term),
    )


_FAMILY_SUFFIX = re.compile(r"([0-9]{1,2}[A-Z]{0,2}|R[0-9]{0,1})$")


def gene_family(symbol: str) -> str | None:
    """Family prefix of a gene symbol (BRCA2 -> BRCA), if any.

    Strips the longest trailing match of the numbering-scheme suffix
    pattern; returns nothing when no suffix matches or nothing would
    remain.
    """
    m = _FAMILY_SUFFIX.search(symbol.upper())
    if m is None or m.start() == 0:
        return None
    return symbol.upper()[: m.start()]


def filter_stopwords(terms: list[str], enabled: bool) -> list[str]:
    """Drop domain stop words, including inside multi-word terms.

    Terms reduced to nothing are removed entirely. Identity when disabled.
    """
    if not enabled:
        return list(terms)
    out = []
    for term in terms:
        kept = [w for w in term.split() if w.lower() not in STOPWORDS]
        if kept:
            out.append(" ".join(kept))
    return out
