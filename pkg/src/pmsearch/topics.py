"""Topic parsing and compilation of (topic, configuration) into query trees.

The emitted tree has a compulsory part (disease and gene compounds under
``must``), optional relevance signals (keyword boosting and the gene
annotation match under ``should``), an optional non-melanoma exclusion
under ``must_not``, and, for clinical trials only, demographic filters.

Within the disease/gene compounds every term (the topic value plus the
toggled expansion terms) forms one clause; a clause searches its term
across the configured fields with per-field weights, multi-word terms as a
phrase or a bag of words per the clause type's setting, and clauses are
combined with dis_max or a plain disjunction. Clause-type weights apply to
expansion clauses; the topic clause is the unweighted anchor.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path

from .indexing import tokens_of
from .queries import (
    AgeRange,
    BagOfWords,
    Bool,
    DisMax,
    Phrase,
    QueryNode,
    SexFilter,
    Term,
    Weighted,
)
from .space import Configuration
from .terminology import Lexicons, expand_disease, filter_stopwords, gene_family

TASKS = ("BA", "CT")

TEXT_SEARCH_FIELDS = ("title", "abstract", "mesh")
GENE_SEARCH_FIELDS = ("title", "abstract", "mesh", "gene")

_DEMOGRAPHIC_RE = re.compile(r"^\s*(\d+)[\s-]*year[\s-]*old\s+(male|female)\s*$", re.I)


@dataclass(frozen=True)
class Topic:
    number: int
    disease: str
    gene: str
    age: int
    sex: str

    def __post_init__(self) -> None:
        if self.number < 1:
            raise ValueError("topic number must be >= 1")
        if not self.disease:
            raise ValueError(f"topic {self.number}: disease must be nonempty")

    def gene_aspects(self) -> tuple[str, ...]:
        """Comma-separated gene values become separate aspects."""
        return tuple(g.strip() for g in self.gene.split(",") if g.strip())


def parse_topics(xml_text: str) -> list[Topic]:
    """Parse a topic file (one <topic> element per case)."""
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise ValueError(f"malformed topic XML: {exc}") from exc
    topics = []
    for elem in root.iter("topic"):
        number = int(elem.get("number", "0"))
        disease = (elem.findtext("disease") or "").strip()
        gene = (elem.findtext("gene") or "").strip()
        demographic = elem.findtext("demographic")
        if demographic is None:
            raise ValueError(f"topic {number}: missing demographic element")
        m = _DEMOGRAPHIC_RE.match(demographic)
        if m is None:
            raise ValueError(
                f"topic {number}: malformed demographic {demographic!r}"
            )
        topics.append(
            Topic(number=number, disease=disease, gene=gene,
                  age=int(m.group(1)), sex=m.group(2).lower())
        )
    return topics


def read_topics(path: str | Path) -> list[Topic]:
    return parse_topics(Path(path).read_text(encoding="utf-8"))


def write_topics(topics: list[Topic], path: str | Path) -> None:
    root = ET.Element("topics")
    for t in topics:
        el = ET.SubElement(root, "topic", number=str(t.number))
        ET.SubElement(el, "disease").text = t.disease
        ET.SubElement(el, "gene").text = t.gene
        ET.SubElement(el, "demographic").text = f"{t.age}-year-old {t.sex}"
    ET.indent(root)
    Path(path).write_bytes(ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n")


@dataclass(frozen=True)
class KeywordConfig:
    """Keyword boosting state derived from a configuration."""

    positive: tuple[str, ...]
    negative: tuple[str, ...]
    positive_weight: float
    negative_weight: float
    non_melanoma_exclusion: bool
    gene_tagger_weight: float


def keyword_config(config: Configuration) -> KeywordConfig:
    return KeywordConfig(
        positive=config.positive_keywords(),
        negative=config.negative_keywords(),
        positive_weight=config.num("weight.subquery.keywords_positive"),
        negative_weight=config.num("weight.subquery.keywords_negative"),
        non_melanoma_exclusion=config.flag("keyword.non_melanoma"),
        gene_tagger_weight=config.num("weight.subquery.gene_tagger"),
    )


def _weighted(node: QueryNode, weight: float) -> QueryNode:
    return node if weight == 1.0 else Weighted(node, weight)


def _combine(nodes: list[QueryNode], operator: str) -> QueryNode:
    if len(nodes) == 1:
        return nodes[0]
    if operator == "dis_max":
        return DisMax(tuple(nodes))
    return Bool(should=tuple(nodes))


def _leaf(field: str, term: str, multiword: str) -> QueryNode | None:
    toks = tuple(tokens_of(term))
    if not toks:
        return None
    if len(toks) == 1:
        return Term(field, toks[0])
    if multiword == "phrase":
        return Phrase(field, toks)
    return BagOfWords((field,), toks)


def _term_clause(term: str, fields: tuple[str, ...], multiword: str,
                 field_weights: dict[str, float], operator: str) -> QueryNode | None:
    """One term searched across fields, combined per the expansion operator."""
    nodes = []
    for f in fields:
        leaf = _leaf(f, term, multiword)
        if leaf is not None:
            nodes.append(_weighted(leaf, field_weights[f]))
    if not nodes:
        return None
    return _combine(nodes, operator)


def _compound(clauses: list[tuple[str, float, list[str]]], config: Configuration,
              subquery: str, fields: tuple[str, ...], operator: str) -> QueryNode | None:
    """Compound over clause types; each type holds one or more terms."""
    fw = {f: config.num(f"weight.field.{subquery}.{f}") for f in fields}
    type_nodes: list[QueryNode] = []
    for clause_type, clause_weight, terms in clauses:
        multiword = config.cat(f"query.multiword.{clause_type}")
        term_nodes = [
            node
            for term in terms
            if (node := _term_clause(term, fields, multiword, fw, operator)) is not None
        ]
        if not term_nodes:
            continue
        type_nodes.append(_weighted(_combine(term_nodes, operator), clause_weight))
    if not type_nodes:
        return None
    return _combine(type_nodes, operator)


def _filtered(terms: list[str], enabled: bool, keep_if_empty: str | None = None) -> list[str]:
    kept = filter_stopwords(terms, enabled)
    if not kept and keep_if_empty is not None:
        # A compulsory clause must not vanish; fall back to the raw term.
        return [keep_if_empty]
    return kept


def build_disease_query(topic: Topic, config: Configuration,
                        lexicons: Lexicons) -> QueryNode | None:
    stop = config.flag("stopword_filtering")
    expansion = expand_disease(
        topic.disease,
        lexicons,
        preferred=config.flag("disease.preferred_term"),
        synonyms=config.flag("disease.synonyms"),
        hypernyms=config.flag("disease.hypernyms"),
        solid_tumor=config.flag("disease.solid_tumor"),
    )
    clauses: list[tuple[str, float, list[str]]] = [
        ("disease_topic", 1.0, _filtered([topic.disease], stop, keep_if_empty=topic.disease)),
    ]
    if expansion.preferred:
        clauses.append((
            "disease_preferred",
            config.num("weight.clause.disease_preferred"),
            _filtered([expansion.preferred], stop),
        ))
    if expansion.synonyms:
        clauses.append((
            "disease_synonyms",
            config.num("weight.clause.disease_synonyms"),
            _filtered(list(expansion.synonyms), stop),
        ))
    if expansion.hypernyms:
        clauses.append((
            "disease_hypernyms",
            config.num("weight.clause.disease_hypernyms"),
            _filtered(list(expansion.hypernyms), stop),
        ))
    if expansion.solid:
        clauses.append((
            "disease_solid",
            config.num("weight.clause.disease_solid"),
            _filtered(["solid"], stop),
        ))
    operator = config.cat("query.expansions.disease")
    return _compound(clauses, config, "disease", TEXT_SEARCH_FIELDS, operator)


def build_gene_query(gene: str, config: Configuration,
                     lexicons: Lexicons) -> QueryNode | None:
    stop = config.flag("stopword_filtering")
    clauses: list[tuple[str, float, list[str]]] = [
        ("gene_topic", 1.0, _filtered([gene], stop, keep_if_empty=gene)),
    ]
    entry = lexicons.gene(gene)
    if config.flag("gene.synonyms") and entry is not None and entry.synonyms:
        clauses.append((
            "gene_synonyms",
            config.num("weight.clause.gene_synonyms"),
            _filtered(list(entry.synonyms), stop),
        ))
    if config.flag("gene.description") and entry is not None and entry.description:
        clauses.append((
            "gene_description",
            config.num("weight.clause.gene_description"),
            _filtered([entry.description], stop),
        ))
    if config.flag("gene.family"):
        family = gene_family(gene)
        if family:
            clauses.append((
                "gene_family",
                config.num("weight.clause.gene_family"),
                _filtered([family], stop),
            ))
    operator = config.cat("query.expansions.gene")
    return _compound(clauses, config, "gene", GENE_SEARCH_FIELDS, operator)


def _keyword_subquery(words: tuple[str, ...], weight: float, config: Configuration,
                      subquery: str) -> QueryNode | None:
    if not words or weight == 0.0:
        return None
    fw = {f: config.num(f"weight.field.{subquery}.{f}") for f in TEXT_SEARCH_FIELDS}
    leaves: list[QueryNode] = []
    for word in words:
        for f in TEXT_SEARCH_FIELDS:
            leaf = _leaf(f, word, "bag_of_words")
            if leaf is not None:
                leaves.append(_weighted(leaf, fw[f]))
    if not leaves:
        return None
    return Weighted(Bool(should=tuple(leaves)), weight)


def build_query(topic: Topic, config: Configuration, task: str,
                lexicons: Lexicons) -> QueryNode:
    """Compile a topic and a configuration into the full query tree."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    must: list[QueryNode] = []
    disease_node = build_disease_query(topic, config, lexicons)
    if disease_node is not None:
        must.append(_weighted(disease_node, config.num("weight.subquery.disease")))
    for gene in topic.gene_aspects():
        gene_node = build_gene_query(gene, config, lexicons)
        if gene_node is not None:
            must.append(_weighted(gene_node, config.num("weight.subquery.gene")))

    kw = keyword_config(config)
    should: list[QueryNode] = []
    pos_node = _keyword_subquery(kw.positive, kw.positive_weight, config,
                                 "keywords_positive")
    if pos_node is not None:
        should.append(pos_node)
    neg_node = _keyword_subquery(kw.negative, kw.negative_weight, config,
                                 "keywords_negative")
    if neg_node is not None:
        should.append(neg_node)
    if kw.gene_tagger_weight != 0.0:
        tagger_terms = tuple(
            tok for g in topic.gene_aspects() for tok in tokens_of(g)
        )
        if tagger_terms:
            fw = config.num("weight.field.gene_tagger.gene")
            tagger = _weighted(BagOfWords(("gene",), tagger_terms), fw)
            should.append(Weighted(tagger, kw.gene_tagger_weight))

    must_not: list[QueryNode] = []
    if kw.non_melanoma_exclusion:
        must_not = [Phrase(f, ("non", "melanoma")) for f in TEXT_SEARCH_FIELDS]

    filters: list[QueryNode] = []
    if task == "CT":
        filters = [AgeRange(topic.age), SexFilter(topic.sex)]

    return Bool(
        must=tuple(must),
        should=tuple(should),
        must_not=tuple(must_not),
        filter=tuple(filters),
    )
