from __future__ import annotations

import pytest

from pmsearch.queries import (
    AgeRange,
    BagOfWords,
    Bool,
    DisMax,
    Phrase,
    SexFilter,
    Term,
    Weighted,
    render,
)
from pmsearch.space import load_preset
from pmsearch.topics import Topic, build_query, parse_topics, read_topics, write_topics

TOPIC_XML = """<topics>
  <topic number="38">
    <disease>cholangiocarcinoma</disease>
    <gene>IDH1</gene>
    <demographic>50-year-old male</demographic>
  </topic>
  <topic number="2">
    <disease>melanoma</disease>
    <gene>BRAF, KRAS</gene>
    <demographic>64-year-old female</demographic>
  </topic>
</topics>
"""


def walk(node):
    yield node
    if isinstance(node, Bool):
        for group in (node.must, node.should, node.must_not, node.filter):
            for child in group:
                yield from walk(child)
    elif isinstance(node, DisMax):
        for child in node.subqueries:
            yield from walk(child)
    elif isinstance(node, Weighted):
        yield from walk(node.child)


def leaf_terms(node):
    """Multiset of all leaf term strings in the tree."""
    out = []
    for n in walk(node):
        if isinstance(n, Term):
            out.append(n.term)
        elif isinstance(n, (Phrase, BagOfWords)):
            out.extend(n.terms)
    return sorted(out)


class TestParseTopics:
    def test_example_topic(self):
        topics = parse_topics(TOPIC_XML)
        t = topics[0]
        assert t == Topic(38, "cholangiocarcinoma", "IDH1", 50, "male")

    def test_gene_comma_split(self):
        topics = parse_topics(TOPIC_XML)
        assert topics[1].gene_aspects() == ("BRAF", "KRAS")

    def test_missing_demographic_errors(self):
        xml = "<topics><topic number='7'><disease>x</disease><gene>G1</gene></topic></topics>"
        with pytest.raises(ValueError, match="topic 7"):
            parse_topics(xml)

    def test_malformed_demographic_names_topic(self):
        xml = ("<topics><topic number='9'><disease>x</disease><gene>G1</gene>"
               "<demographic>young person</demographic></topic></topics>")
        with pytest.raises(ValueError, match="topic 9"):
            parse_topics(xml)

    def test_file_round_trip(self, tmp_path):
        topics = parse_topics(TOPIC_XML)
        path = tmp_path / "topics.xml"
        write_topics(topics, path)
        assert read_topics(path) == topics


class TestBuildQuery:
    @pytest.fixture()
    def topic(self):
        return Topic(38, "cholangiocarcinoma", "IDH1", 50, "male")

    def test_ba_has_no_demographic_filters(self, topic, space, lexicons):
        config = load_preset("ba-optimal", space)
        tree = build_query(topic, config, "BA", lexicons)
        assert not any(isinstance(n, (AgeRange, SexFilter)) for n in walk(tree))

    def test_ct_has_demographic_filters(self, topic, space, lexicons):
        config = load_preset("ct-optimal", space)
        tree = build_query(topic, config, "CT", lexicons)
        kinds = {type(n) for n in walk(tree)}
        assert AgeRange in kinds and SexFilter in kinds
        assert tree.filter == (AgeRange(50), SexFilter("male"))

    def test_minimal_config_tree(self, topic, space, lexicons):
        tree = build_query(topic, space.default_configuration(), "BA", lexicons)
        assert isinstance(tree, Bool)
        assert tree.should == () and tree.must_not == () and tree.filter == ()
        assert len(tree.must) == 2  # disease compound + one gene compound
        assert sorted(set(leaf_terms(tree))) == ["cholangiocarcinoma", "idh1"]

    def test_multiple_genes_get_own_subqueries(self, space, lexicons):
        topic = Topic(2, "melanoma", "BRAF, KRAS", 64, "female")
        tree = build_query(topic, space.default_configuration(), "BA", lexicons)
        assert len(tree.must) == 3

    def test_expansion_toggle_only_adds_terms(self, topic, space, lexicons):
        base = space.default_configuration()
        full = base.with_overrides({
            "disease.preferred_term": True,
            "disease.synonyms": True,
            "disease.hypernyms": True,
            "disease.solid_tumor": True,
            "gene.synonyms": True,
            "gene.description": True,
            "gene.family": True,
        })
        base_terms = leaf_terms(build_query(topic, base, "BA", lexicons))
        full_terms = leaf_terms(build_query(topic, full, "BA", lexicons))
        remaining = list(full_terms)
        for t in base_terms:
            assert t in remaining
            remaining.remove(t)

    def test_deterministic_rendering(self, topic, space, lexicons):
        config = load_preset("ba-optimal", space)
        a = render(build_query(topic, config, "BA", lexicons))
        b = render(build_query(topic, config, "BA", lexicons))
        assert a == b

    def test_non_melanoma_exclusion_phrase(self, space, lexicons):
        topic = Topic(2, "melanoma", "BRAF", 64, "female")
        config = space.default_configuration().with_overrides(
            {"keyword.non_melanoma": True}
        )
        tree = build_query(topic, config, "BA", lexicons)
        assert all(isinstance(n, Phrase) and n.terms == ("non", "melanoma")
                   for n in tree.must_not)
        assert len(tree.must_not) == 3

    def test_gene_tagger_subquery(self, topic, space, lexicons):
        config = space.default_configuration().with_overrides(
            {"weight.subquery.gene_tagger": 1.5}
        )
        tree = build_query(topic, config, "BA", lexicons)
        tagger = [n for n in walk(tree)
                  if isinstance(n, BagOfWords) and n.fields == ("gene",)]
        assert len(tagger) == 1
        assert tagger[0].terms == ("idh1",)
        assert any(isinstance(n, Weighted) and n.weight == 1.5 for n in tree.should)

    def test_stopword_filtering_respects_fallback(self, space, lexicons):
        topic = Topic(5, "cancer", "KRAS", 40, "male")
        config = space.default_configuration().with_overrides(
            {"stopword_filtering": True}
        )
        tree = build_query(topic, config, "BA", lexicons)
        # "cancer" is a stop word, but the compulsory topic clause survives
        assert "cancer" in leaf_terms(tree)

    def test_stopword_filtering_trims_expansions(self, space, lexicons):
        topic = Topic(6, "colorectal cancer", "KRAS", 40, "male")
        plain = space.default_configuration().with_overrides(
            {"disease.synonyms": True}
        )
        filtered = plain.with_overrides({"stopword_filtering": True})
        plain_terms = leaf_terms(build_query(topic, plain, "BA", lexicons))
        filtered_terms = leaf_terms(build_query(topic, filtered, "BA", lexicons))
        assert "cancer" in plain_terms
        assert "cancer" not in filtered_terms
        assert "colorectal" in filtered_terms

    def test_expansions_operator_switches_compound(self, topic, space, lexicons):
        dis = space.default_configuration().with_overrides({
            "disease.synonyms": True,
            "query.expansions.disease": "dis_max",
            "query.expansions.gene": "dis_max",
        })
        tree = build_query(topic, dis, "BA", lexicons)
        assert any(isinstance(n, DisMax) for n in walk(tree))

    def test_multiword_phrase_setting(self, space, lexicons):
        topic = Topic(7, "colorectal cancer", "KRAS", 40, "male")
        config = space.default_configuration().with_overrides(
            {"query.multiword.disease_topic": "phrase"}
        )
        tree = build_query(topic, config, "BA", lexicons)
        assert any(
            isinstance(n, Phrase) and n.terms == ("colorectal", "cancer")
            for n in walk(tree)
        )

    def test_unknown_task_rejected(self, topic, space, lexicons):
        with pytest.raises(ValueError, match="task"):
            build_query(topic, space.default_configuration(), "XX", lexicons)


class TestBuiltQuerySemantics:
    """Invariants of built trees evaluated against a corpus."""

    @pytest.fixture()
    def searchable(self, space, lexicons):
        from pmsearch.indexing import Bm25Params, build_index
        from pmsearch.synth import SynthSizes, generate

        data = generate(29, SynthSizes(ba_docs=80, ct_docs=40, topics=6))
        stats = build_index(data.ba_docs)
        return data.topics, stats, Bm25Params()

    def _matched(self, stats, tree, params):
        from pmsearch.queries import Searcher

        return set(Searcher(stats, params).score_map(tree))

    def test_compulsory_part_matches_superset(self, space, lexicons, searchable):
        topics, stats, params = searchable
        config = load_preset("ba-optimal", space)
        for topic in topics:
            full = build_query(topic, config, "BA", lexicons)
            compulsory = Bool(must=full.must)
            assert self._matched(stats, full, params) <= \
                self._matched(stats, compulsory, params)

    def test_zero_clause_weight_keeps_matched_set(self, space, lexicons, searchable):
        topics, stats, params = searchable
        base = space.default_configuration().with_overrides(
            {"kw.pos.therapy": True, "kw.pos.treatment": True}
        )
        zeroed = base.with_overrides({"weight.subquery.keywords_positive": 0.0})
        for topic in topics:
            with_kw = self._matched(stats, build_query(topic, base, "BA", lexicons), params)
            without = self._matched(stats, build_query(topic, zeroed, "BA", lexicons), params)
            assert with_kw == without
