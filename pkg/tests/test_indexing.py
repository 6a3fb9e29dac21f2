from __future__ import annotations

from math import log

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pmsearch.indexing import (
    Bm25Params,
    Document,
    bm25_term_score,
    build_index,
    idf,
    load_index,
    read_corpus,
    save_index,
    tokenize,
    write_corpus,
)

from .conftest import random_corpus
from .oracles import NaiveScorer


class TestTokenize:
    def test_basic(self):
        assert tokenize("IDH1 mutation") == [("idh1", 0), ("mutation", 1)]

    def test_empty(self):
        assert tokenize("") == []

    def test_hyphen_splits(self):
        assert tokenize("non-melanoma skin") == [
            ("non", 0), ("melanoma", 1), ("skin", 2)
        ]

    @given(st.text(max_size=200))
    def test_tokens_are_lowercase_alphanumeric(self, text):
        for tok, pos in tokenize(text):
            assert tok
            assert tok == tok.lower()
            assert all(c.isascii() and (c.isalpha() or c.isdigit()) for c in tok)

    @given(st.text(max_size=200))
    def test_positions_are_consecutive(self, text):
        positions = [p for _, p in tokenize(text)]
        assert positions == list(range(len(positions)))


class TestBuildIndex:
    def test_single_doc_counts(self):
        stats = build_index([Document("d1", text_fields={"title": "cancer cancer"})])
        fs = stats.field_stats("title")
        assert fs.df["cancer"] == 1
        assert fs.tf("cancer", "d1") == 2
        assert fs.doc_length["d1"] == 2

    def test_three_docs(self, three_doc_index):
        _, stats = three_doc_index
        fs = stats.field_stats("title")
        assert stats.doc_count == 3
        assert fs.df["therapy"] == 2
        assert fs.avg_length == pytest.approx(5 / 3)

    def test_empty_corpus(self):
        stats = build_index([])
        assert stats.doc_count == 0
        assert stats.field_stats("title").df == {}

    def test_duplicate_doc_id_rejected(self):
        docs = [Document("dup"), Document("dup")]
        with pytest.raises(ValueError, match="dup"):
            build_index(docs)

    def test_positions_strictly_increasing(self):
        rng = np.random.default_rng(7)
        stats = build_index(random_corpus(rng, 30))
        for fs in stats.fields.values():
            for by_doc in fs.postings.values():
                for positions in by_doc.values():
                    assert all(a < b for a, b in zip(positions, positions[1:]))

    def test_df_bounded_by_doc_count(self):
        rng = np.random.default_rng(8)
        stats = build_index(random_corpus(rng, 25))
        for fs in stats.fields.values():
            assert all(df <= stats.doc_count for df in fs.df.values())


class TestIdf:
    def test_df1_of_3(self, three_doc_index):
        _, stats = three_doc_index
        assert idf(stats, "gene", "title") == pytest.approx(log(5 / 3))

    def test_negative_when_common(self, three_doc_index):
        _, stats = three_doc_index
        assert idf(stats, "therapy", "title") == pytest.approx(log(0.6))
        assert idf(stats, "therapy", "title") < 0

    def test_empty_corpus_is_zero(self):
        assert idf(build_index([]), "anything", "title") == 0.0


class TestBm25TermScore:
    def test_absent_term_scores_zero(self, three_doc_index):
        _, stats = three_doc_index
        assert bm25_term_score(stats, "title", "cancer", "d3", Bm25Params()) == 0.0

    def test_worked_example(self, three_doc_index):
        _, stats = three_doc_index
        score = bm25_term_score(stats, "title", "gene", "d3", Bm25Params(k1=1.2, b=0.75))
        assert score == pytest.approx(log(2.5 / 1.5) * 2.2 / 2.38, abs=1e-9)
        assert score == pytest.approx(0.4722, abs=1e-4)

    def test_default_params(self):
        params = Bm25Params()
        assert params.k1 == 1.2
        assert params.b == 0.75

    def test_param_ranges_enforced(self):
        with pytest.raises(ValueError):
            Bm25Params(k1=2.5)
        with pytest.raises(ValueError):
            Bm25Params(b=-0.1)

    def test_unknown_doc_rejected(self, three_doc_index):
        _, stats = three_doc_index
        with pytest.raises(KeyError):
            bm25_term_score(stats, "title", "gene", "nope", Bm25Params())

    def test_increasing_in_tf(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            k1 = float(rng.uniform(0.1, 2.0))
            b = float(rng.uniform(0.0, 1.0))
            pad = int(rng.integers(3, 10))
            docs = [
                Document(f"d{k}", text_fields={
                    "abstract": " ".join(["hit"] * k + ["pad"] * (pad + 6 - k))
                })
                for k in range(1, 6)
            ] + [
                # enough hit-free documents to keep the idf factor positive
                Document(f"bg{i}", text_fields={"abstract": f"pad only text {i}"})
                for i in range(8)
            ]
            stats = build_index(docs)
            params = Bm25Params(k1=k1, b=b)
            scores = [
                bm25_term_score(stats, "abstract", "hit", f"d{k}", params)
                for k in range(1, 6)
            ]
            assert all(a < b_ for a, b_ in zip(scores, scores[1:]))

    def test_decreasing_in_length_when_b_positive(self):
        rng = np.random.default_rng(12)
        for _ in range(20):
            params = Bm25Params(k1=float(rng.uniform(0.1, 2.0)),
                                b=float(rng.uniform(0.1, 1.0)))
            docs = [
                Document(f"d{k}", text_fields={
                    "abstract": "hit " + " ".join(["pad"] * (2 + 4 * k))
                })
                for k in range(4)
            ] + [
                Document(f"bg{i}", text_fields={"abstract": f"pad bg {i}"})
                for i in range(7)
            ]
            stats = build_index(docs)
            scores = [
                bm25_term_score(stats, "abstract", "hit", f"d{k}", params)
                for k in range(4)
            ]
            assert all(a > b_ for a, b_ in zip(scores, scores[1:]))

    def test_b_zero_ignores_length(self):
        docs = [
            Document("short", text_fields={"abstract": "hit"}),
            Document("long", text_fields={"abstract": "hit " + "pad " * 50}),
        ]
        stats = build_index(docs)
        params = Bm25Params(k1=1.2, b=0.0)
        a = bm25_term_score(stats, "abstract", "hit", "short", params)
        b = bm25_term_score(stats, "abstract", "hit", "long", params)
        assert a == pytest.approx(b, abs=1e-12)

    def test_matches_naive_oracle(self):
        rng = np.random.default_rng(13)
        for trial in range(8):
            docs = random_corpus(rng, int(rng.integers(5, 60)))
            params = Bm25Params(k1=float(rng.uniform(0, 2)), b=float(rng.uniform(0, 1)))
            stats = build_index(docs)
            oracle = NaiveScorer(docs, params)
            for doc in docs[:10]:
                for field in ("title", "abstract", "mesh", "gene"):
                    terms = {t for t, _ in oracle.positions[doc.doc_id][field]}
                    for term in list(terms)[:5]:
                        got = bm25_term_score(stats, field, term, doc.doc_id, params)
                        _, want = oracle.term_score(doc.doc_id, field, term)
                        assert got == pytest.approx(want, abs=1e-9)


class TestCorpusIO:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        docs = random_corpus(rng, 12, structured=True)
        path = tmp_path / "corpus.jsonl"
        write_corpus(docs, path)
        assert read_corpus(path) == docs

    def test_malformed_line_reports_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"doc_id": "a", "title": "x"}\nnot json\n')
        with pytest.raises(ValueError, match=":2:"):
            read_corpus(path)

    def test_missing_doc_id_reports_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"title": "x"}\n')
        with pytest.raises(ValueError, match=":1:"):
            read_corpus(path)

    def test_age_invariant(self):
        with pytest.raises(ValueError, match="min_age"):
            Document("d", min_age=60, max_age=30)


class TestSnapshot:
    def test_round_trip_and_determinism(self, tmp_path):
        rng = np.random.default_rng(6)
        docs = random_corpus(rng, 15, structured=True)
        stats = build_index(docs)
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_index(stats, p1)
        loaded = load_index(p1)
        save_index(loaded, p2)
        assert p1.read_bytes() == p2.read_bytes()
        params = Bm25Params()
        for doc in docs[:5]:
            for term in ("w1", "w2", "w3"):
                assert bm25_term_score(stats, "abstract", term, doc.doc_id, params) == \
                    bm25_term_score(loaded, "abstract", term, doc.doc_id, params)

    def test_repeated_queries_bit_identical(self, three_doc_index):
        _, stats = three_doc_index
        params = Bm25Params()
        first = bm25_term_score(stats, "title", "therapy", "d1", params)
        for _ in range(5):
            assert bm25_term_score(stats, "title", "therapy", "d1", params) == first
