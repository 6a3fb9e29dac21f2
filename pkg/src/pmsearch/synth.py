"""Synthetic corpus, topic, qrels and lexicon generation.

Documents are planted so that the tunable features measurably matter:
relevant documents mention the disease or gene via lexicon synonyms about
half of the time, carry positive boosting keywords, and put key mentions in
titles; confusable irrelevant documents reuse disease vocabulary together
with negative keywords, bad demographics (clinical trials) or the
non-melanoma phrase. Everything is a pure function of the seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evaluation import Qrels, SampledQrels, Stratum, write_qrels, write_sampled_qrels
from .indexing import Document, write_corpus
from .terminology import (
    Lexicons,
    NEGATIVE_KEYWORDS,
    POSITIVE_KEYWORDS,
    lexicons_to_json,
    sample_lexicons,
)
from .topics import Topic, write_topics

FILLER_WORDS = (
    "analysis method results data evaluation measurement protein pathway "
    "expression signaling receptor kinase mutation variant sequencing cohort "
    "trial phase randomized enrollment biomarker assay imaging followup "
    "baseline response progression grade dosage population screening "
    "inhibitor compound activity binding regulation profile subgroup"
).split()

TOPIC_PLAN = [
    ("melanoma", "BRAF"),
    ("melanoma", "KIT"),
    ("melanoma", "PTEN"),
    ("melanoma", "BRAF, KRAS"),
    ("colorectal cancer", "KRAS"),
    ("colorectal cancer", "BRAF"),
    ("cholangiocarcinoma", "IDH1"),
    ("liver cancer", "BRCA2"),
    ("lung adenocarcinoma", "EGFR"),
    ("breast cancer", "BRCA1"),
    ("gastric cancer", "ERBB2"),
    ("glioblastoma", "ALK"),
]


@dataclass(frozen=True)
class SynthSizes:
    ba_docs: int = 200
    ct_docs: int = 100
    topics: int = 12


@dataclass
class SynthData:
    topics: list[Topic]
    ba_docs: list[Document]
    ct_docs: list[Document]
    qrels_ba: Qrels
    qrels_ct: Qrels
    sampled_ba: SampledQrels
    sampled_ct: SampledQrels
    lexicons: Lexicons = field(default_factory=sample_lexicons)


class _DocFactory:
    def __init__(self, rng: np.random.Generator, lexicons: Lexicons, prefix: str) -> None:
        self.rng = rng
        self.lex = lexicons
        self.prefix = prefix
        self.counter = 0

    def _next_id(self) -> str:
        self.counter += 1
        return f"{self.prefix}{self.counter:04d}"

    def _pick(self, pool, n: int) -> list[str]:
        n = min(n, len(pool))
        idx = self.rng.choice(len(pool), size=n, replace=False)
        return [pool[int(i)] for i in idx]

    def _filler(self, n: int) -> list[str]:
        return [FILLER_WORDS[int(i)] for i in self.rng.integers(0, len(FILLER_WORDS), n)]

    def _disease_mention(self, disease: str, synonym_rate: float) -> str:
        entry = self.lex.disease(disease)
        if entry and entry.synonyms and self.rng.random() < synonym_rate:
            return entry.synonyms[int(self.rng.integers(0, len(entry.synonyms)))]
        return disease

    def _gene_mention(self, gene: str, synonym_rate: float) -> str:
        entry = self.lex.gene(gene)
        if entry and entry.synonyms and self.rng.random() < synonym_rate:
            return entry.synonyms[int(self.rng.integers(0, len(entry.synonyms)))]
        return gene.lower()

    def _mesh_for(self, disease: str) -> list[str]:
        entry = self.lex.disease(disease)
        mesh = [disease]
        if entry and entry.hypernyms and self.rng.random() < 0.7:
            mesh.append(entry.hypernyms[0])
        return mesh

    def make(self, topic: Topic, grade: int, *, demographics: bool = False,
             demographic_mismatch: bool = False, non_melanoma: bool = False) -> Document:
        """One document with the lexical profile of the requested grade."""
        rng = self.rng
        genes = topic.gene_aspects()
        title: list[str] = []
        abstract: list[str] = []
        mesh: list[str] = []
        gene_field: list[str] = []

        if non_melanoma:
            mention = genes[0].lower() if genes else "braf"
            title = ["non-melanoma skin cancer", mention]
            abstract = [
                "non-melanoma carcinoma of the skin", mention, *self._filler(12),
                *self._pick(NEGATIVE_KEYWORDS, 2),
            ]
            mesh = ["skin cancer"]
            gene_field = [mention]
        elif grade == 2:
            disease = self._disease_mention(topic.disease, 0.55)
            mentioned = [self._gene_mention(g, 0.45) for g in genes]
            title = [disease, mentioned[0], *self._pick(POSITIVE_KEYWORDS, 2)]
            abstract = [
                disease, *mentioned, *self._pick(POSITIVE_KEYWORDS, 3),
                self._disease_mention(topic.disease, 0.55), *self._filler(16),
            ]
            mesh = self._mesh_for(topic.disease)
            # the tagger annotates surface mentions, not normalized symbols
            gene_field = [m for m in mentioned if rng.random() < 0.95]
        elif grade == 1:
            disease = self._disease_mention(topic.disease, 0.5)
            title = [disease, *self._pick(POSITIVE_KEYWORDS, 1), *self._filler(2)]
            abstract = [disease, *self._pick(POSITIVE_KEYWORDS, 1), *self._filler(20)]
            mesh = self._mesh_for(topic.disease)
            if rng.random() < 0.4 and genes:
                mention = self._gene_mention(genes[0], 0.4)
                abstract.append(mention)
                gene_field = [mention]
        else:
            # confusable: disease and often the gene, drowned in negative
            # keywords and lab-study language, no positive signals
            disease = self._disease_mention(topic.disease, 0.25)
            negs = self._pick(NEGATIVE_KEYWORDS, 4)
            title = [disease, *negs[:2], *self._filler(2)]
            abstract = [disease, *negs, "cell line culture", *self._filler(22)]
            mesh = [topic.disease] if rng.random() < 0.5 else []
            if rng.random() < 0.75 and genes:
                mention = genes[0].lower()
                title.append(mention)
                abstract.append(mention)
                gene_field = [mention]

        min_age = max_age = None
        sex = None
        if demographics:
            if demographic_mismatch and rng.random() < 0.5:
                lo = topic.age + int(rng.integers(5, 20))
                min_age, max_age = lo, lo + int(rng.integers(5, 25))
                sex = topic.sex
            elif demographic_mismatch:
                min_age = max(0, topic.age - int(rng.integers(5, 20)))
                max_age = topic.age + int(rng.integers(5, 20))
                sex = "male" if topic.sex == "female" else "female"
            else:
                min_age = max(0, topic.age - int(rng.integers(5, 30)))
                max_age = topic.age + int(rng.integers(5, 30))
                sex = topic.sex if rng.random() < 0.6 else "all"
        return Document(
            doc_id=self._next_id(),
            text_fields={
                "title": " ".join(title),
                "abstract": " ".join(abstract),
            },
            term_list_fields={"mesh": mesh, "gene": gene_field},
            min_age=min_age,
            max_age=max_age,
            sex=sex,
        )

    def make_filler(self, topics: list[Topic], demographics: bool = False) -> Document:
        """Background document about some unrelated disease vocabulary."""
        rng = self.rng
        diseases = sorted(self.lex.diseases)
        disease = diseases[int(rng.integers(0, len(diseases)))]
        words = [disease, *self._filler(18), *self._pick(NEGATIVE_KEYWORDS, 1)]
        min_age = max_age = None
        sex = None
        if demographics:
            min_age = int(rng.integers(18, 50))
            max_age = min_age + int(rng.integers(5, 40))
            sex = ("male", "female", "all")[int(rng.integers(0, 3))]
        return Document(
            doc_id=self._next_id(),
            text_fields={
                "title": " ".join([disease, *self._filler(3)]),
                "abstract": " ".join(words),
            },
            term_list_fields={"mesh": [disease], "gene": []},
            min_age=min_age,
            max_age=max_age,
            sex=sex,
        )


def _make_topics(n: int, rng: np.random.Generator) -> list[Topic]:
    topics = []
    for i in range(n):
        disease, gene = TOPIC_PLAN[i % len(TOPIC_PLAN)]
        topics.append(
            Topic(
                number=i + 1,
                disease=disease,
                gene=gene,
                age=int(rng.integers(25, 76)),
                sex="male" if rng.random() < 0.5 else "female",
            )
        )
    return topics


def _strata_for(topic: int, judged: dict[str, int],
                rng: np.random.Generator) -> list[Stratum]:
    """Two strata: relevant docs fully sampled, the rest at roughly half."""
    docs = sorted(judged)
    top = [d for d in docs if judged[d] == 2]
    rest = [d for d in docs if judged[d] != 2]
    strata = []
    if top:
        strata.append(Stratum("a", len(top), tuple((d, judged[d]) for d in top)))
    if rest:
        n_sample = max(1, int(round(len(rest) * 0.6)))
        idx = sorted(rng.choice(len(rest), size=n_sample, replace=False).tolist())
        sampled = tuple((rest[i], judged[rest[i]]) for i in idx)
        strata.append(Stratum("b", len(rest), sampled))
    return strata


def _generate_task(topics: list[Topic], n_docs: int, prefix: str,
                   demographics: bool, lexicons: Lexicons,
                   rng: np.random.Generator) -> tuple[list[Document], Qrels, SampledQrels]:
    factory = _DocFactory(rng, lexicons, prefix)
    docs: list[Document] = []
    judged: dict[int, dict[str, int]] = {t.number: {} for t in topics}

    per_topic = max(6, int(n_docs * 0.65) // max(1, len(topics)))
    n_rel = max(2, per_topic * 2 // 5)
    n_part = max(1, per_topic // 5)
    n_conf = per_topic - n_rel - n_part
    for topic in topics:
        for _ in range(n_rel):
            doc = factory.make(topic, 2, demographics=demographics)
            docs.append(doc)
            judged[topic.number][doc.doc_id] = 2
        for _ in range(n_part):
            doc = factory.make(topic, 1, demographics=demographics)
            docs.append(doc)
            judged[topic.number][doc.doc_id] = 1
        for i in range(n_conf):
            non_mel = topic.disease == "melanoma" and i == 0
            mismatch = demographics and i % 2 == 0 and not non_mel
            doc = factory.make(
                topic, 2 if mismatch else 0,
                demographics=demographics,
                demographic_mismatch=mismatch,
                non_melanoma=non_mel,
            )
            docs.append(doc)
            judged[topic.number][doc.doc_id] = 0
    while len(docs) < n_docs:
        docs.append(factory.make_filler(topics, demographics))
    docs = docs[:n_docs]
    doc_ids = {d.doc_id for d in docs}

    qrels = Qrels()
    sampled = SampledQrels()
    filler_ids = sorted(doc_ids - {d for per in judged.values() for d in per})
    for topic in topics:
        per = {d: g for d, g in judged[topic.number].items() if d in doc_ids}
        if filler_ids:
            n_extra = min(len(filler_ids), 4)
            idx = rng.choice(len(filler_ids), size=n_extra, replace=False)
            for i in idx:
                per.setdefault(filler_ids[int(i)], 0)
        for doc_id, grade in sorted(per.items()):
            qrels.add(topic.number, doc_id, grade)
        sampled.strata[topic.number] = _strata_for(topic.number, per, rng)
    return docs, qrels, sampled


def generate(seed: int = 17, sizes: SynthSizes = SynthSizes()) -> SynthData:
    """Generate the full fixture; identical output for identical seeds."""
    rng = np.random.default_rng(abs(int(seed)))
    lexicons = sample_lexicons()
    topics = _make_topics(sizes.topics, rng)
    ba_docs, qrels_ba, sampled_ba = _generate_task(
        topics, sizes.ba_docs, "BA", False, lexicons, rng
    )
    ct_docs, qrels_ct, sampled_ct = _generate_task(
        topics, sizes.ct_docs, "NCT", True, lexicons, rng
    )
    return SynthData(
        topics=topics,
        ba_docs=ba_docs,
        ct_docs=ct_docs,
        qrels_ba=qrels_ba,
        qrels_ct=qrels_ct,
        sampled_ba=sampled_ba,
        sampled_ct=sampled_ct,
        lexicons=lexicons,
    )


def experiment_manifest(task: str, *, folds: int = 3, seed: int = 17,
                        budget: int = 200) -> dict:
    suffix = task.lower()
    return {
        "task": task,
        "corpus": f"corpus_{suffix}.jsonl",
        "topics": "topics.xml",
        "qrels": f"qrels_{suffix}.txt",
        "sampled_qrels": f"sampled_qrels_{suffix}.txt",
        "lexicons": "lexicons.json",
        "metric": "infndcg",
        "depth": 1000,
        "top_k": 100,
        "folds": folds,
        "seed": seed,
        "budget": budget,
        "start_preset": "start",
    }


def write_fixture(data: SynthData, out_dir: str | Path, *, seed: int = 17,
                  folds: int = 3, budget: int = 200) -> list[Path]:
    """Write every fixture file plus per-task experiment manifests."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_corpus(data.ba_docs, out / "corpus_ba.jsonl")
    write_corpus(data.ct_docs, out / "corpus_ct.jsonl")
    write_topics(data.topics, out / "topics.xml")
    write_qrels(data.qrels_ba, out / "qrels_ba.txt")
    write_qrels(data.qrels_ct, out / "qrels_ct.txt")
    write_sampled_qrels(data.sampled_ba, out / "sampled_qrels_ba.txt")
    write_sampled_qrels(data.sampled_ct, out / "sampled_qrels_ct.txt")
    (out / "lexicons.json").write_text(
        json.dumps(lexicons_to_json(data.lexicons), indent=1) + "\n", encoding="utf-8"
    )
    for task in ("BA", "CT"):
        manifest = experiment_manifest(task, folds=folds, seed=seed, budget=budget)
        (out / f"manifest_{task.lower()}.json").write_text(
            json.dumps(manifest, indent=1) + "\n", encoding="utf-8"
        )
    return sorted(out.iterdir())
