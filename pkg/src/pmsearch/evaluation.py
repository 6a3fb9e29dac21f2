"""Graded retrieval metrics, TREC-style file formats, significance testing.

NDCG uses linear gain (gain = grade) and a 1/log2(rank+1) discount. The
inferred variant estimates the ideal gain from a stratified sample of the
judged pool: within a stratum, observed grade counts are inflated by
pool_size / sample_size; with full sampling it reduces exactly to plain
NDCG. Unjudged documents in the ranking contribute no gain.

Line formats (whitespace separated):
  qrels          "topic 0 doc grade"
  run            "topic Q0 doc rank score tag"
  sampled qrels  "topic stratum pool_size doc grade"
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from math import log2
from pathlib import Path

import numpy as np

GRADES = (0, 1, 2)
RUN_DEPTH_CAP = 1000


@dataclass
class Qrels:
    """Per-topic graded judgments: topic -> doc -> grade in {0, 1, 2}."""

    judgments: dict[int, dict[str, int]] = field(default_factory=dict)

    def add(self, topic: int, doc_id: str, grade: int) -> None:
        if grade not in GRADES:
            raise ValueError(f"grade must be one of {GRADES}, got {grade}")
        self.judgments.setdefault(topic, {})[doc_id] = grade

    def topics(self) -> list[int]:
        return sorted(self.judgments)

    def for_topic(self, topic: int) -> dict[str, int]:
        return self.judgments.get(topic, {})


@dataclass(frozen=True)
class Stratum:
    stratum_id: str
    pool_size: int
    sampled: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        if not self.sampled:
            raise ValueError(f"stratum {self.stratum_id}: empty sample")
        if len(self.sampled) > self.pool_size:
            raise ValueError(
                f"stratum {self.stratum_id}: sample larger than pool"
            )


@dataclass
class SampledQrels:
    """Stratified samples of the judged pools, one stratum list per topic."""

    strata: dict[int, list[Stratum]] = field(default_factory=dict)

    def topics(self) -> list[int]:
        return sorted(self.strata)

    def judged(self, topic: int) -> dict[str, int]:
        out: dict[str, int] = {}
        for stratum in self.strata.get(topic, []):
            out.update(stratum.sampled)
        return out

    def to_qrels(self) -> Qrels:
        q = Qrels()
        for topic in self.strata:
            for doc, grade in self.judged(topic).items():
                q.add(topic, doc, grade)
        return q


@dataclass
class Run:
    """Ranked results per topic; at most 1,000 entries each."""

    ranked: dict[int, list[tuple[str, float]]] = field(default_factory=dict)
    tag: str = "run"

    def add(self, topic: int, doc_id: str, score: float) -> None:
        entries = self.ranked.setdefault(topic, [])
        if len(entries) >= RUN_DEPTH_CAP:
            raise ValueError(f"topic {topic}: more than {RUN_DEPTH_CAP} entries")
        entries.append((doc_id, score))

    def topics(self) -> list[int]:
        return sorted(self.ranked)

    def docs(self, topic: int) -> list[str]:
        return [d for d, _ in self.ranked.get(topic, [])]


# ---------------------------------------------------------------------------
# File I/O

def _split(line: str, n: int, path: str, lineno: int) -> list[str]:
    parts = line.split()
    if len(parts) != n:
        raise ValueError(f"{path}:{lineno}: expected {n} fields, got {len(parts)}")
    return parts


def read_qrels(path: str | Path) -> Qrels:
    qrels = Qrels()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            topic, _, doc, grade = _split(line, 4, str(path), lineno)
            try:
                qrels.add(int(topic), doc, int(grade))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return qrels


def write_qrels(qrels: Qrels, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for topic in qrels.topics():
            for doc, grade in sorted(qrels.for_topic(topic).items()):
                fh.write(f"{topic} 0 {doc} {grade}\n")


def read_sampled_qrels(path: str | Path) -> SampledQrels:
    raw: dict[int, dict[str, tuple[int, list[tuple[str, int]]]]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            topic, stratum, pool, doc, grade = _split(line, 5, str(path), lineno)
            try:
                t, p, g = int(topic), int(pool), int(grade)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            if g not in GRADES:
                raise ValueError(f"{path}:{lineno}: grade must be one of {GRADES}")
            pool_size, sampled = raw.setdefault(t, {}).setdefault(stratum, (p, []))
            if pool_size != p:
                raise ValueError(
                    f"{path}:{lineno}: stratum {stratum} pool size changed"
                )
            sampled.append((doc, g))
    sq = SampledQrels()
    for topic, strata in raw.items():
        sq.strata[topic] = [
            Stratum(sid, pool, tuple(sampled))
            for sid, (pool, sampled) in sorted(strata.items())
        ]
    return sq


def write_sampled_qrels(sq: SampledQrels, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for topic in sq.topics():
            for stratum in sq.strata[topic]:
                for doc, grade in stratum.sampled:
                    fh.write(
                        f"{topic} {stratum.stratum_id} {stratum.pool_size} {doc} {grade}\n"
                    )


def read_run(path: str | Path) -> Run:
    run = Run()
    seen_ranks: dict[int, set[int]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            topic, _, doc, rank, score, tag = _split(line, 6, str(path), lineno)
            try:
                t, r, s = int(topic), int(rank), float(score)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            if r in seen_ranks.setdefault(t, set()):
                raise ValueError(f"{path}:{lineno}: duplicate rank {r} for topic {t}")
            seen_ranks[t].add(r)
            run.tag = tag
            try:
                run.add(t, doc, s)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return run


def write_run(run: Run, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for topic in run.topics():
            for rank, (doc, score) in enumerate(run.ranked[topic], start=1):
                fh.write(f"{topic} Q0 {doc} {rank} {score!r} {run.tag}\n")


# ---------------------------------------------------------------------------
# Metrics

def _discount(rank: int) -> float:
    return 1.0 / log2(rank + 1)


def dcg(grades: Sequence[float], depth: int) -> float:
    return sum(g * _discount(r) for r, g in enumerate(grades[:depth], start=1))


def _ideal_dcg_from_mass(grade_mass: Mapping[int, float], depth: int) -> float:
    """Ideal DCG when the per-grade document counts may be fractional.

    Rank slots are filled greedily with the highest-grade mass first; a
    slot may mix grades at the boundary. Integer counts reduce to the
    ordinary sorted ideal DCG.
    """
    remaining = {g: float(grade_mass.get(g, 0.0)) for g in (2, 1)}
    total = 0.0
    for rank in range(1, depth + 1):
        capacity = 1.0
        gain = 0.0
        for g in (2, 1):
            take = min(capacity, remaining[g])
            if take > 0:
                gain += g * take
                remaining[g] -= take
                capacity -= take
        if gain == 0.0:
            break
        total += gain * _discount(rank)
    return total


def ndcg(ranked_docs: Sequence[str], judgments: Mapping[str, int], depth: int) -> float:
    """Plain NDCG against complete judgments; 0 when nothing is relevant."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    gains = [float(judgments.get(d, 0)) for d in ranked_docs[:depth]]
    counts = {g: 0 for g in (1, 2)}
    for grade in judgments.values():
        if grade in counts:
            counts[grade] += 1
    ideal = _ideal_dcg_from_mass(counts, depth)
    if ideal == 0.0:
        return 0.0
    return dcg(gains, depth) / ideal


def inf_ndcg(ranked_docs: Sequence[str], strata: Sequence[Stratum], depth: int) -> float:
    """Inferred NDCG from a stratified sample of the judged pool.

    The running DCG uses the sampled judgments (unjudged documents score
    0); the ideal DCG uses per-grade counts inflated by each stratum's
    pool_size / sample_size. Fully sampled strata make this identical to
    :func:`ndcg`.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    if not strata:
        raise ValueError("no strata for topic")
    judged: dict[str, int] = {}
    mass = {1: 0.0, 2: 0.0}
    for stratum in strata:
        inflation = stratum.pool_size / len(stratum.sampled)
        for doc, grade in stratum.sampled:
            judged[doc] = grade
            if grade in mass:
                mass[grade] += inflation
    gains = [float(judged.get(d, 0)) for d in ranked_docs[:depth]]
    ideal = _ideal_dcg_from_mass(mass, depth)
    if ideal == 0.0:
        return 0.0
    return dcg(gains, depth) / ideal


def mean_over_topics(per_topic_scores: Sequence[float]) -> float:
    if len(per_topic_scores) == 0:
        raise ValueError("no topic scores to average")
    return float(sum(per_topic_scores)) / len(per_topic_scores)


@dataclass(frozen=True)
class EvalResult:
    per_topic: dict[int, float]
    mean: float
    skipped_topics: tuple[int, ...]
    zero_relevant_topics: tuple[int, ...]


def evaluate_run(run: Run, judgments: Qrels | SampledQrels, metric: str,
                 depth: int = RUN_DEPTH_CAP) -> EvalResult:
    """Score every run topic that has judgments; flag the rest.

    Topics without any judgments are excluded from the mean; judged topics
    with no relevant documents score 0 and are flagged.
    """
    if metric not in ("ndcg", "infndcg"):
        raise ValueError(f"unknown metric {metric!r}")
    if metric == "infndcg" and not isinstance(judgments, SampledQrels):
        raise ValueError("infndcg needs sampled qrels")
    per_topic: dict[int, float] = {}
    skipped: list[int] = []
    zero_rel: list[int] = []
    for topic in run.topics():
        docs = run.docs(topic)
        if metric == "ndcg":
            if isinstance(judgments, SampledQrels):
                topic_judgments = judgments.judged(topic)
            else:
                topic_judgments = judgments.for_topic(topic)
            if not topic_judgments:
                skipped.append(topic)
                continue
            score = ndcg(docs, topic_judgments, depth)
            if not any(topic_judgments.values()):
                zero_rel.append(topic)
        else:
            assert isinstance(judgments, SampledQrels)
            strata = judgments.strata.get(topic)
            if not strata:
                skipped.append(topic)
                continue
            score = inf_ndcg(docs, strata, depth)
            if not any(judgments.judged(topic).values()):
                zero_rel.append(topic)
        per_topic[topic] = score
    mean = mean_over_topics(list(per_topic.values())) if per_topic else 0.0
    return EvalResult(per_topic, mean, tuple(skipped), tuple(zero_rel))


# ---------------------------------------------------------------------------
# Significance testing

def _swap_signs(seed: int, topic: int, iterations: int) -> np.ndarray:
    """Deterministic per-topic swap stream; independent of scheduling."""
    rng = np.random.default_rng([abs(int(seed)), int(topic)])
    return 1.0 - 2.0 * rng.integers(0, 2, size=iterations).astype(np.float64)


def approx_randomization_test(scores_a: Mapping[int, float],
                              scores_b: Mapping[int, float],
                              iterations: int, seed: int) -> float:
    """Two-tailed approximate randomization test on paired per-topic scores.

    Each iteration swaps the two systems' scores per topic with
    probability 1/2; the statistic is the absolute difference of means.
    The +1-smoothed p-value avoids zero from finite sampling.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if set(scores_a) != set(scores_b):
        raise ValueError("topic sets differ between the two systems")
    if not scores_a:
        raise ValueError("empty score maps")
    topics = sorted(scores_a)
    diff = np.array([scores_a[t] - scores_b[t] for t in topics], dtype=np.float64)
    observed = abs(float(diff.mean()))
    signs = np.column_stack([_swap_signs(seed, t, iterations) for t in topics])
    stats = np.abs(signs @ diff) / len(topics)
    exceed = int(np.count_nonzero(stats >= observed))
    return (exceed + 1) / (iterations + 1)


def significance_stars(p: float) -> str:
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""
