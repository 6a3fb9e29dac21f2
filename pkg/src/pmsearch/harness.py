"""Cross-validation folds, the retrieval objective, and the ablation study.

Folds are stratified so that per-disease and per-gene topic counts stay as
close to uniform as the arithmetic allows. The ablation study re-evaluates
each fold's tuned configuration with one feature group reset to defaults at
a time, averages test scores across folds, and attaches a randomization
test against the pooled per-topic baseline scores.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evaluation import (
    Qrels,
    SampledQrels,
    approx_randomization_test,
    inf_ndcg,
    mean_over_topics,
    ndcg,
    significance_stars,
)
from .indexing import Bm25Params, IndexStats
from .optimizer import Observation, optimize
from .queries import search
from .space import Configuration, ParamSpace
from .terminology import Lexicons
from .topics import Topic, build_query


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: dict[int, int]

    def fold_topics(self, fold: int) -> list[int]:
        return sorted(t for t, f in self.assignments.items() if f == fold)

    def train_topics(self, fold: int) -> list[int]:
        return sorted(t for t, f in self.assignments.items() if f != fold)


def stratified_folds(topics: list[Topic], k: int, seed: int) -> FoldPlan:
    """Greedy balanced assignment of topics to k folds.

    Topics are grouped by (disease, gene); each group's members are placed
    one at a time into the fold currently lightest in that disease, then
    that gene, then overall size. Deterministic for a fixed seed.
    """
    if k < 2:
        raise ValueError("need at least 2 folds")
    if k > len(topics):
        raise ValueError(f"cannot split {len(topics)} topics into {k} folds")
    rng = np.random.default_rng(abs(int(seed)))
    groups: dict[tuple[str, str], list[Topic]] = {}
    for t in topics:
        groups.setdefault((t.disease.lower(), t.gene.upper()), []).append(t)
    keys = sorted(groups, key=lambda key: (-len(groups[key]), key))
    disease_counts: list[dict[str, int]] = [{} for _ in range(k)]
    gene_counts: list[dict[str, int]] = [{} for _ in range(k)]
    sizes = [0] * k
    assignments: dict[int, int] = {}
    for key in keys:
        disease, gene = key
        members = sorted(groups[key], key=lambda t: t.number)
        order = rng.permutation(len(members))
        for i in order:
            topic = members[int(i)]
            fold = min(
                range(k),
                key=lambda f: (
                    disease_counts[f].get(disease, 0),
                    gene_counts[f].get(gene, 0),
                    sizes[f],
                    f,
                ),
            )
            assignments[topic.number] = fold
            disease_counts[fold][disease] = disease_counts[fold].get(disease, 0) + 1
            gene_counts[fold][gene] = gene_counts[fold].get(gene, 0) + 1
            sizes[fold] += 1
    return FoldPlan(k, assignments)


# ---------------------------------------------------------------------------
# Retrieval objective

@dataclass
class RetrievalContext:
    """Everything needed to score a configuration on a set of topics."""

    stats: IndexStats
    topics: dict[int, Topic]
    lexicons: Lexicons
    task: str
    judgments: Qrels | SampledQrels
    metric: str = "infndcg"
    depth: int = 1000
    top_k: int = 1000

    def topic_score(self, config: Configuration, topic: Topic) -> float | None:
        params = Bm25Params(k1=config.num("bm25.k1"), b=config.num("bm25.b"))
        query = build_query(topic, config, self.task, self.lexicons)
        hits = search(self.stats, query, params, self.top_k)
        ranked = [h.doc_id for h in hits]
        if self.metric == "infndcg":
            assert isinstance(self.judgments, SampledQrels)
            strata = self.judgments.strata.get(topic.number)
            if not strata:
                return None
            return inf_ndcg(ranked, strata, self.depth)
        if isinstance(self.judgments, SampledQrels):
            judged = self.judgments.judged(topic.number)
        else:
            judged = self.judgments.for_topic(topic.number)
        if not judged:
            return None
        return ndcg(ranked, judged, self.depth)

    def evaluate(self, config: Configuration, topic_numbers: list[int]) -> dict[int, float]:
        out: dict[int, float] = {}
        for number in topic_numbers:
            score = self.topic_score(config, self.topics[number])
            if score is not None:
                out[number] = score
        return out

    def mean_score(self, config: Configuration, topic_numbers: list[int]) -> float:
        scores = self.evaluate(config, topic_numbers)
        return mean_over_topics(list(scores.values())) if scores else 0.0


@dataclass
class FoldResult:
    fold: int
    best: Observation
    history: list[Observation]


def run_fold_optimizations(ctx: RetrievalContext, folds: FoldPlan, budget: int,
                           starts: list[Configuration], seed: int,
                           n_random: int = 60) -> list[FoldResult]:
    """Independent optimization per fold, each on its training topics only."""
    results = []
    for fold in range(folds.k):
        train = folds.train_topics(fold)

        def objective(config: Configuration, train=train) -> float:
            return ctx.mean_score(config, train)

        best, history = optimize(
            objective, starts[0].space, budget, starts, seed + fold,
            n_random=n_random,
        )
        results.append(FoldResult(fold, best, history))
    return results


# ---------------------------------------------------------------------------
# Ablation study

@dataclass(frozen=True)
class AblationGroup:
    """One feature group: overrides reset its parameters to defaults (sign
    '-') or force a non-default value (sign '+'); marked groups make up the
    reduced model."""

    name: str
    overrides: dict[str, object]
    sign: str = "-"
    marked: bool = False


def default_ablation_groups() -> list[AblationGroup]:
    """The shipped feature groups, in report row order.

    Marked groups follow the biomedical-abstracts reduced-model choice;
    edit the manifest to mark a different subset.
    """
    from .space import MULTIWORD_CLAUSES, SUBQUERIES, FIELDS, WEIGHTED_CLAUSES
    from .terminology import NEGATIVE_KEYWORDS, POSITIVE_KEYWORDS

    multiword = {f"query.multiword.{c}": "bag_of_words" for c in MULTIWORD_CLAUSES}
    fields = {f"weight.field.{sq}.{f}": 1.0 for sq in SUBQUERIES for f in FIELDS}
    clauses: dict[str, object] = {
        "weight.subquery.disease": 1.0,
        "weight.subquery.gene": 1.0,
        "weight.subquery.keywords_positive": 1.0,
        "weight.subquery.keywords_negative": -1.0,
    }
    clauses.update({f"weight.clause.{c}": 1.0 for c in WEIGHTED_CLAUSES})
    disease_all = {
        "disease.preferred_term": False,
        "disease.synonyms": False,
        "disease.hypernyms": False,
        "disease.solid_tumor": False,
    }
    gene_all = {"gene.synonyms": False, "gene.description": False, "gene.family": False}
    kw_pos = {f"kw.pos.{w.lower()}": False for w in POSITIVE_KEYWORDS}
    kw_neg = {f"kw.neg.{w.lower()}": False for w in NEGATIVE_KEYWORDS}
    return [
        AblationGroup("b", {"bm25.b": 0.75}, "-", marked=True),
        AblationGroup("k1", {"bm25.k1": 1.2}, "-"),
        AblationGroup("expansions", {
            "query.expansions.disease": "disjunction",
            "query.expansions.gene": "disjunction",
        }, "-", marked=True),
        AblationGroup("multiword", dict(multiword), "-", marked=True),
        AblationGroup("fields", dict(fields), "-", marked=True),
        AblationGroup("clauses", clauses, "-", marked=True),
        AblationGroup("disease-everything", dict(disease_all), "-"),
        AblationGroup("disease-preferred", {"disease.preferred_term": False}, "-",
                      marked=True),
        AblationGroup("disease-synonyms", {"disease.synonyms": False}, "-", marked=True),
        AblationGroup("disease-solid", {"disease.solid_tumor": False}, "-"),
        AblationGroup("disease-hypernyms", {"disease.hypernyms": True}, "+"),
        AblationGroup("gene-everything", dict(gene_all), "-"),
        AblationGroup("gene-synonyms", {"gene.synonyms": False}, "-", marked=True),
        AblationGroup("gene-description", {"gene.description": False}, "-"),
        AblationGroup("gene-family", {"gene.family": False}, "-"),
        AblationGroup("stopwords", {"stopword_filtering": False}, "-", marked=True),
        AblationGroup("keywords-positive", dict(kw_pos), "-", marked=True),
        AblationGroup("keywords-negative", dict(kw_neg), "-"),
        AblationGroup("non-melanoma", {"keyword.non_melanoma": False}, "-"),
        AblationGroup("gene-tagger", {"weight.subquery.gene_tagger": 0.0}, "-"),
    ]


def save_ablation_groups(groups: list[AblationGroup], path: str | Path) -> None:
    payload = {
        "groups": [
            {
                "name": g.name,
                "sign": g.sign,
                "marked": g.marked,
                "overrides": g.overrides,
            }
            for g in groups
        ]
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def load_ablation_groups(path: str | Path) -> list[AblationGroup]:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return [
        AblationGroup(
            name=item["name"],
            overrides=dict(item.get("overrides", {})),
            sign=item.get("sign", "-"),
            marked=bool(item.get("marked", False)),
        )
        for item in raw["groups"]
    ]


def validate_groups(groups: list[AblationGroup], space: ParamSpace) -> None:
    for group in groups:
        unknown = set(group.overrides) - set(space.by_name)
        if unknown:
            raise ValueError(f"group {group.name!r}: unknown parameters {sorted(unknown)}")


def ablation_score(test_scores_per_split: list[float]) -> float:
    """Mean of the per-split test scores."""
    if not test_scores_per_split:
        raise ValueError("no split scores")
    return mean_over_topics(test_scores_per_split)


def reduced_model(config: Configuration, groups: list[AblationGroup]) -> Configuration:
    """Reset every parameter covered only by non-marked groups to its default."""
    marked_params: set[str] = set()
    all_params: set[str] = set()
    for group in groups:
        all_params |= set(group.overrides)
        if group.marked:
            marked_params |= set(group.overrides)
    reset = all_params - marked_params
    defaults = {name: config.space.by_name[name].default for name in reset}
    return config.with_overrides(defaults)


@dataclass(frozen=True)
class AblationRow:
    name: str
    sign: str
    score: float
    delta_percent: float
    p_value: float
    stars: str
    marked: bool


@dataclass
class AblationReport:
    baseline: float
    rows: list[AblationRow]
    reduced: AblationRow | None
    baseline_per_topic: dict[int, float]
    per_topic: dict[str, dict[int, float]] = field(default_factory=dict)


def run_ablation(folds: FoldPlan, best_configs: dict[int, Configuration],
                 groups: list[AblationGroup], evaluator, iterations: int = 10000,
                 seed: int = 0, with_reduced: bool = True) -> AblationReport:
    """Evaluate the tuned, ablated and reduced configurations on test folds.

    ``evaluator(config, topic_numbers)`` must return per-topic scores.
    Significance compares each variant's pooled per-topic scores against
    the pooled baseline, two-tailed.
    """
    if set(best_configs) != set(range(folds.k)):
        raise ValueError("need exactly one best configuration per fold")
    space = best_configs[0].space
    validate_groups(groups, space)

    def evaluate_variant(transform) -> tuple[list[float], dict[int, float]]:
        fold_means: list[float] = []
        pooled: dict[int, float] = {}
        for fold in range(folds.k):
            config = transform(best_configs[fold])
            scores = evaluator(config, folds.fold_topics(fold))
            fold_means.append(
                mean_over_topics(list(scores.values())) if scores else 0.0
            )
            pooled.update(scores)
        return fold_means, pooled

    baseline_means, baseline_pooled = evaluate_variant(lambda c: c)
    baseline = ablation_score(baseline_means)
    report = AblationReport(
        baseline=baseline,
        rows=[],
        reduced=None,
        baseline_per_topic=baseline_pooled,
    )
    report.per_topic["baseline"] = baseline_pooled

    def make_row(name: str, sign: str, marked: bool, transform) -> AblationRow:
        means, pooled = evaluate_variant(transform)
        score = ablation_score(means)
        delta = (score - baseline) / baseline * 100.0 if baseline else 0.0
        p = approx_randomization_test(pooled, baseline_pooled, iterations, seed)
        report.per_topic[name] = pooled
        return AblationRow(name, sign, score, delta, p, significance_stars(p), marked)

    for group in groups:
        row = make_row(
            group.name, group.sign, group.marked,
            lambda c, g=group: c.with_overrides(g.overrides),
        )
        report.rows.append(row)
    if with_reduced and any(g.marked for g in groups):
        report.reduced = make_row(
            "reduced-model", "", False, lambda c: reduced_model(c, groups)
        )
    return report


# ---------------------------------------------------------------------------
# Report emission

def write_report_csv(report: AblationReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "score", "delta_percent", "p_value", "stars"])
        writer.writerow(["baseline", f"{report.baseline:.6f}", "", "", ""])
        rows = list(report.rows) + ([report.reduced] if report.reduced else [])
        for row in rows:
            writer.writerow([
                row.name,
                f"{row.score:.6f}",
                f"{row.delta_percent:.2f}",
                f"{row.p_value:.6f}",
                row.stars,
            ])


def write_per_topic_csv(report: AblationReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "topic", "score"])
        for group in sorted(report.per_topic):
            for topic in sorted(report.per_topic[group]):
                writer.writerow([group, topic, f"{report.per_topic[group][topic]:.6f}"])


def format_report_table(report: AblationReport) -> str:
    """Plain-text table: configuration, score, delta and significance."""
    lines = [
        f"{'Configuration':<28} {'score':>8} {'diff':>9}  p",
        "-" * 58,
        f"{'Optimized model (baseline)':<28} {report.baseline:>8.4f}",
    ]
    rows = list(report.rows) + ([report.reduced] if report.reduced else [])
    for row in rows:
        name = f"{row.sign}{row.name}" if row.sign else row.name
        dagger = " †" if row.marked else ""
        lines.append(
            f"{name:<28} {row.score:>8.4f} {row.delta_percent:>+8.2f}%"
            f"  {row.p_value:.4f}{row.stars}{dagger}"
        )
    return "\n".join(lines) + "\n"
