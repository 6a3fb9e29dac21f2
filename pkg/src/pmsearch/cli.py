"""Command-line entry point: index, search, eval, optimize, ablate, synth.

All randomness flows from explicit --seed flags (or seeds recorded in the
experiment manifest); reruns with the same inputs produce byte-identical
outputs.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from . import harness, optimizer, plots, synth
from .evaluation import (
    Run,
    evaluate_run,
    read_qrels,
    read_run,
    read_sampled_qrels,
    write_run,
)
from .indexing import Bm25Params, build_index, load_index, read_corpus, save_index
from .queries import search
from .space import (
    Configuration,
    default_space,
    load_configuration,
    load_preset,
    preset_names,
    save_configuration,
)
from .terminology import load_lexicons
from .topics import build_query, read_topics


@dataclass
class ExperimentManifest:
    """Paths and settings tying one optimization/ablation experiment together."""

    base_dir: Path
    task: str
    corpus: Path
    topics: Path
    qrels: Path | None
    sampled_qrels: Path | None
    lexicons: Path
    metric: str
    depth: int
    top_k: int
    folds: int
    seed: int
    budget: int
    start_preset: str
    param_space: Path | None = None
    ablation_groups: Path | None = None

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentManifest":
        path = Path(path)
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        base = path.parent

        def resolve(key: str, required: bool = True) -> Path | None:
            value = raw.get(key)
            if value is None:
                if required:
                    raise ValueError(f"{path}: missing {key!r}")
                return None
            p = base / value
            if not p.exists():
                raise FileNotFoundError(f"{path}: {key} file not found: {p}")
            return p

        task = raw.get("task")
        if task not in ("BA", "CT"):
            raise ValueError(f"{path}: task must be BA or CT, got {task!r}")
        return cls(
            base_dir=base,
            task=task,
            corpus=resolve("corpus"),
            topics=resolve("topics"),
            qrels=resolve("qrels", required=False),
            sampled_qrels=resolve("sampled_qrels", required=False),
            lexicons=resolve("lexicons"),
            metric=raw.get("metric", "infndcg"),
            depth=int(raw.get("depth", 1000)),
            top_k=int(raw.get("top_k", 1000)),
            folds=int(raw.get("folds", 10)),
            seed=int(raw.get("seed", 0)),
            budget=int(raw.get("budget", 500)),
            start_preset=raw.get("start_preset", "start"),
            param_space=resolve("param_space", required=False),
            ablation_groups=resolve("ablation_groups", required=False),
        )

    def context(self) -> harness.RetrievalContext:
        docs = read_corpus(self.corpus)
        if self.task == "CT" and docs and not any(d.sex is not None for d in docs):
            raise ValueError(
                f"{self.corpus}: task CT needs demographic fields on the corpus"
            )
        stats = build_index(docs)
        topics = {t.number: t for t in read_topics(self.topics)}
        lexicons = load_lexicons(self.lexicons)
        if self.metric == "infndcg":
            if self.sampled_qrels is None:
                raise ValueError("infndcg metric needs sampled_qrels in the manifest")
            judgments = read_sampled_qrels(self.sampled_qrels)
        else:
            if self.qrels is None:
                raise ValueError("ndcg metric needs qrels in the manifest")
            judgments = read_qrels(self.qrels)
        return harness.RetrievalContext(
            stats=stats,
            topics=topics,
            lexicons=lexicons,
            task=self.task,
            judgments=judgments,
            metric=self.metric,
            depth=self.depth,
            top_k=self.top_k,
        )

    def space(self):
        if self.param_space is not None:
            from .space import load_space

            return load_space(self.param_space)
        return default_space()

    def groups(self) -> list[harness.AblationGroup]:
        if self.ablation_groups is not None:
            return harness.load_ablation_groups(self.ablation_groups)
        return harness.default_ablation_groups()


def _load_config(args, space) -> Configuration:
    if getattr(args, "config", None):
        return load_configuration(args.config, space)
    if getattr(args, "preset", None):
        return load_preset(args.preset, space)
    return space.default_configuration()


def cmd_index(args) -> int:
    docs = read_corpus(args.corpus)
    if not docs:
        print(f"warning: empty corpus {args.corpus}", file=sys.stderr)
    stats = build_index(docs)
    save_index(stats, args.out)
    print(f"indexed {stats.doc_count} documents -> {args.out}")
    return 0


def cmd_search(args) -> int:
    stats = load_index(args.index)
    topics = read_topics(args.topics)
    lexicons = load_lexicons(args.lexicons)
    space = default_space()
    config = _load_config(args, space)
    params = Bm25Params(k1=config.num("bm25.k1"), b=config.num("bm25.b"))
    run = Run(tag=args.tag)
    for topic in topics:
        query = build_query(topic, config, args.task, lexicons)
        for hit in search(stats, query, params, args.top_k):
            run.add(topic.number, hit.doc_id, hit.score)
    write_run(run, args.out)
    print(f"wrote run for {len(topics)} topics -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    run = read_run(args.run)
    if args.metric == "infndcg":
        if not args.sampled:
            raise ValueError("--metric infndcg needs --sampled")
        judgments = read_sampled_qrels(args.sampled)
    else:
        if not args.qrels:
            raise ValueError("--metric ndcg needs --qrels")
        judgments = read_qrels(args.qrels)
    result = evaluate_run(run, judgments, args.metric, args.depth)
    for topic in result.skipped_topics:
        print(f"warning: topic {topic} has no judgments; excluded", file=sys.stderr)
    for topic in result.zero_relevant_topics:
        print(f"warning: topic {topic} has no relevant documents", file=sys.stderr)
    rows = [(str(t), f"{result.per_topic[t]:.6f}") for t in sorted(result.per_topic)]
    rows.append(("mean", f"{result.mean:.6f}"))
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["topic", "score"])
            writer.writerows(rows)
    for topic, score in rows:
        print(f"{topic}\t{score}")
    return 0


def _optimize_fold(manifest_path: str, fold: int) -> dict:
    """Worker for one fold; reloads the context so it can run in a process."""
    manifest = ExperimentManifest.load(manifest_path)
    ctx = manifest.context()
    space = manifest.space()
    folds = harness.stratified_folds(
        sorted(ctx.topics.values(), key=lambda t: t.number),
        manifest.folds, manifest.seed,
    )
    start = load_preset(manifest.start_preset, space)
    train = folds.train_topics(fold)

    def objective(config: Configuration) -> float:
        return ctx.mean_score(config, train)

    best, history = optimizer.optimize(
        objective, space, manifest.budget, [start], manifest.seed + fold,
        n_random=60,
    )
    default_score = ctx.mean_score(space.default_configuration(), train)
    return {
        "fold": fold,
        "best_values": best.config.values,
        "best_score": best.score,
        "start_score": history[0].score,
        "default_score": default_score,
        "trace": optimizer.trace_rows(history),
        "origins": [o.origin for o in history],
        "failed": [o.failed for o in history],
    }


def cmd_optimize(args) -> int:
    manifest = ExperimentManifest.load(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = manifest.context()
    space = manifest.space()
    topics = sorted(ctx.topics.values(), key=lambda t: t.number)
    folds = harness.stratified_folds(topics, manifest.folds, manifest.seed)
    (out_dir / "folds.json").write_text(
        json.dumps({"k": folds.k, "assignments": folds.assignments},
                   indent=1, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(
                pool.map(_optimize_fold, [str(args.manifest)] * folds.k, range(folds.k))
            )
    else:
        results = [_optimize_fold(str(args.manifest), f) for f in range(folds.k)]

    traces = []
    with open(out_dir / "summary.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", "default_score", "start_score", "best_score"])
        for res in results:
            fold = res["fold"]
            config = Configuration(space, res["best_values"])
            save_configuration(config, out_dir / f"best_config_fold{fold}.json")
            with open(out_dir / f"trace_fold{fold}.csv", "w", encoding="utf-8",
                      newline="") as tfh:
                twriter = csv.writer(tfh)
                twriter.writerow(["eval_index", "score", "best_so_far", "origin", "failed"])
                for (idx, score, best), origin, failed in zip(
                    res["trace"], res["origins"], res["failed"]
                ):
                    twriter.writerow([idx, repr(score), repr(best), origin, int(failed)])
            writer.writerow([
                fold,
                f"{res['default_score']:.6f}",
                f"{res['start_score']:.6f}",
                f"{res['best_score']:.6f}",
            ])
            traces.append(res["trace"])
            print(
                f"fold {fold}: default {res['default_score']:.4f} "
                f"start {res['start_score']:.4f} best {res['best_score']:.4f}"
            )
    if not args.no_plots:
        plots.plot_traces(traces, out_dir / "optimization.png",
                          title=f"{manifest.task} configuration search")
    return 0


def cmd_ablate(args) -> int:
    manifest = ExperimentManifest.load(args.manifest)
    run_dir = Path(args.run_dir)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    ctx = manifest.context()
    space = manifest.space()
    folds_raw = json.loads((run_dir / "folds.json").read_text(encoding="utf-8"))
    folds = harness.FoldPlan(
        int(folds_raw["k"]),
        {int(t): int(f) for t, f in folds_raw["assignments"].items()},
    )
    best_configs = {
        fold: load_configuration(run_dir / f"best_config_fold{fold}.json", space)
        for fold in range(folds.k)
    }
    groups = manifest.groups()
    if args.no_groups:
        groups = []
    report = harness.run_ablation(
        folds, best_configs, groups, ctx.evaluate,
        iterations=args.iterations, seed=manifest.seed,
    )
    harness.write_report_csv(report, out_dir / "ablation.csv")
    harness.write_per_topic_csv(report, out_dir / "ablation_per_topic.csv")
    table = harness.format_report_table(report)
    (out_dir / "ablation.txt").write_text(table, encoding="utf-8")
    if not args.no_plots and groups:
        plots.plot_ablation(report, out_dir / "ablation.png",
                            title=f"{manifest.task} ablation")
    print(table, end="")
    return 0


def cmd_synth(args) -> int:
    sizes = synth.SynthSizes(ba_docs=args.ba_docs, ct_docs=args.ct_docs,
                             topics=args.topics)
    data = synth.generate(args.seed, sizes)
    files = synth.write_fixture(data, args.out_dir, seed=args.seed,
                                folds=args.folds, budget=args.budget)
    for f in files:
        print(f)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pmsearch",
        description="Precision-medicine search engine experimentation workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("index", help="build an index snapshot from a JSONL corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("search", help="run topics against an index snapshot")
    p.add_argument("--index", required=True)
    p.add_argument("--topics", required=True)
    p.add_argument("--lexicons", required=True)
    p.add_argument("--task", required=True, choices=("BA", "CT"))
    p.add_argument("--config", help="configuration JSON file")
    p.add_argument("--preset", choices=preset_names(), help="shipped configuration")
    p.add_argument("--top-k", type=int, default=1000)
    p.add_argument("--tag", default="pmsearch")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_search)

    p = sub.add_parser("eval", help="score a run file")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels")
    p.add_argument("--sampled")
    p.add_argument("--metric", choices=("ndcg", "infndcg"), default="ndcg")
    p.add_argument("--depth", type=int, default=1000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("optimize", help="per-fold configuration search")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("ablate", help="ablation report from optimized configs")
    p.add_argument("--manifest", required=True)
    p.add_argument("--run-dir", required=True, help="output directory of optimize")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--iterations", type=int, default=10000)
    p.add_argument("--no-groups", action="store_true")
    p.add_argument("--no-plots", action="store_true")
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("synth", help="generate the synthetic fixture")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, default=17)
    p.add_argument("--ba-docs", type=int, default=200)
    p.add_argument("--ct-docs", type=int, default=100)
    p.add_argument("--topics", type=int, default=12)
    p.add_argument("--folds", type=int, default=3)
    p.add_argument("--budget", type=int, default=200)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:  # surface a clean message, nonzero exit
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
