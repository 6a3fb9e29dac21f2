"""Planted 20-parameter mixed-space objective for optimizer benchmarks.

The objective is a deterministic score in [0, 1] with a known optimum:
binary and categorical parameters reward matching a planted target, the
numeric parameters form smooth bumps around planted centers. Used to check
that model-based search beats pure random search at equal budget.
"""

from __future__ import annotations

import numpy as np

from .optimizer import optimize, random_configuration
from .space import BINARY, CATEGORICAL, NUMERIC, Configuration, Param, ParamSpace

N_BINARY = 8
N_CATEGORICAL = 4
N_NUMERIC = 8
CHOICES = ("low", "mid", "high")

BINARY_WEIGHT = 0.30
CATEGORICAL_WEIGHT = 0.20
NUMERIC_WEIGHT = 0.50
NUMERIC_SCALE = 0.35


def benchmark_space() -> ParamSpace:
    params: list[Param] = []
    for i in range(N_BINARY):
        params.append(Param(f"flag{i}", BINARY, False))
    for i in range(N_CATEGORICAL):
        params.append(Param(f"mode{i}", CATEGORICAL, "low", choices=CHOICES))
    for i in range(N_NUMERIC):
        params.append(Param(f"x{i}", NUMERIC, 0.5, lo=0.0, hi=1.0))
    return ParamSpace(params)


def planted_target(seed: int = 2020) -> dict[str, object]:
    rng = np.random.default_rng(seed)
    target: dict[str, object] = {}
    for i in range(N_BINARY):
        target[f"flag{i}"] = bool(rng.integers(0, 2))
    for i in range(N_CATEGORICAL):
        target[f"mode{i}"] = CHOICES[int(rng.integers(0, len(CHOICES)))]
    for i in range(N_NUMERIC):
        target[f"x{i}"] = float(rng.uniform(0.2, 0.8))
    return target


def benchmark_objective(target: dict[str, object] | None = None):
    """Objective closure scoring configurations against the planted target."""
    target = target or planted_target()

    def score(config: Configuration) -> float:
        flags = sum(
            config.values[f"flag{i}"] == target[f"flag{i}"] for i in range(N_BINARY)
        )
        cats = sum(
            config.values[f"mode{i}"] == target[f"mode{i}"]
            for i in range(N_CATEGORICAL)
        )
        bumps = 0.0
        for i in range(N_NUMERIC):
            d = float(config.values[f"x{i}"]) - float(target[f"x{i}"])  # type: ignore[arg-type]
            bumps += float(np.exp(-((d / NUMERIC_SCALE) ** 2)))
        return (
            BINARY_WEIGHT * flags / N_BINARY
            + CATEGORICAL_WEIGHT * cats / N_CATEGORICAL
            + NUMERIC_WEIGHT * bumps / N_NUMERIC
        )

    return score


def random_search(objective, space: ParamSpace, budget: int, seed: int) -> float:
    """Best score over uniform random draws at the same budget."""
    rng = np.random.default_rng(abs(int(seed)))
    return max(
        objective(random_configuration(space, rng)) for _ in range(budget)
    )


def paired_comparison(budget: int = 300, seeds: range = range(10)):
    """Per-seed (smbo_best, random_best) pairs on the shipped benchmark."""
    space = benchmark_space()
    objective = benchmark_objective()
    pairs = []
    for seed in seeds:
        start = random_configuration(space, np.random.default_rng(10_000 + seed))
        best, _ = optimize(objective, space, budget, [start], seed)
        pairs.append((best.score, random_search(objective, space, budget, seed)))
    return pairs
