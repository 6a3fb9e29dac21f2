"""Sequential model-based optimization over a mixed parameter space.

The loop evaluates the provided starting configurations, then alternates
between (a) fitting a random-forest surrogate to all (configuration, score)
pairs seen so far, (b) proposing the best expected-improvement candidate
found by local search around the incumbent plus a uniform random pool, and
(c) evaluating one pure-random configuration, so every configuration keeps
a nonzero selection probability.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from math import ceil, sqrt
from pathlib import Path

import numpy as np
from scipy.special import erf
from sklearn.ensemble import RandomForestRegressor

from .space import BINARY, CATEGORICAL, Configuration, ParamSpace, encode

FOREST_TREES = 10
FOREST_MIN_LEAF = 3
# Fraction of encoded dimensions considered per split (SMAC-like).
FOREST_FEATURE_FRACTION = 5.0 / 6.0


@dataclass(frozen=True)
class Observation:
    config: Configuration
    score: float
    eval_index: int
    origin: str = "model"
    failed: bool = False


class ForestModel:
    """Random-forest surrogate exposing mean and spread across trees."""

    def __init__(self, forest: RandomForestRegressor, space: ParamSpace) -> None:
        self.forest = forest
        self.space = space

    @property
    def trees(self) -> list:
        return list(self.forest.estimators_)

    def predict_encoded(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        per_tree = np.stack([t.predict(x) for t in self.forest.estimators_])
        mu = per_tree.mean(axis=0)
        sigma = per_tree.std(axis=0)
        return mu, sigma

    def predict(self, configs: list[Configuration]) -> tuple[np.ndarray, np.ndarray]:
        x = np.stack([encode(c, self.space) for c in configs])
        return self.predict_encoded(x)


def fit_forest(observations: list[Observation], trees: int = FOREST_TREES,
               min_leaf: int = FOREST_MIN_LEAF, seed: int = 0,
               bootstrap: bool = True) -> ForestModel:
    """Fit the surrogate to the observation history; needs >= 2 points."""
    if len(observations) < 2:
        raise ValueError("need at least 2 observations to fit a forest")
    space = observations[0].config.space
    x = np.stack([encode(o.config, space) for o in observations])
    y = np.array([o.score for o in observations], dtype=np.float64)
    forest = RandomForestRegressor(
        n_estimators=trees,
        min_samples_leaf=min_leaf,
        max_features=max(1, ceil(x.shape[1] * FOREST_FEATURE_FRACTION)),
        bootstrap=bootstrap,
        random_state=abs(int(seed)) % (2**32),
    )
    forest.fit(x, y)
    return ForestModel(forest, space)


def expected_improvement(mu: np.ndarray | float, sigma: np.ndarray | float,
                         best_so_far: float) -> np.ndarray | float:
    """EI for maximization; the sigma = 0 limit is max(mu - best, 0)."""
    mu = np.asarray(mu, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma < 0):
        raise ValueError("sigma must be nonnegative")
    delta = mu - best_so_far
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sigma > 0, delta / np.where(sigma > 0, sigma, 1.0), 0.0)
    phi = np.exp(-0.5 * z * z) / sqrt(2.0 * np.pi)
    big_phi = 0.5 * (1.0 + erf(z / sqrt(2.0)))
    ei = np.where(sigma > 0, delta * big_phi + sigma * phi, np.maximum(delta, 0.0))
    if ei.ndim == 0:
        return float(ei)
    return ei


def random_configuration(space: ParamSpace, rng: np.random.Generator) -> Configuration:
    values: dict[str, object] = {}
    for p in space.params:
        if p.kind == BINARY:
            values[p.name] = bool(rng.integers(0, 2))
        elif p.kind == CATEGORICAL:
            values[p.name] = p.choices[int(rng.integers(0, len(p.choices)))]
        else:
            values[p.name] = float(rng.uniform(p.lo, p.hi))
    return Configuration(space, values)


def _neighbors(config: Configuration, rng: np.random.Generator,
               numeric_sigma: float = 0.2) -> list[Configuration]:
    """One-exchange neighborhood: flip / switch / Gaussian-step one parameter."""
    out = []
    for p in config.space.params:
        current = config.values[p.name]
        if p.kind == BINARY:
            out.append(config.with_overrides({p.name: not current}))
        elif p.kind == CATEGORICAL:
            out.extend(
                config.with_overrides({p.name: choice})
                for choice in p.choices
                if choice != current
            )
        else:
            spread = numeric_sigma * (p.hi - p.lo)
            for _ in range(2):
                value = float(np.clip(float(current) + rng.normal(0.0, spread), p.lo, p.hi))  # type: ignore[arg-type]
                out.append(config.with_overrides({p.name: value}))
    return out


def suggest_next(model: ForestModel, space: ParamSpace, incumbent: Configuration,
                 rng: np.random.Generator, n_random: int = 100,
                 local_steps: int = 3,
                 incumbent_score: float | None = None) -> Configuration:
    """Best-EI configuration from local search plus a uniform candidate pool."""
    if incumbent_score is None:
        # Fall back to the surrogate's view of the incumbent.
        mu_inc, _ = model.predict([incumbent])
        incumbent_score = float(mu_inc[0])
    best_score = incumbent_score
    candidates = [random_configuration(space, rng) for _ in range(n_random)]
    mu, sigma = model.predict(candidates)
    ei = np.asarray(expected_improvement(mu, sigma, best_score))
    best_idx = int(np.argmax(ei))
    best_candidate, best_ei = candidates[best_idx], float(ei[best_idx])

    current = incumbent
    for _ in range(local_steps):
        neighborhood = _neighbors(current, rng)
        mu, sigma = model.predict(neighborhood)
        ei = np.asarray(expected_improvement(mu, sigma, best_score))
        idx = int(np.argmax(ei))
        if float(ei[idx]) <= best_ei:
            break
        best_ei = float(ei[idx])
        best_candidate = current = neighborhood[idx]
    return best_candidate


def optimize(objective, space: ParamSpace, budget: int,
             starts: list[Configuration], seed: int,
             trees: int = FOREST_TREES, min_leaf: int = FOREST_MIN_LEAF,
             n_random: int = 100) -> tuple[Observation, list[Observation]]:
    """Run the optimization loop and return (best, full ordered history).

    Objective failures are recorded as score 0 and flagged rather than
    aborting the run. The best observation is the highest score, earliest
    evaluation winning ties.
    """
    if not starts:
        raise ValueError("need at least one starting configuration")
    if budget < len(starts):
        raise ValueError("budget smaller than the number of starts")
    rng = np.random.default_rng(abs(int(seed)))
    history: list[Observation] = []

    def evaluate(config: Configuration, origin: str) -> None:
        try:
            score = float(objective(config))
            failed = False
        except Exception:
            score, failed = 0.0, True
        history.append(Observation(config, score, len(history), origin, failed))

    for config in starts:
        evaluate(config, "start")
    while len(history) < budget:
        if len(history) < 2:
            # not enough points for a forest yet; draw one at random
            evaluate(random_configuration(space, rng), "random")
            continue
        best = max(history, key=lambda o: (o.score, -o.eval_index))
        model = fit_forest(history, trees=trees, min_leaf=min_leaf,
                           seed=seed + len(history))
        suggestion = suggest_next(model, space, best.config, rng,
                                  n_random=n_random, incumbent_score=best.score)
        evaluate(suggestion, "model")
        if len(history) < budget:
            evaluate(random_configuration(space, rng), "random")
    best = max(history, key=lambda o: (o.score, -o.eval_index))
    return best, history


def trace_rows(history: list[Observation]) -> list[tuple[int, float, float]]:
    """(eval_index, score, best_so_far) rows; best_so_far is monotone."""
    rows = []
    best = float("-inf")
    for obs in history:
        best = max(best, obs.score)
        rows.append((obs.eval_index, obs.score, best))
    return rows


def write_trace(history: list[Observation], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["eval_index", "score", "best_so_far", "origin", "failed"])
        for (idx, score, best), obs in zip(trace_rows(history), history):
            writer.writerow([idx, repr(score), repr(best), obs.origin, int(obs.failed)])
