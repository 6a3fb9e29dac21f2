from __future__ import annotations

import numpy as np
import pytest

from pmsearch.optimizer import (
    Observation,
    expected_improvement,
    fit_forest,
    optimize,
    random_configuration,
    suggest_next,
    trace_rows,
)
from pmsearch.space import BINARY, CATEGORICAL, NUMERIC, Param, ParamSpace


def small_space() -> ParamSpace:
    return ParamSpace([
        Param("flag", BINARY, False),
        Param("mode", CATEGORICAL, "a", choices=("a", "b", "c")),
        Param("x", NUMERIC, 0.5, lo=0.0, hi=1.0),
    ])


def observations(space, configs, scores):
    return [
        Observation(c, s, i) for i, (c, s) in enumerate(zip(configs, scores))
    ]


class TestFitForest:
    def test_needs_two_observations(self):
        space = small_space()
        obs = observations(space, [space.default_configuration()], [0.5])
        with pytest.raises(ValueError):
            fit_forest(obs, seed=0)

    def test_constant_scores_predict_constant(self):
        space = small_space()
        rng = np.random.default_rng(0)
        configs = [random_configuration(space, rng) for _ in range(12)]
        model = fit_forest(observations(space, configs, [0.7] * 12), seed=1)
        mu, sigma = model.predict(configs)
        np.testing.assert_allclose(mu, 0.7)
        np.testing.assert_allclose(sigma, 0.0, atol=1e-12)

    def test_single_tree_interpolates_without_bootstrap(self):
        space = small_space()
        rng = np.random.default_rng(1)
        configs = [random_configuration(space, rng) for _ in range(10)]
        scores = [float(rng.uniform(0, 1)) for _ in configs]
        model = fit_forest(
            observations(space, configs, scores),
            trees=1, min_leaf=1, seed=2, bootstrap=False,
        )
        mu, _ = model.predict(configs)
        np.testing.assert_allclose(mu, scores, atol=1e-12)

    def test_learns_binary_step(self):
        space = small_space()
        rng = np.random.default_rng(3)
        configs = [random_configuration(space, rng) for _ in range(40)]
        scores = [1.0 if c.flag("flag") else 0.0 for c in configs]
        model = fit_forest(observations(space, configs, scores), seed=4)
        on = space.default_configuration().with_overrides({"flag": True})
        off = space.default_configuration().with_overrides({"flag": False})
        mu, _ = model.predict([on, off])
        assert mu[0] > mu[1]

    def test_deterministic_under_seed(self):
        space = small_space()
        rng = np.random.default_rng(5)
        configs = [random_configuration(space, rng) for _ in range(15)]
        scores = [float(rng.uniform(0, 1)) for _ in configs]
        obs = observations(space, configs, scores)
        m1 = fit_forest(obs, seed=9)
        m2 = fit_forest(obs, seed=9)
        probe = [random_configuration(space, np.random.default_rng(6)) for _ in range(5)]
        np.testing.assert_array_equal(m1.predict(probe)[0], m2.predict(probe)[0])


class TestExpectedImprovement:
    def test_zero_sigma_below_best(self):
        assert expected_improvement(0.4, 0.0, 0.5) == 0.0

    def test_zero_sigma_above_best(self):
        assert expected_improvement(0.6, 0.0, 0.5) == pytest.approx(0.1)

    def test_at_best_with_unit_sigma(self):
        assert expected_improvement(0.5, 1.0, 0.5) == pytest.approx(
            1 / np.sqrt(2 * np.pi), abs=1e-9
        )
        assert expected_improvement(0.5, 1.0, 0.5) == pytest.approx(0.3989, abs=1e-4)

    def test_vectorized_and_nonnegative(self):
        mu = np.linspace(-1, 1, 21)
        sigma = np.linspace(0, 2, 21)
        ei = expected_improvement(mu, sigma, 0.3)
        assert np.all(np.asarray(ei) >= 0)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            expected_improvement(0.5, -0.1, 0.5)


class TestSuggestNext:
    def test_deterministic_under_seed(self):
        space = small_space()
        rng = np.random.default_rng(7)
        configs = [random_configuration(space, rng) for _ in range(10)]
        scores = [float(c.num("x")) for c in configs]
        obs = observations(space, configs, scores)
        model = fit_forest(obs, seed=0)
        best = max(obs, key=lambda o: o.score)
        s1 = suggest_next(model, space, best.config, np.random.default_rng(42),
                          incumbent_score=best.score)
        s2 = suggest_next(model, space, best.config, np.random.default_rng(42),
                          incumbent_score=best.score)
        assert s1.values == s2.values


class TestOptimize:
    def test_budget_equal_starts_returns_best_start(self):
        space = small_space()
        starts = [
            space.default_configuration().with_overrides({"x": 0.2}),
            space.default_configuration().with_overrides({"x": 0.9}),
        ]
        best, history = optimize(lambda c: c.num("x"), space, 2, starts, seed=0)
        assert len(history) == 2
        assert best.score == 0.9
        assert all(o.origin == "start" for o in history)

    def test_history_complete_and_interleaved(self):
        space = small_space()
        start = space.default_configuration()
        best, history = optimize(lambda c: c.num("x"), space, 11, [start], seed=1)
        assert len(history) == 11
        assert [o.eval_index for o in history] == list(range(11))
        origins = [o.origin for o in history]
        model_steps = origins.count("model")
        random_steps = origins.count("random")
        assert model_steps >= (11 - 1) // 2
        assert random_steps >= model_steps - 1

    def test_best_never_regresses_and_trace_monotone(self):
        space = small_space()
        start = space.default_configuration()
        best, history = optimize(lambda c: c.num("x"), space, 20, [start], seed=2)
        assert best.score == max(o.score for o in history)
        rows = trace_rows(history)
        bests = [r[2] for r in rows]
        assert all(a <= b for a, b in zip(bests, bests[1:]))

    def test_bit_reproducible_under_seed(self):
        space = small_space()
        start = space.default_configuration()
        _, h1 = optimize(lambda c: c.num("x"), space, 15, [start], seed=3)
        _, h2 = optimize(lambda c: c.num("x"), space, 15, [start], seed=3)
        assert [(o.score, o.origin, o.config.values) for o in h1] == \
            [(o.score, o.origin, o.config.values) for o in h2]

    def test_objective_failure_recorded(self):
        space = small_space()

        def flaky(config):
            if config.num("x") > 0.5:
                raise RuntimeError("boom")
            return config.num("x")

        start = space.default_configuration().with_overrides({"x": 0.9})
        best, history = optimize(flaky, space, 6, [start], seed=4)
        assert history[0].failed
        assert history[0].score == 0.0
        assert not all(o.failed for o in history)

    def test_budget_validation(self):
        space = small_space()
        with pytest.raises(ValueError):
            optimize(lambda c: 0.0, space, 0, [space.default_configuration()], seed=0)
        with pytest.raises(ValueError):
            optimize(lambda c: 0.0, space, 5, [], seed=0)

    def test_earliest_tie_break(self):
        space = small_space()
        starts = [
            space.default_configuration().with_overrides({"x": 0.4}),
            space.default_configuration().with_overrides({"x": 0.4, "flag": True}),
        ]
        best, _ = optimize(lambda c: 0.25, space, 2, starts, seed=5)
        assert best.eval_index == 0

    def test_monotone_1d_objective_reaches_top(self):
        # a single rising numeric parameter; the search should end within 5%
        # of the maximum in nearly every seed
        space = ParamSpace([
            Param("x", NUMERIC, 0.1, lo=0.0, hi=1.0),
            Param("pad", NUMERIC, 0.5, lo=0.0, hi=1.0),
        ])
        wins = 0
        for seed in range(10):
            start = space.default_configuration()
            best, _ = optimize(lambda c: c.num("x"), space, 200, [start], seed=seed,
                               n_random=40)
            if best.score >= 0.95:
                wins += 1
        assert wins >= 9
