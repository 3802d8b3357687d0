import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskalloc import (
    CompoundReturnDistribution,
    ContinuousEvaluator,
    DimensionTooLarge,
    DiscreteEvaluator,
    OptimizerOptions,
    RiskSpec,
    build_discrete_compound,
    grid_refine,
    maximize,
    project_to_simplex,
    solve_two_asset_betting,
    sweep_rho,
    two_point_betting,
)
from conftest import random_discrete_model


class TestProjection:
    def test_identity_on_feasible_points(self):
        v = np.array([0.2, 0.5, 0.3])
        np.testing.assert_array_equal(project_to_simplex(v).values, v)

    def test_clips_to_vertex(self):
        np.testing.assert_array_equal(project_to_simplex([2.0, 0.0]).values, [1.0, 0.0])

    def test_symmetric_point(self):
        np.testing.assert_allclose(
            project_to_simplex([0.8, 0.8]).values, [0.5, 0.5], atol=1e-15
        )

    def test_idempotent(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            v = rng.normal(size=rng.integers(1, 6))
            once = project_to_simplex(v).values
            twice = project_to_simplex(once).values
            np.testing.assert_array_equal(once, twice)

    @given(
        v=st.lists(st.floats(-5.0, 5.0), min_size=1, max_size=6),
        seed=st.integers(0, 10_000),
    )
    @settings(max_examples=80, deadline=None)
    def test_projection_variational_inequality(self, v, seed):
        # p = P(v) satisfies <v - p, q - p> <= 0 for every feasible q
        v = np.array(v)
        p = project_to_simplex(v).values
        rng = np.random.default_rng(seed)
        for _ in range(20):
            q = rng.dirichlet(np.ones(v.size))
            assert float((v - p) @ (q - p)) <= 1e-9


class TestMaximize:
    def test_kelly_point(self, betting_dist, kelly_spec):
        result = maximize(DiscreteEvaluator(betting_dist, kelly_spec), kelly_spec)
        assert result.converged
        assert result.k_star.values[1] == pytest.approx(0.4, abs=1e-6)
        assert result.kkt.satisfied

    def test_risk_penalized_betting(self, betting_dist):
        spec = RiskSpec(rho=1.0, n=1)
        result = maximize(DiscreteEvaluator(betting_dist, spec), spec)
        assert result.converged
        assert result.k_star.values[1] == pytest.approx(0.2035, abs=1e-3)

    def test_full_risky_boundary(self):
        dist = build_discrete_compound(two_point_betting(0.75), 1)
        spec = RiskSpec(rho=0.0, n=1)
        result = maximize(DiscreteEvaluator(dist, spec), spec)
        assert result.k_star.values[1] == pytest.approx(1.0, abs=1e-9)
        assert result.converged

    def test_inventory_corner(self):
        spec = RiskSpec(rho=0.5, n=5)
        result = maximize(ContinuousEvaluator(1.0, spec), spec)
        assert result.converged
        np.testing.assert_allclose(result.k_star.values, [1.0, 0.0], atol=1e-6)
        assert result.kkt.satisfied

    def test_iterates_stay_feasible_and_ascend(self, betting_dist):
        spec = RiskSpec(rho=0.4, n=1)
        inner = DiscreteEvaluator(betting_dist, spec)

        class Recorder:
            m = inner.m

            def value(self, k):
                assert np.all(np.asarray(k) >= -1e-12)
                assert abs(float(np.sum(k)) - 1.0) < 1e-9
                return inner.value(k)

            def gradient(self, k):
                return inner.gradient(k)

            def moments(self, k):
                return inner.moments(k)

        result = maximize(Recorder(), spec, want_trace=True)
        assert result.converged
        us = [u for _, u in result.trace]
        assert all(b >= a - 1e-14 for a, b in zip(us, us[1:]))

    def test_warm_start_is_single_start(self, betting_dist, kelly_spec):
        evaluator = DiscreteEvaluator(betting_dist, kelly_spec)
        cold = maximize(evaluator, kelly_spec)
        warm = maximize(evaluator, kelly_spec, init=cold.k_star)
        assert warm.iterations <= 1
        np.testing.assert_allclose(warm.k_star.values, cold.k_star.values, atol=1e-8)

    def test_single_alternative_is_trivial(self):
        dist = CompoundReturnDistribution(returns=[[1.2]], probs=[1.0], n=1)
        spec = RiskSpec(rho=1.0, n=1)
        result = maximize(DiscreteEvaluator(dist, spec), spec)
        assert result.converged
        assert result.k_star.values.tolist() == [1.0]


class TestGridRefine:
    def test_agrees_with_gradient_path_on_fixtures(self):
        fixtures = []
        for p, rho in [(0.6, 0.0), (0.6, 1.0), (0.75, 1.0)]:
            spec = RiskSpec(rho=rho, n=1)
            dist = build_discrete_compound(two_point_betting(p), 1)
            fixtures.append((DiscreteEvaluator(dist, spec), spec))
        spec = RiskSpec(rho=0.5, n=5)
        fixtures.append((ContinuousEvaluator(1.0, spec), spec))

        for evaluator, spec in fixtures:
            gradient_result = maximize(evaluator, spec)
            grid_result = grid_refine(evaluator, spec)
            np.testing.assert_allclose(
                gradient_result.k_star.values, grid_result.k_star.values, atol=1e-4
            )
            assert gradient_result.u_star == pytest.approx(grid_result.u_star, abs=1e-8)

    def test_reported_large_p_value(self):
        spec = RiskSpec(rho=1.0, n=1)
        dist = build_discrete_compound(two_point_betting(0.75), 1)
        result = grid_refine(DiscreteEvaluator(dist, spec), spec)
        assert result.k_star.values[1] == pytest.approx(0.5643, abs=1e-3)

    def test_degenerate_model_returns_feasible_point(self):
        dist = CompoundReturnDistribution(returns=[[1.5, 1.5]], probs=[1.0], n=1)
        spec = RiskSpec(rho=0.3, n=1)
        result = grid_refine(DiscreteEvaluator(dist, spec), spec)
        values = result.k_star.values
        assert np.all(values >= 0.0)
        assert float(values.sum()) == pytest.approx(1.0, abs=1e-10)
        # ties resolve toward the first alternative
        assert values[0] == pytest.approx(1.0, abs=1e-9)

    def test_three_alternatives_against_gradient_path(self):
        rng = np.random.default_rng(404)
        model = random_discrete_model(rng, n_atoms=3, m=3)
        spec = RiskSpec(rho=0.2, n=2)
        dist = build_discrete_compound(model, 2)
        evaluator = DiscreteEvaluator(dist, spec)
        gradient_result = maximize(evaluator, spec)
        grid_result = grid_refine(evaluator, spec, levels=10)
        assert gradient_result.u_star == pytest.approx(grid_result.u_star, abs=1e-8)
        np.testing.assert_allclose(
            gradient_result.k_star.values, grid_result.k_star.values, atol=1e-4
        )

    def test_dimension_cap(self):
        dist = CompoundReturnDistribution(
            returns=np.full((1, 4), 1.5), probs=[1.0], n=1
        )
        spec = RiskSpec(rho=0.0, n=1)
        with pytest.raises(DimensionTooLarge):
            grid_refine(DiscreteEvaluator(dist, spec), spec)


class TestSweep:
    def test_betting_sweep_tracks_root_solver(self, betting_model):
        spec = RiskSpec(rho=0.0, n=1)
        dist = build_discrete_compound(betting_model, 1)
        factory = lambda s: DiscreteEvaluator(dist, s)
        rhos = [round(0.1 * i, 12) for i in range(11)]
        rows = sweep_rho(factory, spec, rhos)
        assert [row.rho for row in rows] == rhos
        k2 = [row.result.k_star.values[1] for row in rows]
        assert k2[0] == pytest.approx(0.4, abs=1e-6)
        assert k2[-1] == pytest.approx(0.2035, abs=1e-3)
        assert all(a >= b - 1e-9 for a, b in zip(k2, k2[1:]))
        for rho, value in zip(rhos, k2):
            assert value == pytest.approx(solve_two_asset_betting(0.6, rho), abs=1e-6)

    def test_single_entry_sweep_is_kelly(self, betting_model):
        spec = RiskSpec(rho=0.0, n=1)
        dist = build_discrete_compound(betting_model, 1)
        rows = sweep_rho(lambda s: DiscreteEvaluator(dist, s), spec, [0.0])
        assert rows[0].result.k_star.values[1] == pytest.approx(0.4, abs=1e-6)

    def test_row_errors_do_not_abort(self, betting_model):
        spec = RiskSpec(rho=0.0, n=1)
        dist = build_discrete_compound(betting_model, 1)

        def factory(s):
            if abs(s.rho - 0.5) < 1e-12:
                raise RuntimeError("synthetic row failure")
            return DiscreteEvaluator(dist, s)

        rows = sweep_rho(factory, spec, [0.0, 0.5, 1.0])
        assert rows[0].error is None and rows[2].error is None
        assert rows[1].result is None
        assert "synthetic row failure" in rows[1].error

    def test_warm_start_does_not_change_optima(self, betting_model):
        spec = RiskSpec(rho=0.0, n=1)
        dist = build_discrete_compound(betting_model, 1)
        factory = lambda s: DiscreteEvaluator(dist, s)
        rhos = [0.0, 0.3, 0.6, 1.0]
        swept = sweep_rho(factory, spec, rhos)
        for row in swept:
            from dataclasses import replace

            solo = maximize(factory(replace(spec, rho=row.rho)), replace(spec, rho=row.rho))
            np.testing.assert_allclose(
                row.result.k_star.values, solo.k_star.values, atol=1e-6
            )

    def test_empty_grid_rejected(self, betting_model):
        spec = RiskSpec(rho=0.0, n=1)
        dist = build_discrete_compound(betting_model, 1)
        with pytest.raises(Exception):
            sweep_rho(lambda s: DiscreteEvaluator(dist, s), spec, [])
