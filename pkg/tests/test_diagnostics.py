"""Tests des diagnostics — g(m), projection de Hájek, choix de paramètres."""

import math

import numpy as np
import pytest

from blockmom.config import diagnose_config
from blockmom.diagnostics import (
    GRID_FLOOR,
    GRID_POINTS,
    berry_esseen_distance,
    confidence_range,
    g_curve,
    g_of_m,
    hajek_reference,
    hajek_variance,
    parameter_plan,
    run_diagnostics,
)
from blockmom.distributions import make_rng, make_spec, sample_values, standardize
from blockmom.errors import ConfigError
from blockmom.estimators import make_block_plan


class TestGOfM:
    def test_rademacher_closed_form(self):
        spec = make_spec("rademacher")
        points = g_curve(spec, [25, 100, 400], 1000, make_rng(1))
        assert [p.g_m for p in points] == [1.2, 0.6, 0.3]
        assert all(p.g_m_stderr < 1e-12 for p in points)

    def test_gaussian_m100(self, gaussian):
        value, stderr = g_of_m(gaussian, 100, 10**6, make_rng(2))
        # 6·E|Y|³/10, la troncature à √m = 10 est négligeable
        assert value == pytest.approx(0.6 * 2 * math.sqrt(2 / math.pi), abs=0.01)
        assert stderr < 0.01

    def test_nonincreasing_with_shared_draws(self):
        spec = make_spec("student_t", df=3.5)
        points = g_curve(spec, [1, 4, 16, 64, 256, 1024], 5000, make_rng(3))
        values = [p.g_m for p in points]
        assert values == sorted(values, reverse=True)

    def test_moment_upper_bound(self):
        spec = make_spec("student_t", df=4)
        R, m, eps = 20_000, 64, 1.0
        g = g_curve(spec, [m], R, make_rng(4))[0].g_m
        # Mêmes tirages que g_curve : la borne vaut point par point
        y = standardize(spec, sample_values(spec, make_rng(4), R))
        moment = float(np.mean(np.abs(y) ** (2 + eps)))
        assert g <= 6 * moment * m ** (-eps / 2) + 1e-12

    def test_requires_draws(self, gaussian):
        with pytest.raises(ConfigError):
            g_curve(gaussian, [10], 50, make_rng(0))
        with pytest.raises(ConfigError):
            g_curve(gaussian, [0], 1000, make_rng(0))


class TestBerryEsseen:
    def test_gaussian_sum_is_normal(self, gaussian):
        distance = berry_esseen_distance(gaussian, 5, 20_000, make_rng(5))
        assert distance < 0.02

    def test_rademacher_single_draw(self):
        spec = make_spec("rademacher")
        distance = berry_esseen_distance(spec, 1, 5000, make_rng(6))
        assert distance == pytest.approx(0.5 - (1 - 0.8413447), abs=0.02)
        assert distance <= g_of_m(spec, 1, 1000, make_rng(6))[0]


class TestHajekReference:
    def test_single_block_group(self):
        p = 0.5 * math.erfc(math.sqrt(0.5 / 64) / math.sqrt(2))
        assert hajek_reference(1, 64, 0.5) == pytest.approx(4 * p * (1 - p))

    def test_limit_two_over_pi(self):
        assert hajek_reference(400, 10**6, 1e-3) == pytest.approx(
            2 / math.pi, rel=0.01,
        )

    def test_decreases_with_t(self):
        assert hajek_reference(16, 64, 8.0) < hajek_reference(16, 64, 0.5)


class TestHajekVariance:
    def test_gaussian_matches_reference(self, gaussian):
        plan = make_block_plan(4 * 64 * 8, 64, 4)
        t = 2.0
        estimate, stderr = hajek_variance(gaussian, plan, t, 2000, 500, seed=9)
        reference = hajek_reference(4, 64, t)
        assert estimate >= 0.0
        assert abs(estimate - reference) < max(4 * stderr, 0.1 * reference)

    def test_thread_count_invariant(self, gaussian):
        plan = make_block_plan(3 * 8 * 4, 8, 3)
        a = hajek_variance(gaussian, plan, 1.0, 200, 100, seed=1, threads=1)
        b = hajek_variance(gaussian, plan, 1.0, 200, 100, seed=1, threads=4)
        assert a == b

    def test_translation_invariant(self):
        plan = make_block_plan(3 * 8 * 4, 8, 3)
        base = hajek_variance(make_spec("gaussian"), plan, 1.0, 300, 200, seed=2)
        moved = hajek_variance(
            make_spec("gaussian", mu=5.0), plan, 1.0, 300, 200, seed=2,
        )
        assert moved[0] == pytest.approx(base[0], abs=2 * base[1] + 1e-9)

    def test_single_block_group(self, gaussian):
        plan = make_block_plan(64 * 16, 64, 1)
        estimate, _ = hajek_variance(gaussian, plan, 0.5, 4000, 100, seed=3)
        assert estimate == pytest.approx(hajek_reference(1, 64, 0.5), abs=0.05)

    def test_invalid_arguments(self, gaussian):
        plan = make_block_plan(128, 8, 2)
        with pytest.raises(ConfigError):
            hajek_variance(gaussian, plan, 0.0, 200, 200, seed=1)
        with pytest.raises(ConfigError):
            hajek_variance(gaussian, plan, 1.0, 50, 200, seed=1)


class TestParameterPlan:
    def test_reference_point(self):
        plan = parameter_plan(65536, 64, 1.0)
        assert (plan.m, plan.l, plan.n) == (1024, 8, 512)
        assert plan.L == pytest.approx(64 * math.log(1024) / 1024)
        assert plan.M == pytest.approx(512 / (64 * math.log(8)))
        assert len(plan.t_grid) == GRID_POINTS
        assert plan.t_grid[0] == pytest.approx(GRID_FLOOR)
        assert plan.t_grid[-1] == pytest.approx(plan.M)

    def test_prime_m(self):
        plan = parameter_plan(26, 2, 1.0)
        assert plan.m == 13
        assert plan.l == 1

    def test_large_epsilon_uses_floor(self):
        plan = parameter_plan(65536, 64, 50.0)
        assert plan.L == pytest.approx(0.0, abs=1e-12)
        assert plan.t_grid[0] == GRID_FLOOR

    def test_empty_grid(self):
        plan = parameter_plan(100, 1, 0.1)
        assert plan.L > plan.M
        assert plan.grid_empty

    @pytest.mark.parametrize("N,k", [(10**5, 10), (2**16, 64), (10**6, 100)])
    def test_no_growth_flag(self, N, k):
        assert not parameter_plan(N, k, 0.5).growth_flag

    def test_block_plan_consistent(self):
        plan = parameter_plan(65536, 64, 1.0)
        block = plan.block_plan()
        assert (block.n, block.m) == (plan.n, plan.m)

    def test_invalid(self):
        with pytest.raises(ConfigError):
            parameter_plan(10, 20, 1.0)
        with pytest.raises(ConfigError):
            parameter_plan(100, 2, 0.0)

    def test_confidence_range(self):
        lower, upper = confidence_range(512, 8, 1024, 1.0)
        assert lower == pytest.approx(0.433, abs=1e-3)
        assert upper == pytest.approx(3.847, abs=1e-3)


class TestRunDiagnostics:
    def _raw(self, **diagnose):
        section = {"m_grid": [25, 100], "R": 1000, "seed": 5, **diagnose}
        return {"distribution": {"family": "rademacher"}, "diagnose": section}

    def test_g_only(self):
        report = run_diagnostics(diagnose_config(self._raw()))
        assert [p.g_m for p in report.g_points] == [1.2, 0.6]
        assert report.hajek is None

    def test_with_kolmogorov_and_hajek(self):
        raw = self._raw(
            ks_replicates=500, l=2, b=4, k=16, R_outer=200, R_inner=100,
        )
        config = diagnose_config(raw)
        report = run_diagnostics(config)
        assert all(p.kolmogorov_distance is not None for p in report.g_points)
        h = report.hajek
        assert (h.l, h.b, h.k) == (2, 4, 16)
        assert h.t_used == pytest.approx(math.sqrt(h.L * h.M))
        assert h.hajek_var >= 0.0

    def test_streams_independent(self):
        """Activer Kolmogorov ne change pas les valeurs de g."""
        spec = {"family": "gaussian"}
        base = {"m_grid": [4, 16], "R": 2000, "seed": 8}
        a = run_diagnostics(diagnose_config(
            {"distribution": spec, "diagnose": base},
        ))
        b = run_diagnostics(diagnose_config(
            {"distribution": spec, "diagnose": {**base, "ks_replicates": 200}},
        ))
        assert [p.g_m for p in a.g_points] == [p.g_m for p in b.g_points]
