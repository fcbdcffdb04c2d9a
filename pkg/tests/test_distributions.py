"""Tests des lois synthétiques."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from blockmom.distributions import (
    draw,
    make_rng,
    make_spec,
    sample_values,
    seed_sequence,
    standardize,
)
from blockmom.errors import ConfigError


class TestMakeSpec:
    def test_gaussian_defaults(self):
        spec = make_spec("gaussian")
        assert (spec.mu, spec.sigma) == (0.0, 1.0)
        assert spec.all_moments

    def test_student_t_moments(self):
        spec = make_spec("student_t", df=4)
        assert spec.sigma == pytest.approx(math.sqrt(2))
        assert spec.epsilon_max == 2.0

    def test_student_t_standardized(self):
        spec = make_spec("student_t", standardize=True, df=5)
        assert spec.sigma == pytest.approx(1.0)

    def test_pareto_moments_match_scipy(self):
        spec = make_spec("pareto", alpha=3.0, scale=2.0)
        law = stats.pareto(3.0, scale=2.0)
        assert spec.mu == pytest.approx(law.mean())
        assert spec.sigma == pytest.approx(law.std())
        assert spec.epsilon_max == pytest.approx(1.0)

    def test_lognormal_moments_match_scipy(self):
        spec = make_spec("lognormal", meanlog=0.5, sdlog=0.8)
        law = stats.lognorm(0.8, scale=math.exp(0.5))
        assert spec.mu == pytest.approx(law.mean())
        assert spec.sigma == pytest.approx(law.std())

    def test_rademacher(self):
        spec = make_spec("rademacher")
        assert (spec.mu, spec.sigma) == (0.0, 1.0)

    @pytest.mark.parametrize("family,params", [
        ("student_t", {"df": 2.0}),
        ("pareto", {"alpha": 1.5}),
        ("gaussian", {"sigma": 0.0}),
        ("lognormal", {"sdlog": -1.0}),
    ])
    def test_infinite_variance_or_invalid(self, family, params):
        with pytest.raises(ConfigError):
            make_spec(family, **params)

    def test_unknown_family(self):
        with pytest.raises(ConfigError, match="unknown distribution family"):
            make_spec("cauchy")

    def test_unknown_parameter(self):
        with pytest.raises(ConfigError, match="unknown parameters"):
            make_spec("gaussian", df=3)

    def test_to_dict_round_trip(self):
        spec = make_spec("student_t", standardize=True, df=5)
        params = spec.to_dict()
        family = params.pop("family")
        assert make_spec(family, **params) == spec


class TestDraw:
    def test_deterministic(self, gaussian):
        a = draw(gaussian, make_rng(1), 100)
        b = draw(gaussian, make_rng(1), 100)
        np.testing.assert_array_equal(a.values, b.values)

    def test_gaussian_mean(self, gaussian):
        batch = draw(gaussian, make_rng(10), 10**6)
        assert abs(float(np.mean(batch.values))) < 4 / math.sqrt(10**6)

    def test_rademacher_support(self):
        batch = draw(make_spec("rademacher"), make_rng(2), 10_000)
        assert set(np.unique(batch.values)) == {-1.0, 1.0}

    def test_standardized_student_t_variance(self):
        spec = make_spec("student_t", standardize=True, df=4)
        batch = draw(spec, make_rng(3), 10**6)
        assert float(np.var(batch.values)) == pytest.approx(1.0, rel=0.05)

    def test_pareto_lower_bound(self):
        spec = make_spec("pareto", alpha=2.5, scale=1.5)
        batch = draw(spec, make_rng(4), 100_000)
        assert batch.values.min() >= 1.5

    def test_pareto_mean(self):
        spec = make_spec("pareto", alpha=4.0)
        values = draw(spec, make_rng(6), 10**6).values
        stderr = spec.sigma / math.sqrt(values.size)
        assert abs(np.mean(values) - spec.mu) < 5 * stderr

    def test_student_t_third_moment(self):
        spec = make_spec("student_t", df=5)
        y = standardize(spec, draw(spec, make_rng(8), 10**6).values)
        scale = math.sqrt(3 / 5)
        expected, _ = integrate.quad(
            lambda x: abs(x) ** 3 * stats.t.pdf(x / scale, 5) / scale,
            -np.inf, np.inf,
        )
        assert float(np.mean(np.abs(y) ** 3)) == pytest.approx(expected, rel=0.1)

    def test_shape(self, gaussian):
        assert sample_values(gaussian, make_rng(0), (3, 4)).shape == (3, 4)

    def test_count_must_be_positive(self, gaussian):
        with pytest.raises(ConfigError):
            draw(gaussian, make_rng(0), 0)


class TestSeedSequence:
    def test_streams_differ(self, gaussian):
        a = draw(gaussian, make_rng(seed_sequence(5, 0)), 10).values
        b = draw(gaussian, make_rng(seed_sequence(5, 1)), 10).values
        assert not np.array_equal(a, b)

    def test_stable(self):
        a = seed_sequence(5, 3).generate_state(4)
        b = np.random.SeedSequence(5, spawn_key=(3,)).generate_state(4)
        np.testing.assert_array_equal(a, b)


class TestStandardize:
    def test_scalar(self):
        spec = make_spec("gaussian", mu=2.0, sigma=2.0)
        assert standardize(spec, 4.0) == 1.0
        assert standardize(spec, 2.0) == 0.0

    def test_identity(self, gaussian):
        x = np.array([-1.5, 0.0, 3.0])
        np.testing.assert_array_equal(standardize(gaussian, x), x)
