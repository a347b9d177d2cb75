"""Unit tests for the noise distributions and tail diagnostics.

Expected values come from independent routes: closed-form order-statistic
formulas, quadrature, and hand arithmetic on the survival functions.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from noisymatch.errors import (
    ConfigError,
    DegenerateVarianceError,
    InsufficientTailMassError,
)
from noisymatch.noise import (
    Exponential,
    Gaussian,
    Gumbel,
    Pareto,
    TailClass,
    Uniform,
    beta_from_stats,
    classify_tail,
    estimate_beta,
    long_tail_ratio,
    max_order_stats,
    noise_from_dict,
    tail_report,
)

EULER_GAMMA = 0.5772156649015329

ALL_SPECS = [
    Uniform(0.0, 1.0),
    Gaussian(0.0, 1.0),
    Exponential(1.0),
    Gumbel(0.0, 1.0),
    Pareto(2.0, 0.3),
]


def uniform_var_max(n):
    # Var of the max of n iid U(0,1): n / ((n+1)^2 (n+2))
    return n / ((n + 1) ** 2 * (n + 2))


class TestSampling:
    def test_zero_draws(self, rng):
        assert len(Uniform(0, 1).sample(rng, 0)) == 0

    def test_law_of_large_numbers_uniform(self, rng):
        draws = Uniform(0, 1).sample(rng, 100_000)
        assert abs(draws.mean() - 0.5) < 0.01

    def test_pareto_support_and_cdf(self, rng):
        spec = Pareto(2.0, 0.3)
        draws = spec.sample(rng, 100_000)
        assert draws.min() >= 0.3
        # empirical CDF against the closed form at a few abscissae
        for x in (0.4, 0.6, 1.0, 3.0):
            expected = 1.0 - (0.3 / x) ** 2
            assert abs((draws <= x).mean() - expected) < 0.01

    def test_identical_seeds_bitwise_identical(self):
        for spec in ALL_SPECS:
            a = spec.sample(np.random.default_rng(123), 1000)
            b = spec.sample(np.random.default_rng(123), 1000)
            assert np.array_equal(a, b)

    def test_negative_count_rejected(self, rng):
        with pytest.raises(ConfigError, match="n"):
            Uniform(0, 1).sample(rng, -1)

    @pytest.mark.parametrize(
        "bad, field",
        [
            (lambda: Uniform(1.0, 1.0), "hi"),
            (lambda: Uniform(2.0, 1.0), "hi"),
            (lambda: Gaussian(0.0, 0.0), "sd"),
            (lambda: Exponential(-1.0), "rate"),
            (lambda: Gumbel(0.0, 0.0), "scale"),
            (lambda: Pareto(0.0, 1.0), "shape"),
            (lambda: Pareto(2.0, 0.0), "scale"),
        ],
    )
    def test_invalid_parameters_name_the_field(self, bad, field):
        with pytest.raises(ConfigError, match=field):
            bad()

    def test_serde_round_trip(self):
        for spec in ALL_SPECS:
            assert noise_from_dict(spec.to_dict()) == spec
        with pytest.raises(ConfigError, match="kind"):
            noise_from_dict({"kind": "cauchy"})


class TestClosedForms:
    @given(st.sampled_from(range(len(ALL_SPECS))), st.floats(0.01, 0.99))
    @settings(max_examples=200, deadline=None)
    def test_survival_inverts_quantile(self, spec_index, q):
        spec = ALL_SPECS[spec_index]
        x = spec.quantile(q)
        assert spec.survival(x) == pytest.approx(1.0 - q, abs=1e-9)

    def test_samples_stay_in_support(self, rng):
        for spec in ALL_SPECS:
            lo, hi = spec.support()
            draws = spec.sample(rng, 10_000)
            assert draws.min() >= lo and draws.max() <= hi


class TestMaxOrderStats:
    def test_uniform_n1_variance(self, rng):
        (stat,) = max_order_stats(Uniform(0, 1), [1], 100_000, rng)
        assert stat.var_max == pytest.approx(1 / 12, abs=0.003)

    def test_uniform_n10_against_quadrature(self, rng):
        # independent oracle: quadrature for E[max] and E[max^2] of 10 uniforms
        n = 10
        m1 = integrate.quad(lambda x: x * n * x ** (n - 1), 0, 1)[0]
        m2 = integrate.quad(lambda x: x * x * n * x ** (n - 1), 0, 1)[0]
        var_oracle = m2 - m1 * m1
        assert var_oracle == pytest.approx(uniform_var_max(n), rel=1e-9)
        (stat,) = max_order_stats(Uniform(0, 1), [n], 100_000, rng)
        assert stat.var_max == pytest.approx(var_oracle, rel=0.20)
        assert stat.mean_max == pytest.approx(m1, rel=0.01)

    def test_uniform_variance_formula_across_grid(self, rng):
        stats_ = max_order_stats(Uniform(0, 1), [1, 2, 5, 10, 30], 100_000, rng)
        for s in stats_:
            assert s.var_max == pytest.approx(uniform_var_max(s.n), rel=0.25)

    def test_gumbel_mean_grows_like_log_n(self, rng):
        # max-stability: the max of n standard Gumbels is Gumbel(log n, 1)
        stats_ = max_order_stats(Gumbel(0, 1), [10, 100, 1000], 20_000, rng)
        for s in stats_:
            assert s.mean_max == pytest.approx(EULER_GAMMA + math.log(s.n), rel=0.10)

    def test_replication_floor(self, rng):
        with pytest.raises(ConfigError, match="replications"):
            max_order_stats(Uniform(0, 1), [10], 1, rng)

    def test_sub_log_max_growth_uniform_and_gaussian(self, rng):
        # doubling n adds less and less to E[max]; the increments shrink
        # toward zero along a geometric grid (within two standard errors)
        for spec in (Uniform(0, 1), Gaussian(0, 1)):
            reps = 40_000
            grid = [16, 32, 64, 128, 256, 512]
            stats_ = {s.n: s for s in max_order_stats(spec, grid, reps, rng)}
            diffs, errs = [], []
            for n in (16, 64, 256):
                a, b = stats_[n], stats_[2 * n]
                diffs.append(b.mean_max - a.mean_max)
                errs.append(math.sqrt((a.var_max + b.var_max) / reps))
            for (d1, d2), (e1, e2) in zip(zip(diffs, diffs[1:]), zip(errs, errs[1:])):
                assert d2 <= d1 + 2 * (e1 + e2)
            assert diffs[-1] < diffs[0]


class TestEstimateBeta:
    GRID = [10, 100, 1000, 10_000]

    def test_uniform_slope_near_two(self, rng):
        beta, stderr = estimate_beta(Uniform(0, 1), self.GRID, 2000, rng)
        assert 1.6 <= beta <= 2.4
        assert stderr < 0.2

    def test_pareto_variance_nondecreasing(self, rng):
        beta, _ = estimate_beta(Pareto(2.0, 0.3), self.GRID, 4000, rng)
        assert beta <= 0

    def test_grid_preconditions(self, rng):
        with pytest.raises(ConfigError, match="distinct"):
            estimate_beta(Uniform(0, 1), [10, 10, 10], 100, rng)
        with pytest.raises(ConfigError, match="decades"):
            estimate_beta(Uniform(0, 1), [10, 20, 40], 100, rng)

    def test_degenerate_variance_detected(self, rng):
        class PointMass:
            def sample(self, rng_, n):
                return np.zeros(n)

        with pytest.raises(DegenerateVarianceError):
            estimate_beta(PointMass(), self.GRID, 100, rng)

    def test_beta_from_exact_uniform_variances(self):
        # feed the closed-form variances directly: slope approaches 2
        from noisymatch.noise import MaxStat

        stats_ = [MaxStat(n, 0.0, uniform_var_max(n)) for n in self.GRID]
        beta, stderr = beta_from_stats(stats_)
        assert beta == pytest.approx(1.95, abs=0.02)


class TestLongTailRatio:
    def test_pareto_closed_form(self):
        est = long_tail_ratio(Pareto(2.0, 1.0), x=10.0, d=1.0)
        assert est.ratio == pytest.approx((10 / 11) ** 2, abs=1e-12)
        assert est.stderr == 0.0

    def test_exponential_memorylessness(self):
        for x in (0.5, 2.0, 7.0):
            est = long_tail_ratio(Exponential(1.0), x=x, d=1.0)
            assert est.ratio == pytest.approx(math.exp(-1.0), abs=1e-12)

    def test_exponential_rate_scaling(self):
        est = long_tail_ratio(Exponential(2.5), x=1.0, d=0.4)
        assert est.ratio == pytest.approx(math.exp(-2.5 * 0.4), abs=1e-12)

    def test_uniform_bounded_support(self):
        est = long_tail_ratio(Uniform(0, 1), x=0.95, d=0.1)
        assert est.ratio == 0.0

    @pytest.mark.parametrize("lo, hi", [(0.0, 1.0), (-2.0, 3.0)])
    def test_zero_beyond_any_bounded_support(self, lo, hi):
        spec = Uniform(lo, hi)
        for x in (hi - 0.2, hi - 0.05):
            assert long_tail_ratio(spec, x=x, d=(hi - x) * 1.5).ratio == 0.0

    def test_no_tail_mass_raises(self):
        with pytest.raises(InsufficientTailMassError):
            long_tail_ratio(Uniform(0, 1), x=1.5, d=0.1)

    def test_empirical_matches_closed_form(self, rng):
        spec = Exponential(1.0)
        for x in (0.5, 1.0, 2.0):
            est = long_tail_ratio(spec, x=x, d=1.0, method="empirical", rng=rng)
            assert abs(est.ratio - math.exp(-1.0)) < 3 * est.stderr

    def test_empirical_zero_denominator(self, rng):
        with pytest.raises(InsufficientTailMassError):
            long_tail_ratio(Uniform(0, 1), x=2.0, d=0.1, method="empirical", rng=rng)

    def test_bad_gap_rejected(self):
        with pytest.raises(ConfigError, match="d"):
            long_tail_ratio(Uniform(0, 1), x=0.5, d=0.0)


class TestClassification:
    def test_bundled_example_families(self, rng):
        expected = {
            "uniform": (Uniform(0, 1), TailClass.MAX_CONCENTRATING),
            "pareto": (Pareto(2.0, 0.3), TailClass.LONG_TAILED),
            "exponential": (Exponential(1.0), TailClass.INTERMEDIATE),
            "gumbel": (Gumbel(0.0, 1.0), TailClass.INTERMEDIATE),
        }
        for name, (spec, want) in expected.items():
            report = tail_report(spec, rng, replications=800)
            assert report.classification is want, name

    def test_report_invariants(self, rng):
        report = tail_report(Pareto(2.0, 0.3), rng, replications=400)
        assert all(0.0 <= r <= 1.0 for _, r in report.hazard_ratios)
        assert all(s.var_max >= 0 for s in report.max_mean_curve)
        assert "heuristic" in report.note

    def test_classify_is_pure(self):
        ratios = [(1.0, 0.96), (2.0, 0.97), (3.0, 0.99)]
        assert classify_tail(0.0, ratios) is TailClass.LONG_TAILED
        assert classify_tail(1.0, [(1.0, 0.5), (2.0, 0.4)]) is TailClass.MAX_CONCENTRATING
        assert classify_tail(0.1, [(1.0, 0.5), (2.0, 0.4)]) is TailClass.INTERMEDIATE
