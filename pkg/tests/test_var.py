import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ppmvar import gibbs_mean as gm, gibbs_variance as gv
from ppmvar.errors import DomainError, UsageError
from ppmvar.mcmc import MCMCConfig
from ppmvar.rand import make_rng
from ppmvar.var import (
    aggregate_returns,
    gaussian_var,
    ml_normal_var,
    mrc,
    var_draw_mean_model,
    var_draw_variance_model,
    var_estimate,
)

Z_01 = 2.3263478740408411


class TestGaussianVar:
    def test_zero(self):
        assert gaussian_var(0.0, 0.0, 0.01) == 0.0

    def test_value(self):
        assert gaussian_var(0.001, 0.02, 0.01) == pytest.approx(-0.001 + 0.02 * Z_01, abs=1e-12)

    def test_median(self):
        assert gaussian_var(0.003, 0.5, 0.5) == -0.003

    def test_domain(self):
        with pytest.raises(DomainError):
            gaussian_var(0.0, 0.1, 0.6)
        with pytest.raises(DomainError):
            gaussian_var(0.0, -0.1, 0.05)


class TestPerDrawVar:
    def test_mean_model_weights(self):
        sweep = gm.MeanSweep(np.array([0.0] * 9 + [0.5]), 0.0)
        assert var_draw_mean_model(sweep, 0.05) == pytest.approx(-0.05)

    def test_variance_model_sd_average(self):
        sweep = gv.VarSweep(0.0, np.array([1.0, 4.0]))
        z = gaussian_var(0.0, 1.0, 0.05)
        assert var_draw_variance_model(sweep, 0.05) == pytest.approx(1.5 * z)

    @given(st.lists(st.sampled_from([-0.02, 0.0, 0.013, 0.05]), min_size=1, max_size=30),
           st.floats(1e-6, 1.0))
    def test_mean_model_bruteforce(self, mu, s2):
        mu = np.array(mu)
        v = var_draw_mean_model(gm.MeanSweep(mu, s2), 0.01)
        assert v == pytest.approx(-mu.sum() / mu.size + math.sqrt(s2) * Z_01, abs=1e-12)

    @given(st.lists(st.sampled_from([1e-4, 4e-4, 0.01]), min_size=1, max_size=30), st.floats(-0.1, 0.1))
    def test_variance_model_bruteforce(self, s2, mu):
        s2 = np.array(s2)
        v = var_draw_variance_model(gv.VarSweep(mu, s2), 0.01)
        assert v == pytest.approx(-mu + np.sqrt(s2).mean() * Z_01, abs=1e-12)

    @given(st.integers(1, 50), st.floats(-1, 1), st.floats(1e-8, 10), st.sampled_from([0.01, 0.05, 0.3]))
    def test_trivial_reduction_exact(self, T, mu, s2, alpha):
        a = var_draw_mean_model(gm.MeanSweep(np.full(T, mu), s2), alpha)
        b = var_draw_variance_model(gv.VarSweep(mu, np.full(T, s2)), alpha)
        assert a == gaussian_var(mu, math.sqrt(s2), alpha)
        assert b == gaussian_var(mu, math.sqrt(s2), alpha)


class TestVarEstimate:
    def test_constant(self):
        r = var_estimate(np.full(200, 0.03), 0.01)
        assert r.point == pytest.approx(0.03) and r.interval_lo == r.interval_hi

    def test_mean(self):
        assert var_estimate(np.arange(1, 101), 0.01).point == 50.5

    def test_too_few(self):
        with pytest.raises(UsageError):
            var_estimate(np.ones(99), 0.01)

    def test_interval_quantiles(self):
        x = np.random.default_rng(0).normal(size=5000)
        r = var_estimate(x, 0.01)
        assert [r.interval_lo, r.interval_hi] == pytest.approx(np.quantile(x, [0.16, 0.84]), abs=1e-12)

    def test_chain_recovers_truth(self):
        y = np.random.default_rng(2).normal(0.0, 0.01, 300)
        d = gm.run_chain(y, mcmc=MCMCConfig(3000, 300, 1), store=False, fit_scale=100.0)
        r = var_estimate(d, 0.01)
        assert r.model == "mu-ppm" and r.cluster_stats is not None
        assert r.interval_lo <= 0.01 * Z_01 <= r.interval_hi

    def test_alpha_monotone(self, normal_series):
        d = gv.run_chain(normal_series, mcmc=MCMCConfig(600, 100, 1), store=False, fit_scale=100.0)
        assert var_estimate(d, 0.01).point >= var_estimate(d, 0.05).point

    def test_units_follow_fit_scale(self, normal_series):
        d = gm.run_chain(normal_series, mcmc=MCMCConfig(600, 100, 1), store=False, fit_scale=100.0)
        raw = -d.location + np.sqrt(d.sigma_sq) * Z_01
        assert var_estimate(d, 0.01).point == pytest.approx(raw.mean() / 100, rel=1e-12)


class TestMLNormal:
    def test_constant(self):
        r = ml_normal_var(np.full(50, 0.002), 0.01, 200, make_rng(0))
        assert r.point == pytest.approx(-0.002)
        assert r.interval_hi - r.interval_lo == pytest.approx(0.0, abs=1e-15)

    def test_two_points(self):
        assert ml_normal_var([-1.0, 1.0], 0.01, 50).point == pytest.approx(Z_01)

    def test_truth(self):
        y = np.random.default_rng(4).normal(0.0, 0.02, 1000)
        r = ml_normal_var(y, 0.01, 1000, make_rng(1))
        assert r.interval_lo <= 0.02 * Z_01 <= r.interval_hi

    @pytest.mark.parametrize("k", [2.0, 0.25, 8.0])
    def test_scaling(self, normal_series, k):
        a = ml_normal_var(normal_series, 0.05, 10).point
        b = ml_normal_var(k * normal_series, 0.05, 10).point
        assert b == k * a

    @pytest.mark.parametrize("k", [3.0, 0.7])
    def test_scaling_general(self, normal_series, k):
        a = ml_normal_var(normal_series, 0.05, 10).point
        assert ml_normal_var(k * normal_series, 0.05, 10).point == pytest.approx(k * a, rel=1e-13)

    def test_short(self):
        with pytest.raises(UsageError):
            ml_normal_var([0.1], 0.05)


class TestAggregate:
    def test_identity(self):
        y = np.array([0.1, -0.2, 0.3])
        assert np.array_equal(aggregate_returns(y, 1), y)

    def test_blocks(self):
        assert aggregate_returns([1, 2, 3, 4], 2).tolist() == [3, 7]

    def test_alignment(self):
        y = np.arange(25.0)
        out = aggregate_returns(y, 10)
        assert out.tolist() == [sum(range(5, 15)), sum(range(15, 25))]

    def test_domain(self):
        with pytest.raises(DomainError):
            aggregate_returns([1, 2], 0)
        with pytest.raises(UsageError):
            aggregate_returns([1, 2], 3)


class TestMRC:
    def test_constant(self):
        assert mrc(np.full(61, 2.0), 3) == pytest.approx(6.0)

    def test_zero_lags(self):
        assert mrc(np.r_[np.zeros(60), 5.0], 4) == 5.0

    def test_bruteforce(self):
        h = np.random.default_rng(0).uniform(0, 10, 61)
        lag_avg = sum(h[60 - i] for i in range(1, 61)) / 60
        assert mrc(h, 3.5) == pytest.approx(max(3.5 * lag_avg, h[60]))

    def test_length(self):
        with pytest.raises(UsageError):
            mrc(np.ones(60), 3)
        with pytest.raises(DomainError):
            mrc(np.ones(61), 5)
