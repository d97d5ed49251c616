import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ppmvar import gibbs_mean as gm
from ppmvar.errors import DomainError, NumericError, UsageError
from ppmvar.mcmc import MCMCConfig, batch_means_se
from ppmvar.partition import Partition
from ppmvar.rand import make_rng

H = gm.MeanHyperParams()


def state(mu, s2=1.0, lam=None):
    return gm.MeanState(np.asarray(mu, dtype=float), s2, lam)


class TestHyperParams:
    def test_defaults(self):
        assert (H.m, H.tau0_sq, H.nu0, H.lambda0, H.c) == (0.0, 1000.0, 2.01, 0.0101, 1.0)

    @pytest.mark.parametrize("kw", [{"nu0": 1.0}, {"lambda0": 0.0}, {"c": -1.0}, {"tau0_sq": 0.0},
                                    {"hierarchical": True, "eta": 0.0}])
    def test_invalid(self, kw):
        with pytest.raises(DomainError):
            gm.MeanHyperParams(**kw)


class TestStepSigma2:
    def test_zero_residuals(self):
        p = gm.sigma2_full_conditional(state([0, 0, 0]), [0, 0, 0], H)
        assert p.shape == pytest.approx(H.nu0 + 1.5 + 0.5)
        assert p.scale == H.lambda0

    def test_trivial_shape(self):
        y = np.random.default_rng(0).normal(size=7)
        p = gm.sigma2_full_conditional(state(np.full(7, 0.3)), y, H)
        assert p.shape == pytest.approx(H.nu0 + (7 + 1) / 2)

    def test_uses_current_lambda0(self):
        p = gm.sigma2_full_conditional(state([0, 0], lam=2.0), [0, 0], H)
        assert p.scale == 2.0

    def test_moments(self):
        rng = np.random.default_rng(1)
        mu = np.repeat([0.0, 2.0], 25)
        y = mu + rng.normal(size=50)
        st_ = state(mu)
        p = gm.sigma2_full_conditional(st_, y, H)
        r = make_rng(2)
        draws = np.array([gm.step_sigma2(st_, y, H, r) for _ in range(10_000)])
        se = math.sqrt(p.variance / draws.size)
        assert abs(draws.mean() - p.mean) < 4 * se


class TestStepMu:
    def test_two_point_weights(self):
        # normalised by hand from the two unnormalised expressions at z = 1
        values, probs, p_new, _, _ = gm.mean_mixture(1, state([0.0, 1.0]), [0.0, 1.0], H)
        assert values.tolist() == [0.0]
        assert probs[0] == pytest.approx(0.95049347839409395, abs=1e-14)
        assert p_new == pytest.approx(0.049506521605906045, abs=1e-14)

    def test_small_c_pure_copy(self):
        h = gm.MeanHyperParams(c=1e-300, tau0_sq=1e6)
        _, probs, p_new, _, _ = gm.mean_mixture(0, state([0.0, 0.1, 0.2]), [0.05, 0.1, 0.2], h)
        assert p_new < 1e-290
        assert probs.sum() == pytest.approx(1.0)

    def test_exact_match_has_max_exponent(self):
        # y_t equal to mu_j leaves only log(count) in the exponent
        values, probs, _, _, _ = gm.mean_mixture(0, state([9.0, 0.5, 1.5]), [0.5, 0.5, 1.5], H)
        assert probs[values.tolist().index(0.5)] > probs[values.tolist().index(1.5)]

    def test_fresh_moments(self):
        _, _, _, mean, var = gm.mean_mixture(0, state([0.0, 0.0], s2=2.0), [1.0, 0.0], H)
        assert mean == pytest.approx(1000.0 / 1001.0)
        assert var == pytest.approx(2.0 * 1000.0 / 1001.0)

    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=12), st.floats(0.01, 10),
           st.floats(0.01, 100), st.data())
    def test_weights_normalised(self, y, s2, c, data):
        T = len(y)
        mu = data.draw(st.lists(st.sampled_from([-1.0, 0.0, 2.5]), min_size=T, max_size=T))
        t = data.draw(st.integers(0, T - 1))
        h = gm.MeanHyperParams(c=c)
        _, probs, p_new, _, _ = gm.mean_mixture(t, state(mu, s2), y, h)
        assert np.all(probs >= 0) and p_new >= 0
        assert abs(probs.sum() + p_new - 1.0) < 1e-12

    def test_copy_is_bit_exact(self):
        mu = np.array([0.1 + 0.2, 1 / 3, 2.0 ** 0.5, 0.0])
        y = np.array([0.3, 0.33, 1.41, 0.3])
        h = gm.MeanHyperParams(c=1e-3)
        r = make_rng(0)
        sources = {m.hex() for m in mu[:3]}
        hits = 0
        for _ in range(200):
            v = float(gm.step_mu_t(3, state(mu, 0.01), y, h, r))
            hits += v.hex() in sources
        assert hits > 150

    def test_index_range(self):
        with pytest.raises(UsageError):
            gm.step_mu_t(5, state([0, 0]), [0, 0], H, make_rng(0))


class TestResampleClusterMeans:
    def test_flat_prior_singleton(self):
        h = gm.MeanHyperParams(tau0_sq=1e12)
        _, means, _ = gm.cluster_mean_conditionals(state([0.0, 1.0]), [0.7, -0.2], h)
        assert means[0] == pytest.approx(0.7, abs=1e-9)

    def test_copies_formula(self):
        n, v = 5, 0.4
        _, means, _ = gm.cluster_mean_conditionals(state(np.zeros(n)), np.full(n, v), H)
        assert means[0] == pytest.approx(n * v / (n + 1 / H.tau0_sq))

    def test_partition_unchanged(self):
        st_ = state([0, 0, 1, 1, 1])
        out = gm.resample_cluster_means(st_, [0.1, 0.0, 1.0, 1.2, 0.9], H, make_rng(0))
        assert gm.MeanState(out, 1.0).partition == st_.partition

    def test_moments(self):
        y = np.array([0.3, 0.5, 0.4, 0.8])
        st_ = state(np.zeros(4), s2=0.5)
        _, means, variances = gm.cluster_mean_conditionals(st_, y, H)
        r = make_rng(3)
        draws = np.array([gm.resample_cluster_means(st_, y, H, r)[0] for _ in range(10_000)])
        assert abs(draws.mean() - means[0]) < 4 * math.sqrt(variances[0] / draws.size)


class TestStepLambda0:
    def test_limit(self):
        p = gm.lambda0_full_conditional(0.3, gm.MeanHyperParams(hierarchical=True, phi=1e15))
        assert p.scale == pytest.approx(0.3)

    def test_equal(self):
        p = gm.lambda0_full_conditional(0.2, gm.MeanHyperParams(hierarchical=True, phi=0.2))
        assert p.scale == pytest.approx(0.1)

    def test_requires_flag(self):
        with pytest.raises(UsageError):
            gm.step_lambda0(state([0, 0]), H, make_rng(0))

    def test_mean(self):
        h = gm.MeanHyperParams(hierarchical=True, eta=1.0, phi=0.5)
        s2 = 0.25
        r = make_rng(4)
        draws = np.array([gm.step_lambda0(state([0, 0], s2), h, r) for _ in range(100_000)])
        expected = (h.nu0 + h.eta) * s2 * h.phi / (s2 + h.phi)
        assert draws.mean() == pytest.approx(expected, rel=0.01)


class TestRunChain:
    def test_recovers_variance(self, normal_series):
        y = np.random.default_rng(5).normal(0.0, 0.01, 200)
        d = gm.run_chain(y, mcmc=MCMCConfig(1000, 100, 1), fit_scale=100.0)
        lo, hi = np.quantile(d.sigma_sq / 1e4, [0.025, 0.975])
        assert lo <= 1e-4 <= hi
        assert d.cluster_stats().mean_cluster_count < 3

    def test_deterministic(self, normal_series, backend):
        a = gm.run_chain(normal_series, mcmc=MCMCConfig(200, 50, 3), backend=backend)
        b = gm.run_chain(normal_series, mcmc=MCMCConfig(200, 50, 3), backend=backend)
        assert np.array_equal(a.mu, b.mu) and np.array_equal(a.sigma_sq, b.sigma_sq)

    def test_stored_count(self, normal_series):
        d = gm.run_chain(normal_series, mcmc=MCMCConfig(150, 40, 3))
        assert len(d) == 110 and d.mu.shape == (110, normal_series.size)
        assert all(isinstance(p, Partition) for p in d.partitions)
        assert d.sweep(0).partition == d.partitions[0]

    def test_hierarchical(self, normal_series):
        d = gm.run_chain(normal_series, gm.MeanHyperParams(hierarchical=True),
                         MCMCConfig(200, 50, 3), fit_scale=100.0)
        assert d.lambda0.shape == (150,) and np.all(d.lambda0 > 0)

    def test_without_store(self, normal_series):
        d = gm.run_chain(normal_series, mcmc=MCMCConfig(120, 20, 3), store=False)
        with pytest.raises(UsageError):
            d.partitions

    def test_short_series(self):
        with pytest.raises(UsageError):
            gm.run_chain([0.1])

    def test_nonfinite_input(self):
        with pytest.raises(UsageError):
            gm.run_chain([0.1, float("nan"), 0.2])

    def test_overflow_reports_sweep(self):
        with pytest.raises(NumericError, match="sweep 0"):
            gm.run_chain([1e200, -1e200, 3e200, 0.0], mcmc=MCMCConfig(10, 2, 0))

    def test_scaling_overflow(self):
        with pytest.raises(NumericError, match="fit_scale"):
            gm.run_chain([1e200, -1e200, 0.0], mcmc=MCMCConfig(10, 2, 0), fit_scale=1e200)

    def test_constant_series(self):
        d = gm.run_chain(np.full(20, 0.01), mcmc=MCMCConfig(200, 50, 0), fit_scale=100.0)
        assert np.all(np.isfinite(d.sigma_sq))

    def test_monotone_in_c(self, normal_series):
        counts = [gm.run_chain(normal_series, gm.MeanHyperParams(c=c), MCMCConfig(2000, 200, 4),
                               store=False, fit_scale=100.0).cluster_stats().mean_cluster_count
                  for c in (0.1, 1.0, 10.0)]
        assert counts[0] <= counts[1] <= counts[2]


class TestConditionalChain:
    def test_trivial_constant(self, normal_series):
        fit = gm.run_conditional_chain(normal_series, H, Partition.trivial(200), MCMCConfig(300, 50, 1))
        assert np.all(fit.mu == fit.mu[0])

    def test_singletons(self):
        y = np.array([0.5, -1.0, 2.0, 0.0, 1.5])
        fit = gm.run_conditional_chain(y, gm.MeanHyperParams(tau0_sq=1e8), Partition.singletons(5),
                                       MCMCConfig(4000, 200, 1))
        assert np.allclose(fit.mu, y, atol=0.2)

    def test_two_clusters(self):
        rng = np.random.default_rng(8)
        y = np.concatenate([rng.normal(0.0, 1.0, 60), rng.normal(3.0, 1.0, 40)])
        part = Partition.from_clusters([range(60), range(60, 100)], 100)
        fit = gm.run_conditional_chain(y, H, part, MCMCConfig(5000, 500, 2), store=True)
        for d, cl in enumerate(part.clusters):
            n = len(cl)
            exact = (y[list(cl)].sum() + H.m / H.tau0_sq) / (n + 1 / H.tau0_sq)
            se = batch_means_se(fit.value_draws[:, d])
            assert abs(fit.mu[cl[0]] - exact) < 4 * se

    def test_unpacks(self, normal_series):
        mu, s2 = gm.run_conditional_chain(normal_series, H, Partition.trivial(200), MCMCConfig(150, 50, 1))
        assert mu.shape == (200,) and s2 > 0

    def test_length_mismatch(self, normal_series):
        with pytest.raises(UsageError):
            gm.run_conditional_chain(normal_series, H, Partition.trivial(5), MCMCConfig(150, 50, 1))


def normal_inverse_gamma_posterior(y, h):
    T, ybar = y.size, y.mean()
    k = T + 1 / h.tau0_sq
    ss = ((y - ybar) ** 2).sum() + T / (1 + T * h.tau0_sq) * (ybar - h.m) ** 2
    shape, scale = h.nu0 + T / 2, h.lambda0 + ss / 2
    s2_mean = scale / (shape - 1)
    s2_var = scale**2 / ((shape - 1) ** 2 * (shape - 2))
    mu_mean = (T * ybar + h.m / h.tau0_sq) / k
    return mu_mean, s2_mean / k, s2_mean, s2_var


class TestConjugacy:
    def test_trivial_partition_moments(self):
        y = np.random.default_rng(21).normal(0.4, 1.5, 100)
        fit = gm.run_conditional_chain(y, H, Partition.trivial(100), MCMCConfig(20_000, 1000, 5), store=True)
        mu_mean, _, s2_mean, _ = normal_inverse_gamma_posterior(y, H)
        mu_draws = fit.value_draws[:, 0]
        assert abs(mu_draws.mean() - mu_mean) < 4 * batch_means_se(mu_draws)
        assert abs(fit.sigma_sq_draws.mean() - s2_mean) < 4 * batch_means_se(fit.sigma_sq_draws)
