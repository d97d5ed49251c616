import numpy as np
import pytest
from hypothesis import given, strategies as st

from ppmvar.errors import DomainError, UsageError
from ppmvar.gibbs_mean import MeanHyperParams
from ppmvar.mcmc import MCMCConfig
from ppmvar.outliers import (
    ScoreParams,
    candidate_partitions,
    detect_outliers,
    outlier_indices,
    outlier_stability,
    score,
)
from ppmvar.partition import Partition

FAST = dict(mcmc_full=MCMCConfig(3000, 300, 1), mcmc_conditional=MCMCConfig(600, 100, 1))


def planted(seed, T=100, k=3, shift=10.0):
    rng = np.random.default_rng(seed)
    y = rng.normal(0.0, 0.01, T)
    idx = np.sort(rng.choice(T, k, replace=False))
    y[idx] += shift * 0.01
    return y, tuple(int(i) for i in idx)


class TestScoreParams:
    def test_defaults(self):
        p = ScoreParams()
        assert (p.k1, p.k2, p.tail_k) == (0.996, 0.002, 30)

    @pytest.mark.parametrize("k1, k2", [(-0.1, 0.0), (0.6, 0.5)])
    def test_invalid(self, k1, k2):
        with pytest.raises(DomainError):
            ScoreParams(k1, k2)


class TestScore:
    def test_zero(self):
        mu = np.array([0.1, 0.2, 0.3])
        assert score(Partition.trivial(3), mu, 1.0, mu, 1.0, ScoreParams(0.5, 0.5)) == 0.0

    def test_complexity_only(self):
        rho = Partition.singletons(4)
        assert score(rho, np.zeros(4), 3.0, np.ones(4), 1.0, ScoreParams(0.0, 0.0)) == 4.0

    def test_by_hand(self):
        rng = np.random.default_rng(0)
        mu_b, mu_r = rng.normal(size=6), rng.normal(size=6)
        rho = Partition.from_clusters([[0, 1, 2, 3], [4, 5]], 6)
        p = ScoreParams(0.7, 0.2)
        expected = 0.7 / 6 * sum((a - b) ** 2 for a, b in zip(mu_b, mu_r)) + 0.2 * (1.5 - 0.9) ** 2 + 0.1 * 2
        assert score(rho, mu_b, 1.5, mu_r, 0.9, p) == pytest.approx(expected, rel=1e-13)

    def test_length_mismatch(self):
        with pytest.raises(UsageError):
            score(Partition.trivial(3), np.zeros(3), 1.0, np.zeros(4), 1.0, ScoreParams())

    @given(st.permutations([0, 1, 2]))
    def test_label_permutation(self, perm):
        labels = np.array([0, 0, 1, 2, 2, 1])
        a = Partition.from_labels(labels)
        b = Partition.from_labels(np.array(perm)[labels])
        mu_b, mu_r = np.arange(6.0), np.arange(6.0)[::-1]
        assert score(a, mu_b, 1, mu_r, 2, ScoreParams()) == score(b, mu_b, 1, mu_r, 2, ScoreParams())


def threshold_oracle(mu):
    """Every partition reachable from a threshold pair, with the merged tail form."""
    u = sorted(set(mu))
    out = {Partition.trivial(len(mu))}
    for i in range(len(u)):
        for j in range(i, len(u)):
            s1 = [t for t, m in enumerate(mu) if m < u[i]]
            s2 = [t for t, m in enumerate(mu) if u[i] <= m <= u[j]]
            s3 = [t for t, m in enumerate(mu) if m > u[j]]
            out.add(Partition.from_clusters([s1, s2, s3], len(mu)))
            if s1 and s3:
                out.add(Partition.from_clusters([s1 + s3, s2], len(mu)))
    return out


class TestCandidates:
    def test_all_equal(self):
        assert candidate_partitions([0.5] * 6, 3) == [Partition.trivial(6)]

    def test_three_values(self):
        got = set(candidate_partitions([1.0, 2.0, 3.0], 3))
        C = Partition.from_clusters
        expected = {C([[0], [1], [2]], 3), C([[0], [1, 2]], 3), C([[0, 2], [1]], 3),
                    C([[0, 1], [2]], 3), Partition.trivial(3)}
        assert got == expected

    @given(st.lists(st.integers(-4, 4), min_size=1, max_size=9))
    def test_full_search_matches_oracle(self, vals):
        mu = [float(v) for v in vals]
        got = candidate_partitions(mu, len(mu))
        assert set(got) == threshold_oracle(mu)
        assert len(got) == len(set(got))
        assert all(1 <= len(p) <= 3 for p in got)

    def test_tail_restriction(self):
        mu = np.arange(10.0)
        cands = candidate_partitions(mu, 2)
        for p in cands:
            for cl in p.clusters:
                if len(p) > 1 and len(cl) != max(p.sizes):
                    assert len(cl) <= 4

    def test_near_ties_grouped(self):
        mu = [0.0, 1e-14, 5.0]
        assert len(candidate_partitions(mu, 3)) == len(candidate_partitions([0.0, 0.0, 5.0], 3))


class TestDetect:
    def test_outlier_indices_rule(self):
        p = Partition.from_clusters([[0, 1, 2, 3], [4], [5]], 6)
        assert outlier_indices(p) == (4, 5)
        assert outlier_indices(Partition.trivial(4)) == ()

    def test_planted(self):
        y, idx = planted(0)
        res = detect_outliers(y, **FAST)
        assert res.outlier_indices == idx

    @pytest.mark.xfail(strict=True, reason="at T=100 the mean-partition posterior often splits null "
                       "data into two large clusters; 3 of 5 seeds give the trivial partition")
    def test_null_short_series(self):
        trivial = 0
        for seed in range(5):
            y = np.random.default_rng(seed).normal(0.0, 0.01, 100)
            res = detect_outliers(y, mcmc_full=MCMCConfig(10000, 1000, seed),
                                  mcmc_conditional=MCMCConfig(2000, 200, seed), workers=4)
            trivial += res.best_partition.is_trivial and res.outlier_indices == ()
        assert trivial >= 4

    def test_self_consistent(self):
        y, _ = planted(2)
        res = detect_outliers(y, **FAST)
        assert res.score == min(c.score for c in res.candidates)
        assert 1 <= len(res.best_partition) <= 3

    def test_tail_one(self):
        y = np.random.default_rng(3).normal(0.0, 0.01, 60)
        y[17] += 0.2
        res = detect_outliers(y, tail_k=1, **FAST)
        assert res.outlier_indices in ((), (17,))

    def test_parallel_matches_serial(self):
        y, _ = planted(4, T=60)
        a = detect_outliers(y, **FAST)
        b = detect_outliers(y, workers=4, **FAST)
        assert [c.score for c in a.candidates] == [c.score for c in b.candidates]

    def test_stability_grows_with_c(self):
        rng = np.random.default_rng(5)
        y = rng.normal(0.0, 0.01, 100)
        y[[10, 50]] += 0.06
        y[80] += 0.035
        rows = outlier_stability(y, (0.1, 1, 10, 50), MeanHyperParams(), **FAST)
        flagged = [len(r.outlier_indices) for r in rows]
        assert all(b >= a - 1 for a, b in zip(flagged, flagged[1:]))
        assert [r.c for r in rows] == [0.1, 1.0, 10.0, 50.0]
