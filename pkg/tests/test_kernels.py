import numpy as np
import pytest

from ppmvar import kernels
from ppmvar.gibbs_variance import VarHyperParams
from ppmvar.rand import make_rng

needs_cython = pytest.mark.skipif("cython" not in kernels.available_backends(),
                                  reason="compiled kernels not built")

Y = np.random.default_rng(11).normal(0.0, 1.0, 60)
Y[[5, 40]] += 6.0
LOG_Q0 = VarHyperParams(0.0, 2.01, 0.0101, 1.0).log_fresh_const()


def mean_args(hier=False):
    return (Y, 0.0, 1000.0, 2.01, 0.0101, 1.0, hier, 1.0, 0.0101, 300, 50)


def var_args():
    return (Y, 0.0, 2.01, 0.0101, 1.0, LOG_Q0, 300, 50)


def cond_mean_args():
    labels = (np.arange(Y.size) % 3).astype(np.intp)
    return (Y, labels, 3, 0.0, 1000.0, 2.01, 0.0101, False, 1.0, 0.0101, 300, 50)


def cond_var_args(fix):
    labels = (np.arange(Y.size) >= 30).astype(np.intp)
    return (Y, labels, 2, 0.0, 2.01, 0.0101, fix, 0.1, 300, 50)


def run(backend, name, args, extra=()):
    fn = getattr(kernels.get(backend), name)
    return fn(*args, make_rng(9), float(Y.mean()), float(Y.var(ddof=1)), *extra)


def assert_same(a, b):
    assert a.keys() == b.keys()
    for k in a:
        if isinstance(a[k], np.ndarray):
            assert np.array_equal(a[k], b[k]), k
        elif a[k] is not None:
            assert a[k] == b[k], k


@needs_cython
class TestBackendParity:
    @pytest.mark.parametrize("hier", [False, True])
    def test_mean_chain(self, hier):
        extra = (True, True)
        assert_same(run("python", "mean_chain", mean_args(hier), extra),
                    run("cython", "mean_chain", mean_args(hier), extra))

    def test_variance_chain(self):
        extra = (True, True)
        assert_same(run("python", "variance_chain", var_args(), extra),
                    run("cython", "variance_chain", var_args(), extra))

    def test_cond_mean_chain(self):
        assert_same(run("python", "cond_mean_chain", cond_mean_args(), (True,)),
                    run("cython", "cond_mean_chain", cond_mean_args(), (True,)))

    @pytest.mark.parametrize("fix", [False, True])
    def test_cond_variance_chain(self, fix):
        assert_same(run("python", "cond_variance_chain", cond_var_args(fix), (True,)),
                    run("cython", "cond_variance_chain", cond_var_args(fix), (True,)))


class TestKernelInvariants:
    def test_mean_audit(self, backend):
        res = run(backend, "mean_chain", mean_args(), (True, True))
        aud = res["audit"]
        assert aud["updates"] == 300 * Y.size
        assert aud["max_sum_error"] < 1e-12
        assert aud["min_weight"] >= 0.0
        assert aud["copies"] > 0 and aud["copy_mismatches"] == 0

    def test_variance_audit(self, backend):
        res = run(backend, "variance_chain", var_args(), (True, True))
        aud = res["audit"]
        assert aud["max_sum_error"] < 1e-12
        assert aud["copies"] > 0 and aud["copy_mismatches"] == 0

    @pytest.mark.parametrize("name, args", [("mean_chain", mean_args()), ("variance_chain", var_args())])
    def test_distinct_values_match_cluster_count(self, backend, name, args):
        res = run(backend, name, args, (True, False))
        distinct = np.array([np.unique(row).size for row in res["rows"]])
        assert np.array_equal(distinct, res["n_clusters"])
        largest = np.array([np.unique(row, return_counts=True)[1].max() for row in res["rows"]])
        assert np.array_equal(largest, res["largest"])

    def test_param_sum(self, backend):
        res = run(backend, "mean_chain", mean_args(), (True, False))
        assert np.allclose(res["param_sum"], res["rows"].sum(axis=0), rtol=1e-12, atol=1e-12)

    def test_variance_positive(self, backend):
        res = run(backend, "variance_chain", var_args(), (True, False))
        assert np.all(res["rows"] > 0)

    def test_cond_chain_keeps_partition(self, backend):
        res = run(backend, "cond_mean_chain", cond_mean_args(), (True,))
        assert res["rows"].shape == (250, 3)
        assert np.unique(res["rows"][0]).size == 3

    def test_fixed_mu(self, backend):
        res = run(backend, "cond_variance_chain", cond_var_args(True), (False,))
        assert np.all(res["mu"] == 0.1)

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            kernels.get("fortran")
