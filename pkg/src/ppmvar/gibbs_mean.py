"""Gibbs sampler for the Normal model with a product partition on the means.

Model::

    y_t | mu_t, sigma^2         ~ N(mu_t, sigma^2)         independently
    mu*_d | rho, sigma^2        ~ N(m, tau0^2 sigma^2)     one value per cluster
    rho                         ~ product distribution, C(S) = c (|S|-1)!
    sigma^2                     ~ IG(nu0, lambda0)
    lambda0                     ~ G(eta, phi)              hierarchical variant only

Each sweep draws sigma^2 (preceded by lambda0 in the hierarchical variant),
reallocates every mu_t from its Polya-urn mixture and then redraws the
cluster values.  The step functions below operate on an explicit
:class:`MeanState` and are the readable reference for one update; full chains
run through the sweep kernels in :mod:`ppmvar.kernels`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from . import kernels
from .errors import DomainError, NumericError, UsageError
from .mcmc import MCMCConfig
from .partition import ClusterStats, Partition, from_values
from .rand import GammaParams, InverseGammaParams, RngState, make_rng


@dataclass(frozen=True)
class MeanHyperParams:
    m: float = 0.0
    tau0_sq: float = 1000.0
    nu0: float = 2.01
    lambda0: float = 0.0101
    c: float = 1.0
    hierarchical: bool = False
    eta: float = 1.0
    phi: float = 0.0101

    def __post_init__(self):
        if not self.tau0_sq > 0:
            raise DomainError(f"tau0_sq must be positive, got {self.tau0_sq}", module="gibbs_mean")
        if not self.nu0 > 1:
            raise DomainError(f"nu0 must exceed 1, got {self.nu0}", module="gibbs_mean")
        if not self.lambda0 > 0:
            raise DomainError(f"lambda0 must be positive, got {self.lambda0}", module="gibbs_mean")
        if not self.c > 0:
            raise DomainError(f"c must be positive, got {self.c}", module="gibbs_mean")
        if self.hierarchical and not (self.eta > 0 and self.phi > 0):
            raise DomainError("eta and phi must be positive", module="gibbs_mean")


@dataclass
class MeanState:
    mu: np.ndarray
    sigma_sq: float
    lambda0_cur: Optional[float] = None

    @property
    def partition(self) -> Partition:
        return from_values(self.mu)


@dataclass(frozen=True)
class MeanSweep:
    """One stored sweep: the mean vector, the common variance and the partition."""

    mu: np.ndarray
    sigma_sq: float

    @cached_property
    def partition(self) -> Partition:
        return from_values(self.mu)


@dataclass
class MeanDraws:
    """Post burn-in output of :func:`run_chain`.

    ``location`` holds the cluster-size weighted mean ``sum_d |S_d|/T mu*_d`` of
    each sweep.  ``mu`` is the full ``(L, T)`` matrix of draws and is only
    present when the chain was run with ``store=True``.
    """

    sigma_sq: np.ndarray
    location: np.ndarray
    n_clusters: np.ndarray
    largest: np.ndarray
    mu_mean: np.ndarray
    T: int
    mcmc: MCMCConfig
    lambda0: Optional[np.ndarray] = None
    mu: Optional[np.ndarray] = None
    audit: Optional[dict] = None
    fit_scale: float = 1.0

    model = "mu-ppm"

    def __len__(self):
        return self.sigma_sq.size

    @property
    def burn_in(self) -> int:
        return self.mcmc.burn_in

    @property
    def sigma_sq_mean(self) -> float:
        return float(self.sigma_sq.mean())

    def sweep(self, index: int) -> MeanSweep:
        if self.mu is None:
            raise UsageError("chain was run without store=True", module="gibbs_mean")
        return MeanSweep(self.mu[index], float(self.sigma_sq[index]))

    @property
    def partitions(self) -> list[Partition]:
        if self.mu is None:
            raise UsageError("chain was run without store=True", module="gibbs_mean")
        return [from_values(row) for row in self.mu]

    def cluster_stats(self) -> ClusterStats:
        return ClusterStats(
            float(self.n_clusters.mean()), float((self.largest / self.T).mean())
        )


# -- single-update reference steps ------------------------------------------------


def sigma2_full_conditional(state: MeanState, y, h: MeanHyperParams) -> InverseGammaParams:
    y = np.asarray(y, dtype=float)
    T = y.size
    lam = h.lambda0 if state.lambda0_cur is None else state.lambda0_cur
    cluster_values = np.unique(state.mu)
    shape = h.nu0 + T / 2 + cluster_values.size / 2
    scale = (
        lam
        + np.sum((cluster_values - h.m) ** 2) / (2 * h.tau0_sq)
        + 0.5 * np.sum((y - state.mu) ** 2)
    )
    if not np.isfinite(scale):
        raise NumericError("non-finite sigma^2 scale", module="gibbs_mean")
    return InverseGammaParams(shape, float(scale))


def step_sigma2(state: MeanState, y, h: MeanHyperParams, rng: RngState) -> float:
    p = sigma2_full_conditional(state, y, h)
    return p.scale / rng.standard_gamma(p.shape)


def mean_mixture(t: int, state: MeanState, y, h: MeanHyperParams):
    """Normalised reallocation weights for ``mu_t``.

    Returns ``(values, probs, p_new, fresh_mean, fresh_var)``: ``values`` are the
    distinct entries of ``mu`` without index t, ``probs`` their total weights
    (each index j != t contributes one term), ``p_new`` the weight of a fresh
    Normal draw with the given moments.
    """
    y = np.asarray(y, dtype=float)
    others = np.delete(state.mu, t)
    values, counts = np.unique(others, return_counts=True)
    s2 = state.sigma_sq
    one_tau = 1.0 + h.tau0_sq
    lw = np.log(counts) - (y[t] - values) ** 2 / (2 * s2)
    lw0 = math.log(h.c) - 0.5 * math.log(one_tau) - (y[t] - h.m) ** 2 / (2 * s2 * one_tau)
    allw = np.append(lw, lw0)
    allw = np.exp(allw - allw.max())
    allw /= allw.sum()
    fresh_mean = (y[t] * h.tau0_sq + h.m) / one_tau
    fresh_var = s2 * h.tau0_sq / one_tau
    return values, allw[:-1], float(allw[-1]), fresh_mean, fresh_var


def step_mu_t(t: int, state: MeanState, y, h: MeanHyperParams, rng: RngState) -> float:
    if not 0 <= t < state.mu.size:
        raise UsageError(f"index {t} out of range", module="gibbs_mean")
    values, probs, p_new, fmean, fvar = mean_mixture(t, state, y, h)
    u = rng.random()
    acc = 0.0
    for v, p in zip(values, probs):
        acc += p
        if u < acc:
            return v
    return fmean + math.sqrt(fvar) * rng.standard_normal()


def cluster_mean_conditionals(state: MeanState, y, h: MeanHyperParams):
    """``(partition, means, variances)`` of each cluster value's full conditional."""
    y = np.asarray(y, dtype=float)
    part = state.partition
    means, variances = [], []
    for cl in part.clusters:
        prec = len(cl) + 1.0 / h.tau0_sq
        means.append((y[list(cl)].sum() + h.m / h.tau0_sq) / prec)
        variances.append(state.sigma_sq / prec)
    return part, np.array(means), np.array(variances)


def resample_cluster_means(state: MeanState, y, h: MeanHyperParams, rng: RngState) -> np.ndarray:
    part, means, variances = cluster_mean_conditionals(state, y, h)
    out = np.empty_like(state.mu, dtype=float)
    for cl, mean, var in zip(part.clusters, means, variances):
        out[list(cl)] = mean + math.sqrt(var) * rng.standard_normal()
    return out


def lambda0_full_conditional(sigma_sq: float, h: MeanHyperParams) -> GammaParams:
    return GammaParams(h.nu0 + h.eta, sigma_sq * h.phi / (sigma_sq + h.phi))


def step_lambda0(state: MeanState, h: MeanHyperParams, rng: RngState) -> float:
    if not h.hierarchical:
        raise UsageError("step_lambda0 requires the hierarchical variant", module="gibbs_mean")
    p = lambda0_full_conditional(state.sigma_sq, h)
    return p.scale * rng.standard_gamma(p.shape)


# -- chains -----------------------------------------------------------------------


def _check_series(y):
    y = np.ascontiguousarray(y, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise UsageError("need at least 2 returns", module="gibbs_mean")
    if not np.all(np.isfinite(y)):
        raise UsageError("returns must be finite", module="gibbs_mean")
    return y


def initial_state(y, h: MeanHyperParams) -> MeanState:
    """Trivial partition at the sample mean, sigma^2 at the sample variance.

    A constant series falls back to the prior mean of sigma^2.
    """
    y = np.asarray(y, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        var = float(np.var(y, ddof=1))
    if not var > 0:
        var = h.lambda0 / (h.nu0 - 1.0)
    return MeanState(np.full(y.size, float(np.mean(y))), var, h.lambda0)


def run_chain(y, h: MeanHyperParams = MeanHyperParams(), mcmc: MCMCConfig = MCMCConfig(),
              *, store: bool = True, audit: bool = False, fit_scale: float = 1.0,
              backend=None) -> MeanDraws:
    """Run the mean-partition Gibbs sampler and keep the post burn-in sweeps.

    ``fit_scale`` multiplies the returns before sampling, so every stored draw
    is in units of ``fit_scale`` times the input units.
    """
    y = _check_series(y)
    if not fit_scale > 0:
        raise DomainError(f"fit_scale must be positive, got {fit_scale}", module="gibbs_mean")
    with np.errstate(over="ignore"):
        y = y * fit_scale
    if not np.all(np.isfinite(y)):
        raise NumericError("returns overflow after multiplying by fit_scale", module="gibbs_mean")
    init = initial_state(y, h)
    res = kernels.get(backend).mean_chain(
        y, h.m, h.tau0_sq, h.nu0, h.lambda0, h.c, h.hierarchical, h.eta, h.phi,
        mcmc.sweeps, mcmc.burn_in, make_rng(mcmc.seed),
        float(init.mu[0]), init.sigma_sq, store, audit,
    )
    if res["status"] != 0:
        raise NumericError(f"non-finite draw at sweep {res['sweep']}", module="gibbs_mean")
    return MeanDraws(
        sigma_sq=res["sigma_sq"],
        location=res["location"],
        n_clusters=res["n_clusters"],
        largest=res["largest"],
        mu_mean=res["param_sum"] / mcmc.kept,
        T=y.size,
        mcmc=mcmc,
        lambda0=res["lambda0"] if h.hierarchical else None,
        mu=res["rows"],
        audit=res.get("audit"),
        fit_scale=fit_scale,
    )


@dataclass
class ConditionalFit:
    """Posterior means given a fixed partition; unpacks as ``(mu, sigma_sq)``."""

    mu: np.ndarray
    sigma_sq: float
    sigma_sq_draws: np.ndarray
    value_draws: Optional[np.ndarray] = None

    def __iter__(self):
        return iter((self.mu, self.sigma_sq))


def run_conditional_chain(y, h: MeanHyperParams, fixed: Partition, mcmc: MCMCConfig,
                          *, store: bool = False, backend=None) -> ConditionalFit:
    """Alternate the sigma^2 and cluster-mean steps with the partition held fixed."""
    y = _check_series(y)
    if fixed.T != y.size:
        raise UsageError(f"partition covers {fixed.T} indices, series has {y.size}", module="gibbs_mean")
    init = initial_state(y, h)
    labels = fixed.labels()
    K = len(fixed)
    res = kernels.get(backend).cond_mean_chain(
        y, labels, K, h.m, h.tau0_sq, h.nu0, h.lambda0, h.hierarchical, h.eta, h.phi,
        mcmc.sweeps, mcmc.burn_in, make_rng(mcmc.seed),
        float(init.mu[0]), init.sigma_sq, store,
    )
    if res["status"] != 0:
        raise NumericError(f"non-finite draw at sweep {res['sweep']}", module="gibbs_mean")
    cluster_means = res["value_sum"] / mcmc.kept
    return ConditionalFit(
        mu=cluster_means[labels],
        sigma_sq=float(res["sigma_sq"].mean()),
        sigma_sq_draws=res["sigma_sq"],
        value_draws=res["rows"],
    )
