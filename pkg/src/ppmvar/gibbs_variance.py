"""Gibbs sampler for the Normal model with a product partition on the variances.

Model::

    y_t | mu, sigma^2_t          ~ N(mu, sigma^2_t)
    mu                           ~ N(m, lambda0 / (T (nu0 - 1)))
    sigma^2*_d | rho             ~ IG(nu0, lambda0)        one value per cluster
    rho                          ~ product distribution, C(S) = c (|S|-1)!

A sweep draws mu, reallocates each sigma^2_t from its mixture of point masses
and an Inverse-Gamma, then redraws every cluster variance.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
from scipy.special import gammaln

from . import kernels
from .errors import DomainError, NumericError, UsageError
from .mcmc import MCMCConfig
from .partition import ClusterStats, Partition, from_values
from .rand import InverseGammaParams, RngState, make_rng


@dataclass(frozen=True)
class VarHyperParams:
    m: float = 0.0
    nu0: float = 2.01
    lambda0: float = 0.0101
    c: float = 1.0

    def __post_init__(self):
        if not self.nu0 > 1:
            raise DomainError(f"nu0 must exceed 1, got {self.nu0}", module="gibbs_variance")
        if not self.lambda0 > 0:
            raise DomainError(f"lambda0 must be positive, got {self.lambda0}", module="gibbs_variance")
        if not self.c > 0:
            raise DomainError(f"c must be positive, got {self.c}", module="gibbs_variance")

    def mu_prior_variance(self, T: int) -> float:
        return self.lambda0 / (T * (self.nu0 - 1.0))

    def log_fresh_const(self) -> float:
        """Residual-free part of log q0: log c + log Gamma ratio + powers of 2 and lambda0."""
        return (
            math.log(self.c)
            + float(gammaln(self.nu0 + 0.5) - gammaln(self.nu0))
            + (self.nu0 + 0.5) * math.log(2.0)
            + self.nu0 * math.log(self.lambda0)
        )


@dataclass
class VarState:
    mu: float
    sigma_sq: np.ndarray

    @property
    def partition(self) -> Partition:
        return from_values(self.sigma_sq)


@dataclass(frozen=True)
class VarSweep:
    mu: float
    sigma_sq: np.ndarray

    @cached_property
    def partition(self) -> Partition:
        return from_values(self.sigma_sq)


@dataclass
class VarDraws:
    """Post burn-in output of :func:`run_chain`.

    ``scale`` holds ``sum_d |S_d|/T sqrt(sigma^2*_d)`` per sweep, the
    size-weighted average of cluster standard deviations.
    """

    mu: np.ndarray
    scale: np.ndarray
    n_clusters: np.ndarray
    largest: np.ndarray
    sigma_sq_mean: np.ndarray
    T: int
    mcmc: MCMCConfig
    sigma_sq: Optional[np.ndarray] = None
    audit: Optional[dict] = None
    fit_scale: float = 1.0

    model = "sigma2-ppm"

    def __len__(self):
        return self.mu.size

    @property
    def burn_in(self) -> int:
        return self.mcmc.burn_in

    def sweep(self, index: int) -> VarSweep:
        if self.sigma_sq is None:
            raise UsageError("chain was run without store=True", module="gibbs_variance")
        return VarSweep(float(self.mu[index]), self.sigma_sq[index])

    @property
    def partitions(self) -> list[Partition]:
        if self.sigma_sq is None:
            raise UsageError("chain was run without store=True", module="gibbs_variance")
        return [from_values(row) for row in self.sigma_sq]

    def cluster_stats(self) -> ClusterStats:
        return ClusterStats(
            float(self.n_clusters.mean()), float((self.largest / self.T).mean())
        )


def mu_full_conditional(state: VarState, y, h: VarHyperParams) -> tuple[float, float]:
    """Mean and variance of the Normal full conditional of the common mean."""
    y = np.asarray(y, dtype=float)
    kappa = h.mu_prior_variance(y.size)
    part = state.partition
    a = b = 0.0
    for cl in part.clusters:
        v = state.sigma_sq[cl[0]]
        a += y[list(cl)].sum() / v
        b += len(cl) / v
    denom = 1.0 + kappa * b
    return (h.m + kappa * a) / denom, kappa / denom


def step_mu(state: VarState, y, h: VarHyperParams, rng: RngState) -> float:
    mean, var = mu_full_conditional(state, y, h)
    return mean + math.sqrt(var) * rng.standard_normal()


def log_fresh_weight(residual: float, h: VarHyperParams) -> float:
    """log q0 for a residual ``y_t - mu``: c times the IG-marginal Normal kernel."""
    return h.log_fresh_const() - (h.nu0 + 0.5) * math.log(residual * residual + 2.0 * h.lambda0)


def fresh_variance_params(residual: float, h: VarHyperParams) -> InverseGammaParams:
    return InverseGammaParams(h.nu0 + 0.5, h.lambda0 + residual * residual / 2.0)


def variance_mixture(t: int, state: VarState, y, h: VarHyperParams):
    """Normalised reallocation weights for ``sigma^2_t``.

    Returns ``(values, probs, p_new, fresh)`` with ``fresh`` the Inverse-Gamma
    law of a newly drawn value.
    """
    y = np.asarray(y, dtype=float)
    others = np.delete(state.sigma_sq, t)
    values, counts = np.unique(others, return_counts=True)
    r = y[t] - state.mu
    lw = np.log(counts) - 0.5 * np.log(values) - r * r / (2.0 * values)
    allw = np.append(lw, log_fresh_weight(r, h))
    allw = np.exp(allw - allw.max())
    allw /= allw.sum()
    return values, allw[:-1], float(allw[-1]), fresh_variance_params(r, h)


def step_sigma2_t(t: int, state: VarState, y, h: VarHyperParams, rng: RngState) -> float:
    if not 0 <= t < state.sigma_sq.size:
        raise UsageError(f"index {t} out of range", module="gibbs_variance")
    values, probs, _, fresh = variance_mixture(t, state, y, h)
    u = rng.random()
    acc = 0.0
    for v, p in zip(values, probs):
        acc += p
        if u < acc:
            return v
    return fresh.scale / rng.standard_gamma(fresh.shape)


def cluster_variance_conditionals(state: VarState, y, h: VarHyperParams):
    y = np.asarray(y, dtype=float)
    part = state.partition
    params = []
    for cl in part.clusters:
        ss = np.sum((y[list(cl)] - state.mu) ** 2)
        params.append(InverseGammaParams(h.nu0 + len(cl) / 2, h.lambda0 + ss / 2))
    return part, params


def resample_cluster_variances(state: VarState, y, h: VarHyperParams, rng: RngState) -> np.ndarray:
    part, params = cluster_variance_conditionals(state, y, h)
    out = np.empty_like(state.sigma_sq, dtype=float)
    for cl, p in zip(part.clusters, params):
        out[list(cl)] = p.scale / rng.standard_gamma(p.shape)
    return out


def _check_series(y):
    y = np.ascontiguousarray(y, dtype=float)
    if y.ndim != 1 or y.size < 2:
        raise UsageError("need at least 2 returns", module="gibbs_variance")
    if not np.all(np.isfinite(y)):
        raise UsageError("returns must be finite", module="gibbs_variance")
    return y


def initial_state(y, h: VarHyperParams) -> VarState:
    y = np.asarray(y, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        var = float(np.var(y, ddof=1))
    if not var > 0:
        var = h.lambda0 / (h.nu0 - 1.0)
    return VarState(float(np.mean(y)), np.full(y.size, var))


def run_chain(y, h: VarHyperParams = VarHyperParams(), mcmc: MCMCConfig = MCMCConfig(),
              *, store: bool = True, audit: bool = False, fit_scale: float = 1.0,
              backend=None) -> VarDraws:
    """Run the variance-partition Gibbs sampler and keep the post burn-in sweeps.

    ``fit_scale`` multiplies the returns before sampling, so every stored draw
    is in units of ``fit_scale`` times the input units.
    """
    y = _check_series(y)
    if not fit_scale > 0:
        raise DomainError(f"fit_scale must be positive, got {fit_scale}", module="gibbs_variance")
    with np.errstate(over="ignore"):
        y = y * fit_scale
    if not np.all(np.isfinite(y)):
        raise NumericError("returns overflow after multiplying by fit_scale", module="gibbs_variance")
    init = initial_state(y, h)
    res = kernels.get(backend).variance_chain(
        y, h.m, h.nu0, h.lambda0, h.c, h.log_fresh_const(),
        mcmc.sweeps, mcmc.burn_in, make_rng(mcmc.seed),
        init.mu, float(init.sigma_sq[0]), store, audit,
    )
    if res["status"] != 0:
        raise NumericError(f"non-finite draw at sweep {res['sweep']}", module="gibbs_variance")
    return VarDraws(
        mu=res["mu"],
        scale=res["scale"],
        n_clusters=res["n_clusters"],
        largest=res["largest"],
        sigma_sq_mean=res["param_sum"] / mcmc.kept,
        T=y.size,
        mcmc=mcmc,
        sigma_sq=res["rows"],
        audit=res.get("audit"),
        fit_scale=fit_scale,
    )


@dataclass
class ConditionalVarFit:
    mu: float
    sigma_sq: np.ndarray
    mu_draws: np.ndarray
    value_draws: Optional[np.ndarray] = None

    def __iter__(self):
        return iter((self.mu, self.sigma_sq))


def run_conditional_chain(y, h: VarHyperParams, fixed: Partition, mcmc: MCMCConfig,
                          *, fix_mu: Optional[float] = None, store: bool = False,
                          backend=None) -> ConditionalVarFit:
    """Fixed-partition chain; ``fix_mu`` pins the common mean instead of sampling it."""
    y = _check_series(y)
    if fixed.T != y.size:
        raise UsageError(f"partition covers {fixed.T} indices, series has {y.size}", module="gibbs_variance")
    init = initial_state(y, h)
    labels = fixed.labels()
    res = kernels.get(backend).cond_variance_chain(
        y, labels, len(fixed), h.m, h.nu0, h.lambda0,
        fix_mu is not None, 0.0 if fix_mu is None else float(fix_mu),
        mcmc.sweeps, mcmc.burn_in, make_rng(mcmc.seed),
        init.mu, float(init.sigma_sq[0]), store,
    )
    if res["status"] != 0:
        raise NumericError(f"non-finite draw at sweep {res['sweep']}", module="gibbs_variance")
    cluster_means = res["value_sum"] / mcmc.kept
    return ConditionalVarFit(
        mu=float(res["mu"].mean()),
        sigma_sq=cluster_means[labels],
        mu_draws=res["mu"],
        value_draws=res["rows"],
    )
