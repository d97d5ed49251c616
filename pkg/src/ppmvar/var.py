"""Value-at-Risk from Gaussian formulas, PPM posterior draws and ML baselines.

All VaR figures are positive loss magnitudes normalised by the spot price, in
the decimal units of the input returns.  Multiply by 100 for VaR(%).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import DomainError, UsageError
from .gibbs_mean import MeanDraws, MeanSweep
from .gibbs_variance import VarDraws, VarSweep
from .mcmc import batch_means_se
from .partition import ClusterStats
from .rand import RngState, make_rng, normal_quantile_factor

MIN_DRAWS = 100


@dataclass
class VaRReport:
    alpha: float
    model: str
    point: float
    interval_lo: float
    interval_hi: float
    draws: np.ndarray
    horizon_days: int = 1
    interval_mass: float = 0.68
    cluster_stats: Optional[ClusterStats] = None
    mc_se: Optional[float] = None
    extra: dict = field(default_factory=dict)

    @property
    def point_pct(self) -> float:
        return 100.0 * self.point

    def summary(self) -> dict:
        out = {
            "alpha": self.alpha,
            "model": self.model,
            "horizon_days": self.horizon_days,
            "point": self.point,
            "interval_lo": self.interval_lo,
            "interval_hi": self.interval_hi,
            "interval_mass": self.interval_mass,
            "n_draws": int(self.draws.size),
        }
        if self.mc_se is not None:
            out["mc_se"] = self.mc_se
        if self.cluster_stats is not None:
            out["mean_cluster_count"] = self.cluster_stats.mean_cluster_count
            out["largest_cluster_weight"] = self.cluster_stats.largest_cluster_weight
        out.update(self.extra)
        return out


def gaussian_var(mu: float, sigma: float, alpha: float) -> float:
    """``-mu + sigma z_alpha`` with ``z_alpha`` the upper alpha Normal quantile."""
    if sigma < 0:
        raise DomainError(f"sigma must be nonnegative, got {sigma}", module="var")
    return -mu + sigma * normal_quantile_factor(alpha)


def var_draw_mean_model(draw: MeanSweep, alpha: float) -> float:
    """Per-sweep VaR when the partition acts on the means.

    The location is the cluster-size weighted average of the cluster means.
    """
    mu = np.asarray(draw.mu)
    T = mu.size
    location = 0.0
    for cl in draw.partition.clusters:
        location += (len(cl) / T) * mu[cl[0]]
    return -location + math.sqrt(draw.sigma_sq) * normal_quantile_factor(alpha)


def var_draw_variance_model(draw: VarSweep, alpha: float) -> float:
    """Per-sweep VaR when the partition acts on the variances.

    Cluster standard deviations (not variances) are averaged with size weights.
    """
    s2 = np.asarray(draw.sigma_sq)
    T = s2.size
    scale = 0.0
    for cl in draw.partition.clusters:
        scale += (len(cl) / T) * math.sqrt(s2[cl[0]])
    return -draw.mu + scale * normal_quantile_factor(alpha)


def var_draws(draws: Union[MeanDraws, VarDraws], alpha: float) -> np.ndarray:
    """Per-sweep VaR for a whole chain, in input units."""
    z = normal_quantile_factor(alpha)
    if isinstance(draws, MeanDraws):
        values = -draws.location + np.sqrt(draws.sigma_sq) * z
    elif isinstance(draws, VarDraws):
        values = -draws.mu + draws.scale * z
    else:
        raise UsageError(f"unsupported draws type {type(draws).__name__}", module="var")
    return values / draws.fit_scale


def _interval(values: np.ndarray, mass: float) -> tuple[float, float]:
    if not 0 < mass < 1:
        raise DomainError(f"interval mass must be in (0, 1), got {mass}", module="var")
    lo, hi = np.quantile(values, [(1 - mass) / 2, (1 + mass) / 2])
    return float(lo), float(hi)


def var_estimate(draws, alpha: float, interval_mass: float = 0.68,
                 horizon_days: int = 1) -> VaRReport:
    """Ergodic mean of the per-sweep VaR with a central credible interval.

    ``draws`` is a :class:`MeanDraws`, a :class:`VarDraws` or a plain array of
    per-sweep VaR values.
    """
    if isinstance(draws, (MeanDraws, VarDraws)):
        values = var_draws(draws, alpha)
        model, stats = draws.model, draws.cluster_stats()
    else:
        values = np.asarray(draws, dtype=float).ravel()
        model, stats = "draws", None
    if values.size < MIN_DRAWS:
        raise UsageError(f"need at least {MIN_DRAWS} draws, got {values.size}", module="var")
    lo, hi = _interval(values, interval_mass)
    return VaRReport(
        alpha=alpha,
        model=model,
        point=float(values.mean()),
        interval_lo=lo,
        interval_hi=hi,
        draws=values,
        horizon_days=horizon_days,
        interval_mass=interval_mass,
        cluster_stats=stats,
        mc_se=batch_means_se(values),
    )


def ml_normal_var(y, alpha: float, bootstrap_reps: int = 1000, rng: Optional[RngState] = None,
                  interval_mass: float = 0.68, horizon_days: int = 1) -> VaRReport:
    """Gaussian VaR at the ML mean and standard deviation, bootstrap interval.

    Each bootstrap replicate resamples the T returns with replacement and
    recomputes the same statistic.
    """
    y = np.asarray(y, dtype=float)
    T = y.size
    if T < 2:
        raise UsageError("need at least 2 returns", module="var")
    if bootstrap_reps < 2:
        raise UsageError("need at least 2 bootstrap replicates", module="var")
    rng = make_rng(0) if rng is None else rng
    z = normal_quantile_factor(alpha)
    point = gaussian_var(float(y.mean()), float(y.std()), alpha)
    idx = rng.integers(0, T, size=(bootstrap_reps, T))
    samples = y[idx]
    boot = -samples.mean(axis=1) + samples.std(axis=1) * z
    lo, hi = _interval(boot, interval_mass)
    return VaRReport(
        alpha=alpha,
        model="ml-normal",
        point=point,
        interval_lo=lo,
        interval_hi=hi,
        draws=boot,
        horizon_days=horizon_days,
        interval_mass=interval_mass,
    )


def aggregate_returns(y, h: int) -> np.ndarray:
    """Non-overlapping h-day sums aligned to the latest return.

    The ``T mod h`` oldest returns that do not fill a block are dropped.
    """
    if int(h) != h or h < 1:
        raise DomainError(f"horizon must be a positive integer, got {h}", module="var")
    h = int(h)
    y = np.asarray(y, dtype=float)
    n = y.size // h
    if n == 0:
        raise UsageError(f"series of length {y.size} is shorter than horizon {h}", module="var")
    return y[y.size - n * h:].reshape(n, h).sum(axis=1)


def mrc(var_history_10d, h_mult: float = 3.0) -> float:
    """Market risk capital from 60 lagged 10-day VaRs plus the current one.

    ``var_history_10d`` is ordered oldest first and must hold exactly 61
    values; the last entry is the current VaR.
    """
    hist = np.asarray(var_history_10d, dtype=float)
    if hist.ndim != 1 or hist.size != 61:
        raise UsageError(f"need exactly 61 values (60 lags and current), got {hist.size}", module="var")
    if not 3 <= h_mult <= 4:
        raise DomainError(f"multiplier must lie in [3, 4], got {h_mult}", module="var")
    return float(max(h_mult / 60 * hist[:60].sum(), hist[60]))
