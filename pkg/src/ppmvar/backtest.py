"""Rolling-window VaR backtests with Kupiec and Christoffersen likelihood ratios."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy.special import xlogy

from . import gibbs_mean, gibbs_variance
from .errors import DomainError, PPMError, UsageError
from .gibbs_mean import MeanHyperParams
from .gibbs_variance import VarHyperParams
from .mcmc import MCMCConfig
from .var import gaussian_var, var_estimate

UC_CUTOFF = 3.84
CC_CUTOFF = 5.99


@dataclass(frozen=True)
class ExceptionSequence:
    indicators: tuple[int, ...]
    alpha: float

    def __post_init__(self):
        if any(i not in (0, 1) for i in self.indicators):
            raise DomainError("indicators must be 0 or 1", module="backtest")
        if not 0 < self.alpha < 1:
            raise DomainError(f"alpha must be in (0, 1), got {self.alpha}", module="backtest")

    @classmethod
    def from_array(cls, x, alpha: float) -> "ExceptionSequence":
        return cls(tuple(int(v) for v in np.asarray(x).ravel()), float(alpha))

    @property
    def N(self) -> int:
        return len(self.indicators)

    @property
    def n(self) -> int:
        return sum(self.indicators)

    def transitions(self) -> tuple[int, int, int, int]:
        """``(N00, N01, N10, N11)`` over consecutive pairs."""
        counts = [0, 0, 0, 0]
        for a, b in zip(self.indicators, self.indicators[1:]):
            counts[2 * a + b] += 1
        return tuple(counts)


def kupiec_uc(n: int, N: int, alpha: float) -> float:
    """Unconditional coverage likelihood ratio, with ``0 log 0 = 0``."""
    if N < 1 or not 0 <= n <= N:
        raise DomainError(f"need 0 <= n <= N and N >= 1, got n={n}, N={N}", module="backtest")
    if not 0 < alpha < 1:
        raise DomainError(f"alpha must be in (0, 1), got {alpha}", module="backtest")
    rate = n / N
    null = xlogy(N - n, 1 - alpha) + xlogy(n, alpha)
    alt = xlogy(N - n, 1 - rate) + xlogy(n, rate)
    return float(-2 * null + 2 * alt)


def christoffersen_cc(seq: ExceptionSequence) -> tuple[float, float]:
    """``(lr_ind, lr_cc)`` for a sequence of exception indicators.

    The restricted likelihood uses the overall exception rate ``n/N``.  A
    conditioning state that never occurs contributes zero.
    """
    N = seq.N
    if N < 2:
        raise UsageError("need at least 2 indicators", module="backtest")
    n00, n01, n10, n11 = seq.transitions()
    rate = seq.n / N
    restricted = xlogy(n00 + n10, 1 - rate) + xlogy(n01 + n11, rate)
    unrestricted = 0.0
    if n00 + n01:
        pi0 = n01 / (n00 + n01)
        unrestricted += xlogy(n00, 1 - pi0) + xlogy(n01, pi0)
    if n10 + n11:
        pi1 = n11 / (n10 + n11)
        unrestricted += xlogy(n10, 1 - pi1) + xlogy(n11, pi1)
    lr_ind = float(-2 * restricted + 2 * unrestricted)
    return lr_ind, kupiec_uc(seq.n, N, seq.alpha) + lr_ind


@dataclass
class BacktestReport:
    alpha: float
    model: str
    window: int
    exceptions: ExceptionSequence
    lr_uc: float
    lr_ind: float
    lr_cc: float
    var: np.ndarray = field(repr=False)
    realized: np.ndarray = field(repr=False)
    mcmc: Optional[MCMCConfig] = None

    @property
    def n(self) -> int:
        return self.exceptions.n

    @property
    def N(self) -> int:
        return self.exceptions.N

    @property
    def reject_uc(self) -> bool:
        return self.lr_uc > UC_CUTOFF

    @property
    def reject_cc(self) -> bool:
        return self.lr_cc > CC_CUTOFF

    @classmethod
    def from_stages(cls, var, realized, alpha, model, window, mcmc=None) -> "BacktestReport":
        var = np.asarray(var, dtype=float)
        realized = np.asarray(realized, dtype=float)
        seq = ExceptionSequence.from_array(realized < -var, alpha)
        lr_uc = kupiec_uc(seq.n, seq.N, alpha)
        if seq.N >= 2:
            lr_ind, lr_cc = christoffersen_cc(seq)
        else:
            lr_ind, lr_cc = 0.0, lr_uc
        return cls(alpha, model, window, seq, lr_uc, lr_ind, lr_cc, var, realized, mcmc)

    def summary(self) -> dict:
        return {
            "alpha": self.alpha,
            "model": self.model,
            "window": self.window,
            "n": self.n,
            "N": self.N,
            "lr_uc": self.lr_uc,
            "lr_ind": self.lr_ind,
            "lr_cc": self.lr_cc,
            "reject_uc": self.reject_uc,
            "reject_cc": self.reject_cc,
            "sweeps": None if self.mcmc is None else self.mcmc.sweeps,
            "burn_in": None if self.mcmc is None else self.mcmc.burn_in,
            "empty_state_convention": "unvisited transition states contribute 0",
        }

    def stage_table(self) -> list[dict]:
        return [
            {"stage": j, "var": float(v), "realized": float(r), "exception": e}
            for j, (v, r, e) in enumerate(zip(self.var, self.realized, self.exceptions.indicators))
        ]


VaRModel = Union[str, Callable[[np.ndarray, float], float]]


def model_var(window_returns, model: str, alpha: float, mcmc: MCMCConfig,
              mean_params: MeanHyperParams = MeanHyperParams(),
              var_params: VarHyperParams = VarHyperParams(),
              fit_scale: float = 100.0) -> float:
    """Point VaR of one estimation window under a named model."""
    if model == "mu-ppm":
        draws = gibbs_mean.run_chain(window_returns, mean_params, mcmc, store=False, fit_scale=fit_scale)
    elif model == "sigma2-ppm":
        draws = gibbs_variance.run_chain(window_returns, var_params, mcmc, store=False, fit_scale=fit_scale)
    elif model == "ml-normal":
        w = np.asarray(window_returns, dtype=float)
        return gaussian_var(float(w.mean()), float(w.std()), alpha)
    else:
        raise UsageError(f"unknown model {model!r}", module="backtest")
    return var_estimate(draws, alpha).point


def rolling_backtest(y, model: VaRModel, window: int, alpha: float,
                     mcmc: MCMCConfig = MCMCConfig(4000, 400, 1),
                     mean_params: MeanHyperParams = MeanHyperParams(),
                     var_params: VarHyperParams = VarHyperParams(),
                     fit_scale: float = 100.0, workers: Optional[int] = None) -> BacktestReport:
    """Estimate VaR on each window ``y[J:J+window]`` and test it on ``y[J+window]``.

    ``model`` is a model name or a callable ``(window_returns, alpha) -> VaR``.
    Stage ``J`` runs with seed ``mcmc.seed + J``.
    """
    y = np.asarray(y, dtype=float)
    T = y.size
    if window < 2 or T < window + 1:
        raise UsageError(f"need window >= 2 and T >= window + 1, got window={window}, T={T}",
                         module="backtest")
    N = T - window

    def stage(J):
        chunk = y[J:J + window]
        try:
            if callable(model):
                return float(model(chunk, alpha))
            return model_var(chunk, model, alpha, mcmc.with_seed(mcmc.seed + J),
                             mean_params, var_params, fit_scale)
        except PPMError as exc:
            raise type(exc)(f"stage {J}: {exc}", module=exc.module) from exc

    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            var = list(pool.map(stage, range(N)))
    else:
        var = [stage(J) for J in range(N)]
    name = model if isinstance(model, str) else getattr(model, "__name__", "custom")
    return BacktestReport.from_stages(var, y[window:], alpha, name, window,
                                      None if callable(model) else mcmc)
