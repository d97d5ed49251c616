"""Outlier identification by minimising a partition score over a candidate set.

The full mean-partition chain gives posterior means ``mu_B`` and ``sigma2_B``.
Each candidate partition with at most three clusters is then refitted with
the partition held fixed, and scored by how far its estimates move away from
``(mu_B, sigma2_B)`` plus a linear penalty on the number of clusters.  The
elements outside the largest cluster of the winning partition are the
outliers.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import gibbs_mean
from .errors import DomainError, UsageError
from .gibbs_mean import MeanHyperParams
from .mcmc import MCMCConfig
from .partition import Partition

UNIQUE_TOL = 1e-12


@dataclass(frozen=True)
class ScoreParams:
    k1: float = 0.996
    k2: float = 0.002
    tail_k: int = 30

    def __post_init__(self):
        if self.k1 < 0 or self.k2 < 0 or self.k1 + self.k2 > 1 + 1e-15:
            raise DomainError(f"need k1, k2 >= 0 and k1 + k2 <= 1, got {self.k1}, {self.k2}",
                              module="outliers")
        if self.tail_k < 1:
            raise DomainError(f"tail_k must be positive, got {self.tail_k}", module="outliers")

    @property
    def k3(self) -> float:
        return 1.0 - self.k1 - self.k2


@dataclass
class CandidateScore:
    partition: Partition
    score: float
    sigma_sq: float


@dataclass
class OutlierResult:
    best_partition: Partition
    score: float
    outlier_indices: tuple[int, ...]
    candidates: list[CandidateScore] = field(repr=False)
    mu_B: np.ndarray = field(repr=False, default=None)
    sigma2_B: float = float("nan")

    def table(self) -> list[dict]:
        return [
            {"rank": i, "clusters": len(c.partition), "partition": str(c.partition),
             "score": c.score, "sigma_sq": c.sigma_sq}
            for i, c in enumerate(self.candidates)
        ]


def score(rho: Partition, mu_B, sigma2_B: float, mu_rho, sigma2_rho: float,
          p: ScoreParams, T: Optional[int] = None) -> float:
    mu_B = np.asarray(mu_B, dtype=float)
    mu_rho = np.asarray(mu_rho, dtype=float)
    T = mu_B.size if T is None else T
    if mu_B.shape != (T,) or mu_rho.shape != (T,) or rho.T != T:
        raise UsageError("score inputs must all have length T", module="outliers")
    diff = mu_B - mu_rho
    return float(
        p.k1 / T * np.dot(diff, diff)
        + p.k2 * (sigma2_B - sigma2_rho) ** 2
        + p.k3 * len(rho)
    )


def outlier_indices(rho: Partition) -> tuple[int, ...]:
    """Members of every cluster whose size is below the largest size."""
    top = max(rho.sizes)
    return tuple(sorted(i for cl in rho.clusters if len(cl) < top for i in cl))


def _value_ranks(values: np.ndarray) -> np.ndarray:
    """Rank of each entry's group among sorted unique values, grouping within UNIQUE_TOL."""
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.intp)
    rank = 0
    rep = values[order[0]]
    for idx in order:
        if values[idx] - rep > UNIQUE_TOL:
            rank += 1
            rep = values[idx]
        ranks[idx] = rank
    return ranks


def candidate_partitions(mu_B: Sequence[float], tail_k: int = 30) -> list[Partition]:
    """Partitions with up to three clusters cut at thresholds on the sorted means.

    For a pair of unique values ``u_i <= u_j`` the clusters are the indices
    below ``u_i``, between them inclusive, and above ``u_j``.  ``i`` ranges
    over the ``tail_k`` smallest and ``j`` over the ``tail_k`` largest unique
    values.  When both tails are nonempty the two-cluster version joining the
    tails is emitted as well.  The trivial partition is always included.
    Output is deduplicated and in order of first appearance.
    """
    mu_B = np.asarray(mu_B, dtype=float)
    T = mu_B.size
    if T < 1:
        raise UsageError("need at least one value", module="outliers")
    if tail_k < 1:
        raise DomainError(f"tail_k must be positive, got {tail_k}", module="outliers")
    ranks = _value_ranks(mu_B)
    K = int(ranks.max()) + 1
    k = min(tail_k, K)
    seen = {}
    trivial = Partition.trivial(T)
    seen[trivial.clusters] = trivial
    idx = np.arange(T)
    for i in range(k):
        for j in range(max(i, K - k), K):
            low = idx[ranks < i]
            mid = idx[(ranks >= i) & (ranks <= j)]
            high = idx[ranks > j]
            parts = [Partition.from_clusters([s for s in (low, mid, high) if s.size], T)]
            if low.size and high.size:
                parts.append(Partition.from_clusters([np.concatenate([low, high]), mid], T))
            for p in parts:
                seen.setdefault(p.clusters, p)
    return list(seen.values())


def _fit_candidate(y, h, rho, mcmc):
    fit = gibbs_mean.run_conditional_chain(y, h, rho, mcmc)
    return fit.mu, fit.sigma_sq


def detect_outliers(y, h: MeanHyperParams = MeanHyperParams(), p: ScoreParams = ScoreParams(),
                    mcmc_full: MCMCConfig = MCMCConfig(),
                    mcmc_conditional: MCMCConfig = MCMCConfig(2000, 200, 1),
                    tail_k: Optional[int] = None, fit_scale: float = 100.0,
                    workers: Optional[int] = None) -> OutlierResult:
    """Select the best-scoring candidate partition and report its outliers.

    Candidate ``k`` uses seed ``mcmc_conditional.seed + k``.  Ties in score go
    to fewer clusters, then to the earlier candidate.  ``fit_scale`` sets the
    units in which chains run and scores are computed.
    """
    y = np.asarray(y, dtype=float)
    T = y.size
    tail_k = p.tail_k if tail_k is None else tail_k
    full = gibbs_mean.run_chain(y, h, mcmc_full, store=False, fit_scale=fit_scale)
    mu_B, sigma2_B = full.mu_mean, full.sigma_sq_mean
    cands = candidate_partitions(mu_B, tail_k)
    ys = y * fit_scale
    jobs = [(ys, h, rho, mcmc_conditional.with_seed(mcmc_conditional.seed + k))
            for k, rho in enumerate(cands)]
    if workers and workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            fits = list(pool.map(lambda a: _fit_candidate(*a), jobs))
    else:
        fits = [_fit_candidate(*a) for a in jobs]
    scored = [
        CandidateScore(rho, score(rho, mu_B, sigma2_B, mu_r, s2_r, p, T), s2_r)
        for rho, (mu_r, s2_r) in zip(cands, fits)
    ]
    best = min(range(len(scored)), key=lambda k: (scored[k].score, len(scored[k].partition), k))
    winner = scored[best]
    return OutlierResult(
        best_partition=winner.partition,
        score=winner.score,
        outlier_indices=outlier_indices(winner.partition),
        candidates=scored,
        mu_B=mu_B,
        sigma2_B=sigma2_B,
    )


@dataclass
class StabilityRow:
    c: float
    outlier_indices: tuple[int, ...]
    n_clusters: int
    score: float


def outlier_stability(y, c_grid=(0.1, 0.5, 1, 5, 10, 50), h: MeanHyperParams = MeanHyperParams(),
                      **kwargs) -> list[StabilityRow]:
    """Rerun :func:`detect_outliers` for each cohesion constant in ``c_grid``."""
    rows = []
    for c in c_grid:
        hc = MeanHyperParams(**{**h.__dict__, "c": float(c)})
        res = detect_outliers(y, hc, **kwargs)
        rows.append(StabilityRow(float(c), res.outlier_indices, len(res.best_partition), res.score))
    return rows
