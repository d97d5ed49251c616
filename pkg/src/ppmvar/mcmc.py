"""Run-length settings and Monte Carlo error diagnostics shared by the samplers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UsageError


@dataclass(frozen=True)
class MCMCConfig:
    """Total sweeps (burn-in included), burn-in length and base seed."""

    sweeps: int = 10000
    burn_in: int = 1000
    seed: int = 1

    def __post_init__(self):
        if self.burn_in < 0 or self.sweeps <= self.burn_in:
            raise UsageError(
                f"need sweeps > burn_in >= 0, got sweeps={self.sweeps}, burn_in={self.burn_in}",
                module="mcmc",
            )
        if self.seed < 0:
            raise UsageError(f"seed must be nonnegative, got {self.seed}", module="mcmc")

    @property
    def kept(self) -> int:
        return self.sweeps - self.burn_in

    def with_seed(self, seed: int) -> "MCMCConfig":
        return MCMCConfig(self.sweeps, self.burn_in, int(seed))


def batch_means_se(x, n_batches: int = 50) -> float:
    """Monte Carlo standard error of the mean of a correlated chain.

    Non-overlapping batch means; trailing draws that do not fill a batch are
    dropped.
    """
    x = np.asarray(x, dtype=float)
    n_batches = min(n_batches, x.size // 2)
    if n_batches < 2:
        raise UsageError("too few draws for batch means", module="mcmc")
    size = x.size // n_batches
    means = x[: size * n_batches].reshape(n_batches, size).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(n_batches))
