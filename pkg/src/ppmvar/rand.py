"""Seedable sampling primitives and the Gaussian quantile factor.

All randomness in the package flows through a :class:`numpy.random.Generator`
built on PCG64.  The compiled kernels draw from the same bit generator through
numpy's C distribution routines, so a chain is reproducible bit for bit from
its seed regardless of which backend ran it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import DomainError

RngState = np.random.Generator

_SEED_MASK = (1 << 64) - 1


def make_rng(seed: int) -> RngState:
    """Return a generator seeded with a 64-bit unsigned integer."""
    if seed < 0:
        raise DomainError(f"seed must be nonnegative, got {seed}", module="rand")
    return np.random.Generator(np.random.PCG64(int(seed) & _SEED_MASK))


def stream_rng(base_seed: int, stream: int) -> RngState:
    """Independent generator for parallel consumer ``stream``.

    The seed is ``base_seed + stream``; PCG64 seeding passes it through a
    SeedSequence, so neighbouring seeds give uncorrelated streams.
    """
    return make_rng((int(base_seed) + int(stream)) & _SEED_MASK)


@dataclass(frozen=True)
class InverseGammaParams:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise DomainError(
                f"inverse gamma needs shape > 0 and scale > 0, got {self.shape}, {self.scale}",
                module="rand",
            )

    @property
    def mean(self) -> float:
        if self.shape <= 1:
            return math.inf
        return self.scale / (self.shape - 1.0)

    @property
    def variance(self) -> float:
        if self.shape <= 2:
            return math.inf
        return self.scale**2 / ((self.shape - 1.0) ** 2 * (self.shape - 2.0))


@dataclass(frozen=True)
class GammaParams:
    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0 and self.scale > 0):
            raise DomainError(
                f"gamma needs shape > 0 and scale > 0, got {self.shape}, {self.scale}",
                module="rand",
            )

    @property
    def mean(self) -> float:
        return self.shape * self.scale


def normal_quantile_factor(alpha: float) -> float:
    """Upper-tail standard Normal quantile, ``sqrt(2) * erfcinv(2 * alpha)``.

    Accepts ``0 < alpha <= 0.5``; ``alpha = 0.5`` gives 0.
    """
    alpha = float(alpha)
    if not (0.0 < alpha <= 0.5):
        raise DomainError(f"alpha must lie in (0, 0.5], got {alpha}", module="rand")
    # + 0.0 folds the -0.0 produced at alpha = 0.5
    return float(-ndtri(alpha)) + 0.0


def sample_normal(mean: float, variance: float, rng: RngState) -> float:
    if not variance >= 0:
        raise DomainError(f"variance must be nonnegative, got {variance}", module="rand")
    return mean + math.sqrt(variance) * rng.standard_normal()


def sample_gamma(p: GammaParams, rng: RngState) -> float:
    return p.scale * rng.standard_gamma(p.shape)


def sample_inverse_gamma(p: InverseGammaParams, rng: RngState) -> float:
    """Draw ``scale / G`` with ``G ~ Gamma(shape, 1)``."""
    return p.scale / rng.standard_gamma(p.shape)
