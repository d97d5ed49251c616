"""Partitions of time indices, product-partition prior weights and summaries.

Indices are 0-based.  A :class:`Partition` is stored in canonical form: each
cluster is a sorted tuple and clusters are ordered by their smallest member,
so two equal partitions compare and hash equal.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, UsageError

_MAX_BELL = 25


@dataclass(frozen=True)
class Partition:
    clusters: tuple[tuple[int, ...], ...]
    T: int

    def __post_init__(self):
        seen = set()
        for cl in self.clusters:
            if not cl:
                raise DomainError("empty cluster in partition", module="partition")
            for t in cl:
                if t in seen:
                    raise DomainError(f"index {t} appears in two clusters", module="partition")
                seen.add(t)
        if seen != set(range(self.T)) or self.T < 1:
            raise DomainError("clusters do not cover 0..T-1", module="partition")

    @classmethod
    def from_clusters(cls, clusters: Iterable[Iterable[int]], T: int) -> "Partition":
        cl = [tuple(sorted(int(t) for t in c)) for c in clusters]
        cl = [c for c in cl if c]
        cl.sort(key=lambda c: c[0])
        return cls(tuple(cl), int(T))

    @classmethod
    def from_labels(cls, labels: Sequence[int]) -> "Partition":
        groups: dict[int, list[int]] = {}
        for t, lab in enumerate(labels):
            groups.setdefault(int(lab), []).append(t)
        return cls.from_clusters(groups.values(), len(labels))

    @classmethod
    def trivial(cls, T: int) -> "Partition":
        return cls((tuple(range(T)),), T)

    @classmethod
    def singletons(cls, T: int) -> "Partition":
        return cls(tuple((t,) for t in range(T)), T)

    def __len__(self) -> int:
        return len(self.clusters)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.clusters)

    @property
    def is_trivial(self) -> bool:
        return len(self.clusters) == 1

    def labels(self) -> np.ndarray:
        """Cluster label per index, labels numbered in canonical order."""
        out = np.empty(self.T, dtype=np.intp)
        for d, cl in enumerate(self.clusters):
            out[list(cl)] = d
        return out

    def __str__(self) -> str:
        return "{" + ", ".join("{" + ",".join(map(str, c)) + "}" for c in self.clusters) + "}"


def cohesion(c: float, cluster_size: int) -> float:
    """``c * (size - 1)!``; sizes above 20 go through log-gamma."""
    if cluster_size < 1:
        raise DomainError(f"cluster size must be >= 1, got {cluster_size}", module="partition")
    if not c > 0:
        raise DomainError(f"c must be positive, got {c}", module="partition")
    if cluster_size <= 20:
        return c * math.factorial(cluster_size - 1)
    return math.exp(math.log(c) + math.lgamma(cluster_size))


def log_cohesion(c: float, cluster_size: int) -> float:
    if cluster_size < 1:
        raise DomainError(f"cluster size must be >= 1, got {cluster_size}", module="partition")
    return math.log(c) + math.lgamma(cluster_size)


def log_prior_weight(p: Partition, c: float) -> float:
    """Unnormalised log product-partition prior, ``sum_d log C(S_d)``."""
    return sum(log_cohesion(c, n) for n in p.sizes)


def from_values(values: Sequence[float], tol: float = 0.0) -> Partition:
    """Group indices that share a parameter value.

    With ``tol = 0`` grouping is by exact equality.  Otherwise each index joins
    the first cluster whose representative (its first member's value) lies
    within ``tol``.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 1:
        raise UsageError("values must be a nonempty 1-D sequence", module="partition")
    if tol == 0:
        _, labels = np.unique(values, return_inverse=True)
        return Partition.from_labels(labels.ravel())
    reps: list[float] = []
    labels = []
    for v in values:
        for d, r in enumerate(reps):
            if abs(v - r) <= tol:
                labels.append(d)
                break
        else:
            reps.append(v)
            labels.append(len(reps) - 1)
    return Partition.from_labels(labels)


@dataclass(frozen=True)
class ClusterStats:
    mean_cluster_count: float
    largest_cluster_weight: float


def cluster_stats(partitions: Sequence[Partition]) -> ClusterStats:
    if len(partitions) == 0:
        raise UsageError("cluster_stats needs at least one partition", module="partition")
    counts = [len(p) for p in partitions]
    largest = [max(p.sizes) / p.T for p in partitions]
    return ClusterStats(float(np.mean(counts)), float(np.mean(largest)))


def partition_frequencies(partitions: Iterable[Partition]) -> list[tuple[Partition, float]]:
    """Relative frequency of each distinct partition, most frequent first.

    Ties keep first-seen order (Counter preserves insertion order).
    """
    counts = Counter(partitions)
    total = sum(counts.values())
    return [(p, n / total) for p, n in counts.most_common()]


def bell_number(T: int) -> int:
    """Number of set partitions of T elements via B(n+1) = sum_k C(n,k) B(k)."""
    if T < 0:
        raise DomainError(f"T must be nonnegative, got {T}", module="partition")
    if T > _MAX_BELL:
        raise DomainError(f"bell_number supports T <= {_MAX_BELL}, got {T}", module="partition")
    bell = [1]
    for n in range(T):
        bell.append(sum(math.comb(n, k) * bell[k] for k in range(n + 1)))
    return bell[T]
