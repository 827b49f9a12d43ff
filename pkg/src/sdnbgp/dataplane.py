"""Bounds on the expected data-plane connectivity time of an SD-path.

An SD-path of length ``d`` has ``d + 1`` nodes, ``k'`` of which belong to the
SDN cluster.  :func:`lb` and :func:`ub` bound ``E[T_SD | d, k']`` in units of
the mean per-hop update time.  The number of cluster members on a path is
modelled either as hypergeometric (cluster chosen independently of the
topology) or as Fisher's noncentral hypergeometric with odds ratio
``omega`` (cluster biased towards central nodes).

All combinatorics run in log-space so that populations of tens of thousands
of ASes do not overflow.
"""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

import numpy as np
from scipy.special import gammaln

from .errors import DegenerateProfile, DomainError, EmptySample


def _check_kprime(d: int, kprime: int) -> None:
    if d < 1:
        raise DomainError(f"path length must be >= 1, got {d}")
    if not 0 <= kprime <= d + 1:
        raise DomainError(f"k' must lie in [0, {d + 1}], got {kprime}")


def lb(d: int, kprime: int) -> float:
    """Lower bound factor on ``E[T_SD | d, k'] / E[T_bgp]``."""
    _check_kprime(d, kprime)
    if kprime >= d:
        return 0.0
    return d / (kprime + 1)


def ub(d: int, kprime: int) -> float:
    """Upper bound factor on ``E[T_SD | d, k'] / E[T_bgp]``."""
    _check_kprime(d, kprime)
    if kprime >= 2:
        return float(d - kprime + 1)
    return float(d)


def lb_vector(d: int) -> np.ndarray:
    """``lb(d, i)`` for ``i = 0 .. d+1``."""
    return np.array([lb(d, i) for i in range(d + 2)])


def ub_vector(d: int) -> np.ndarray:
    return np.array([ub(d, i) for i in range(d + 2)])


def _logcomb(n, r):
    n = np.asarray(n, dtype=float)
    r = np.asarray(r, dtype=float)
    return gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1)


@dataclass(frozen=True)
class Hypergeometric:
    """k' for ``d + 1`` draws from ``N`` nodes of which ``k`` are in the cluster."""

    N: int
    k: int

    def __post_init__(self):
        if self.N < 1 or not 0 <= self.k <= self.N:
            raise DomainError(f"invalid population (N={self.N}, k={self.k})")

    @property
    def omega(self) -> float:
        return 1.0

    def pmf(self, d: int) -> np.ndarray:
        """Probabilities of ``k' = 0 .. d+1`` on a path of length ``d``."""
        return _kprime_pmf(self.N, self.k, d, 1.0)


@dataclass(frozen=True)
class FisherNoncentral:
    """Hypergeometric draws weighted by ``omega ** k'``."""

    N: int
    k: int
    omega: float

    def __post_init__(self):
        if self.N < 1 or not 0 <= self.k <= self.N:
            raise DomainError(f"invalid population (N={self.N}, k={self.k})")
        if not self.omega > 0:
            raise DomainError(f"odds ratio must be > 0, got {self.omega}")

    def pmf(self, d: int) -> np.ndarray:
        return _kprime_pmf(self.N, self.k, d, self.omega)


KPrimeDistribution = Union[Hypergeometric, FisherNoncentral]


def _kprime_pmf(N: int, k: int, d: int, omega: float) -> np.ndarray:
    if d < 1:
        raise DomainError(f"path length must be >= 1, got {d}")
    draws = d + 1
    if draws > N:
        raise DomainError(f"path with {draws} nodes does not fit in N={N}")
    i = np.arange(draws + 1)
    feasible = (i <= k) & (draws - i <= N - k)
    out = np.zeros(draws + 1)
    fi = i[feasible]
    logw = _logcomb(k, fi) + _logcomb(N - k, draws - fi) + fi * np.log(omega)
    logw -= logw.max()
    w = np.exp(logw)
    out[feasible] = w / w.sum()
    return out


def kprime_pmf(dist: KPrimeDistribution, d: int, i: int) -> float:
    """``P{k' = i | d}``; zero outside ``[0, d+1]``."""
    p = dist.pmf(d)
    if not 0 <= i < len(p):
        return 0.0
    return float(p[i])


def tsd_bounds_given_d(d: int, dist: KPrimeDistribution, mu_bgp: float = 1.0) -> tuple[float, float]:
    """(lower, upper) bound on ``E[T_SD | d]`` averaged over k'."""
    if not mu_bgp > 0:
        raise DomainError(f"mean update time must be > 0, got {mu_bgp}")
    p = dist.pmf(d)
    return float(lb_vector(d) @ p) * mu_bgp, float(ub_vector(d) @ p) * mu_bgp


@dataclass(frozen=True)
class PathLengthDistribution:
    """Probability mass over SD-path lengths ``d >= 1``."""

    probs: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        probs = {int(d): float(p) for d, p in dict(self.probs).items() if p > 0}
        if not probs:
            raise EmptySample("path-length distribution is empty")
        if min(probs) < 1:
            raise DomainError("path lengths must be >= 1")
        if min(probs.values()) < 0:
            raise DomainError("negative probability")
        total = sum(probs.values())
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"probabilities sum to {total}, not 1")
        object.__setattr__(self, "probs", dict(sorted(probs.items())))

    @classmethod
    def point(cls, d: int) -> "PathLengthDistribution":
        return cls({d: 1.0})

    @classmethod
    def from_counts(cls, counts: Mapping[int, float]) -> "PathLengthDistribution":
        counts = {int(d): float(c) for d, c in counts.items() if c > 0}
        total = sum(counts.values())
        if total <= 0:
            raise EmptySample("no path lengths to count")
        return cls({d: c / total for d, c in counts.items()})

    @classmethod
    def from_lengths(cls, lengths: Iterable[int]) -> "PathLengthDistribution":
        return cls.from_counts(Counter(int(d) for d in lengths))

    @property
    def support(self) -> list[int]:
        return list(self.probs)

    def mean(self) -> float:
        return sum(d * p for d, p in self.probs.items())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["d", "probability"])
            for d, p in self.probs.items():
                w.writerow([d, repr(p)])

    @classmethod
    def from_csv(cls, path) -> "PathLengthDistribution":
        with open(path, newline="") as fh:
            rows = csv.DictReader(line for line in fh if not line.startswith("#"))
            return cls.from_counts({int(r["d"]): float(r["probability"]) for r in rows})


def tsd_bounds(path_dist: PathLengthDistribution, dist: KPrimeDistribution,
               mu_bgp: float = 1.0) -> tuple[float, float]:
    """(lower, upper) bound on ``E[T_SD]`` mixed over path lengths."""
    lower = upper = 0.0
    for d, p in path_dist.probs.items():
        lo, hi = tsd_bounds_given_d(d, dist, mu_bgp)
        lower += p * lo
        upper += p * hi
    return lower, upper


def normalized_bounds(path_dist: PathLengthDistribution, dist: KPrimeDistribution) -> tuple[float, float]:
    """Bounds divided by the no-centralization value ``E[d] * E[T_bgp]``."""
    lower, upper = tsd_bounds(path_dist, dist, 1.0)
    base = path_dist.mean()
    return lower / base, upper / base


@dataclass(frozen=True)
class CentralityProfile:
    """Per-node betweenness scores, indexed by dense node id."""

    values: np.ndarray
    backend: str = "exact"

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or (v < 0).any():
            raise DomainError("centrality values must be a 1-d array of non-negative numbers")
        object.__setattr__(self, "values", v)

    def __len__(self):
        return len(self.values)

    def group_means(self, cluster) -> tuple[float, float]:
        """Mean centrality inside and outside ``cluster``."""
        mask = np.zeros(len(self.values), dtype=bool)
        mask[np.asarray(list(cluster), dtype=int)] = True
        n_in = int(mask.sum())
        if n_in == 0 or n_in == len(mask):
            raise DegenerateProfile("cluster must be a nonempty proper subset of the nodes")
        return float(self.values[mask].mean()), float(self.values[~mask].mean())


def omega_ratio(profile: CentralityProfile, cluster) -> float:
    """Mean betweenness of the cluster over mean betweenness of the rest."""
    w_sdn, w_bgp = profile.group_means(cluster)
    if w_bgp <= 0:
        raise DegenerateProfile("non-cluster nodes have zero mean centrality")
    if w_sdn <= 0:
        raise DegenerateProfile("cluster nodes have zero mean centrality")
    return w_sdn / w_bgp
