"""Per-hop BGP update times and SDN cluster dissemination latency.

A time model is one of four immutable variants (:class:`Exponential`,
:class:`Uniform`, :class:`Deterministic`, :class:`Empirical`).  All of them
expose ``mean()`` and ``sample(rng, size=None)``; the module-level
:func:`sample` and :func:`mean` dispatch to those methods.

Random streams are :class:`numpy.random.Generator` objects backed by PCG64,
seeded explicitly via :func:`make_rng`.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import DomainError, EmptyObservations


def make_rng(seed, *stream) -> np.random.Generator:
    """PCG64 generator for ``seed`` and an optional stream index path."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(int, stream)])))


@dataclass(frozen=True)
class Exponential:
    rate: float

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError(f"exponential rate must be > 0, got {self.rate}")

    def mean(self) -> float:
        return 1.0 / self.rate

    def sample(self, rng, size=None):
        return rng.exponential(1.0 / self.rate, size)


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0 <= self.lo < self.hi):
            raise DomainError(f"uniform needs 0 <= lo < hi, got [{self.lo}, {self.hi}]")

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def sample(self, rng, size=None):
        return rng.uniform(self.lo, self.hi, size)


@dataclass(frozen=True)
class Deterministic:
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise DomainError(f"deterministic time must be >= 0, got {self.value}")

    def mean(self) -> float:
        return float(self.value)

    def sample(self, rng, size=None):
        if size is None:
            return float(self.value)
        return np.full(size, float(self.value))


@dataclass(frozen=True)
class Empirical:
    """Bootstrap resampling (uniform, with replacement) of stored times."""

    samples: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.samples)
        if not values:
            raise DomainError("empirical model needs at least one sample")
        if min(values) < 0:
            raise DomainError("empirical samples must be >= 0")
        object.__setattr__(self, "samples", values)

    def mean(self) -> float:
        return float(np.mean(self.samples))

    def sample(self, rng, size=None):
        values = np.asarray(self.samples)
        idx = rng.integers(0, len(values), size)
        return values[idx] if size is not None else float(values[idx])


TimeModel = Union[Exponential, Uniform, Deterministic, Empirical]

#: Default SDN cluster latency: members are informed instantly.
INSTANT = Deterministic(0.0)


def sample(model: TimeModel, rng, size=None):
    return model.sample(rng, size)


def mean(model: TimeModel) -> float:
    return model.mean()


@dataclass(frozen=True)
class PathObservation:
    """Measured end-to-end update delay ``t_sd`` over an AS path of ``d`` hops."""

    t_sd: float
    d: int

    def __post_init__(self):
        if self.d < 1 or self.t_sd < 0:
            raise DomainError(f"invalid observation (t_sd={self.t_sd}, d={self.d})")


def estimate_mean_update_time(observations: Sequence[PathObservation]) -> float:
    """Total delay divided by total hop count."""
    if len(observations) == 0:
        raise EmptyObservations("no observations to fit")
    total_t = sum(o.t_sd for o in observations)
    total_d = sum(o.d for o in observations)
    return total_t / total_d


def fit_exponential(observations: Sequence[PathObservation]) -> Exponential:
    """Exponential per-hop model whose mean is the pooled per-hop delay.

    >>> fit_exponential([PathObservation(2, 1), PathObservation(4, 2)])
    Exponential(rate=0.5)
    """
    return Exponential(1.0 / estimate_mean_update_time(observations))


def read_observations_csv(path) -> list[PathObservation]:
    with open(path, newline="") as fh:
        rows = csv.DictReader(line for line in fh if not line.startswith("#"))
        return [PathObservation(float(r["t_sd"]), int(r["d"])) for r in rows]


def write_observations_csv(path, observations: Iterable[PathObservation]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_sd", "d"])
        for o in observations:
            w.writerow([repr(float(o.t_sd)), o.d])


def to_dict(model: TimeModel) -> dict:
    if isinstance(model, Exponential):
        return {"variant": "exponential", "rate": model.rate}
    if isinstance(model, Uniform):
        return {"variant": "uniform", "lo": model.lo, "hi": model.hi}
    if isinstance(model, Deterministic):
        return {"variant": "deterministic", "value": model.value}
    if isinstance(model, Empirical):
        return {"variant": "empirical", "samples": list(model.samples)}
    raise TypeError(f"not a time model: {model!r}")


def from_dict(data: dict) -> TimeModel:
    variant = data.get("variant")
    if variant == "exponential":
        if "rate" not in data and "mean" in data:
            return Exponential(1.0 / float(data["mean"]))
        return Exponential(float(data["rate"]))
    if variant == "uniform":
        return Uniform(float(data["lo"]), float(data["hi"]))
    if variant == "deterministic":
        return Deterministic(float(data["value"]))
    if variant == "empirical":
        return Empirical(tuple(data["samples"]))
    raise DomainError(f"unknown time model variant {variant!r}")


def to_json(model: TimeModel) -> str:
    return json.dumps(to_dict(model))


def from_json(text: str) -> TimeModel:
    return from_dict(json.loads(text))
