"""Control-plane convergence of a single announcement under partial centralization.

The announcement spreads as a pure-birth Markov chain: at step ``i`` the
number of updated nodes is ``n(i|x)``, where ``x`` is the step at which the
SDN cluster (collapsed into one node) is reached, and the chain leaves step
``i`` at rate ``lam * D(i|x)``.  ``D`` is the bgp-degree: exact for a full
mesh, or its expectation in a G(N, p) random graph.

Every quantity is a mixture over ``x`` weighted by :func:`p_sdn`.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional, Union

import numpy as np

from .errors import DegenerateDegree, DomainError

log = logging.getLogger(__name__)

#: x-sums are truncated for N above this once the remaining P_sdn mass < TAIL_TOL.
TRUNCATE_ABOVE_N = 20_000
TAIL_TOL = 1e-12


@dataclass(frozen=True)
class FullMesh:
    def degrees(self, i, x, N, k):
        return degree_fullmesh(i, x, N, k)


@dataclass(frozen=True)
class PoissonGraph:
    p: float

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise DomainError(f"edge probability must lie in (0, 1], got {self.p}")

    def degrees(self, i, x, N, k):
        return degree_poisson_expected(i, x, N, k, self.p)


DegreeModel = Union[FullMesh, PoissonGraph]
DegreeFunction = Callable[[np.ndarray, int, int, int], np.ndarray]


@dataclass(frozen=True)
class ChainScenario:
    N: int
    k: int
    lam: float = 1.0
    degree_model: DegreeModel = FullMesh()

    def __post_init__(self):
        if self.N < 1:
            raise DomainError(f"N must be >= 1, got {self.N}")
        if not 1 <= self.k <= self.N:
            raise DomainError(f"cluster size must lie in [1, N={self.N}], got {self.k}")
        if not self.lam > 0:
            raise DomainError(f"rate must be > 0, got {self.lam}")


def baseline_no_sdn(scenario: ChainScenario) -> ChainScenario:
    """The k=1 chain, which behaves exactly like having no cluster at all."""
    return replace(scenario, k=1)


def chain_scenario(N: int, k: int, lam: float = 1.0, degree_model: DegreeModel = FullMesh()) -> ChainScenario:
    """Like :class:`ChainScenario` but maps a requested ``k = 0`` to ``k = 1``."""
    return ChainScenario(N, max(int(k), 1), lam, degree_model)


def _check_steps(i, x, N, k, lo_i=0):
    i = np.asarray(i)
    if np.any(i < lo_i) or np.any(i > N - k) or not 0 <= x <= N - k:
        raise DomainError(f"step out of range (i={i}, x={x}, N={N}, k={k})")


def n_updated(i, x: int, k: int):
    """Number of updated nodes at chain step ``i`` given cluster-arrival step ``x``."""
    i = np.asarray(i)
    if np.any(i < 0) or x < 0 or k < 1:
        raise DomainError(f"invalid step (i={i}, x={x}, k={k})")
    out = np.where(i <= x, i, i + k - 1)
    return int(out) if out.ndim == 0 else out


def degree_fullmesh(i, x: int, N: int, k: int):
    """Every node without the update is bgp-eligible in a full mesh."""
    _check_steps(i, x, N, k, lo_i=1)
    return N - n_updated(i, x, k)


def degree_poisson_expected(i, x: int, N: int, k: int, p: float):
    """Expected number of non-updated nodes adjacent to the updated set in G(N, p)."""
    if not 0 < p <= 1:
        raise DomainError(f"edge probability must lie in (0, 1], got {p}")
    _check_steps(i, x, N, k, lo_i=1)
    n = np.asarray(n_updated(i, x, k), dtype=float)
    # 1 - (1-p)^n without cancellation for small p
    reach = -np.expm1(n * np.log1p(-p)) if p < 1 else (n > 0).astype(float)
    out = (N - n) * reach
    if np.any(out <= 0):
        raise DegenerateDegree(f"expected bgp-degree is zero (N={N}, k={k}, x={x}, p={p})")
    return float(out) if out.ndim == 0 else out


def p_sdn(x: int, N: int, k: int) -> float:
    """Probability that the cluster is first reached at step ``x``."""
    if k < 1 or k > N or not 0 <= x <= N - k:
        raise DomainError(f"invalid (x={x}, N={N}, k={k})")
    logsurv = sum(math.log1p(-k / (N - j)) for j in range(x)) if x else 0.0
    return k / (N - x) * math.exp(logsurv)


def p_sdn_vector(N: int, k: int) -> np.ndarray:
    """``p_sdn(x)`` for ``x = 0 .. N-k``."""
    if k < 1 or k > N:
        raise DomainError(f"invalid (N={N}, k={k})")
    x = np.arange(N - k + 1)
    remaining = N - x
    # survival before step x: prod_{j<x} (1 - k/(N-j))
    log_stay = np.log1p(-k / remaining[:-1]) if N - k > 0 else np.zeros(0)
    logsurv = np.concatenate([[0.0], np.cumsum(log_stay)])
    return k / remaining * np.exp(logsurv)


def _x_support(N: int, k: int) -> tuple[np.ndarray, np.ndarray]:
    w = p_sdn_vector(N, k)
    xs = np.arange(len(w))
    if N > TRUNCATE_ABOVE_N:
        tail = np.cumsum(w[::-1])[::-1]
        keep = tail > TAIL_TOL
        keep[0] = True
        dropped = float(w[~keep].sum())
        log.info("truncating P_sdn tail: kept %d of %d terms, dropped mass %.3g",
                 int(keep.sum()), len(w), dropped)
        xs, w = xs[keep], w[keep]
    return xs, w


def _degree_fn(scenario: ChainScenario, deg: Optional[DegreeFunction]) -> DegreeFunction:
    if deg is not None:
        return deg
    return scenario.degree_model.degrees


def _degree_row(fn, x, N, k):
    steps = np.arange(1, N - k + 1)
    D = np.asarray(fn(steps, x, N, k), dtype=float)
    if np.any(D <= 0):
        raise DegenerateDegree(f"bgp-degree is zero at x={x}")
    return D


def mgf_tc(theta: float, scenario: ChainScenario, deg: Optional[DegreeFunction] = None) -> float:
    """Moment generating function of the convergence time at ``theta``."""
    N, k, lam = scenario.N, scenario.k, scenario.lam
    if N == k:
        return 1.0
    fn = _degree_fn(scenario, deg)
    total = 0.0
    for x, w in zip(*_x_support(N, k)):
        rate = lam * _degree_row(fn, int(x), N, k)
        if theta >= rate.min():
            raise DomainError(f"theta={theta} outside the convergence region (< {rate.min()})")
        total += w * math.exp(-np.log1p(-theta / rate).sum())
    return total


def _partial_sums(scenario: ChainScenario, deg, limits: Callable[[int], list[int]]) -> np.ndarray:
    N, k = scenario.N, scenario.k
    fn = _degree_fn(scenario, deg)
    acc = None
    for x, w in zip(*_x_support(N, k)):
        x = int(x)
        inv = 1.0 / _degree_row(fn, x, N, k)
        cum = np.concatenate([[0.0], np.cumsum(inv)])
        vals = w * cum[np.asarray(limits(x), dtype=int)]
        acc = vals if acc is None else acc + vals
    return acc / scenario.lam


def expected_tc(scenario: ChainScenario, deg: Optional[DegreeFunction] = None) -> float:
    """Mean time until all N nodes hold the update."""
    if scenario.N == scenario.k:
        return 0.0
    M = scenario.N - scenario.k
    return float(_partial_sums(scenario, deg, lambda x: [M])[0])


def partial_steps(ell: int, x: int, k: int) -> int:
    """Number of chain transitions needed until ``ell`` nodes hold the update."""
    if ell <= x + 1:
        return ell - 1
    if ell <= x + k:
        return x
    return ell - k


def expected_t_partial(ell, scenario: ChainScenario, deg: Optional[DegreeFunction] = None):
    """Mean time until ``ell`` nodes hold the update; ``ell`` may be a sequence."""
    scalar = np.ndim(ell) == 0
    ells = np.atleast_1d(np.asarray(ell, dtype=int))
    if np.any(ells < 1) or np.any(ells > scenario.N):
        raise DomainError(f"ell must lie in [1, N={scenario.N}], got {ell}")
    if scenario.N == scenario.k:
        out = np.zeros(len(ells))
    else:
        k = scenario.k
        out = _partial_sums(scenario, deg, lambda x: [partial_steps(int(l), x, k) for l in ells])
    return float(out[0]) if scalar else out


def _min_rate(scenario: ChainScenario, deg: Optional[DegreeFunction]) -> float:
    N, k = scenario.N, scenario.k
    fn = _degree_fn(scenario, deg)
    return scenario.lam * min(_degree_row(fn, int(x), N, k).min() for x in _x_support(N, k)[0])


def tc_moment(order: int, scenario: ChainScenario, deg: Optional[DegreeFunction] = None,
              h: Optional[float] = None) -> float:
    """``E[T_c ** order]`` (order 1 or 2) from five-point differences of :func:`mgf_tc` at 0."""
    if order not in (1, 2):
        raise DomainError("only the first two moments are supported")
    if scenario.N == scenario.k:
        return 0.0
    if h is None:
        # stay well inside the region where the MGF is finite
        h = 1e-3 * _min_rate(scenario, deg)
    f = {j: mgf_tc(j * h, scenario, deg) for j in (-2, -1, 0, 1, 2)}
    if order == 1:
        return (f[-2] - 8 * f[-1] + 8 * f[1] - f[2]) / (12 * h)
    return (-f[-2] + 16 * f[-1] - 30 * f[0] + 16 * f[1] - f[2]) / (12 * h * h)


def variance_tc(scenario: ChainScenario, deg: Optional[DegreeFunction] = None) -> float:
    m1 = expected_tc(scenario, deg)
    return tc_moment(2, scenario, deg) - m1 ** 2
