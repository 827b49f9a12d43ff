"""Monte-Carlo propagation of one announcement over an AS graph with an SDN cluster.

Each trial draws independent per-hop update times, propagates the update
from a source, and records when every node first holds it.  When the first
cluster member is reached at ``t*``, every member holds the update by
``t* + T_sdn`` and forwards it from then on.

Three forwarding rules are available:

``tree``
    A node installs the route only from its best next hop towards the source
    (policy routing tree on labeled graphs, lowest-id BFS tree otherwise),
    or from the controller.
``dag``
    A node accepts the update from any predecessor on a shortest path from
    the source.
``flood``
    A node accepts the update from any neighbor.

Data-plane connectivity of destination ``D`` is measured on its routing
tree path: ``T_SD`` is the latest reception time among the path's nodes.
"""
from __future__ import annotations

import csv
import heapq
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DisconnectedSource, DomainError
from .timemodel import INSTANT, Exponential, TimeModel, make_rng
from .topology import AsGraph, RoutingTree, routing_tree, shortest_paths

MODES = ("tree", "dag", "flood")


@dataclass
class Scenario:
    """Everything needed to run a batch of trials.

    ``source=None`` draws a uniformly random source per trial.  With
    ``per_node_draws`` each node draws one update time that it uses towards
    all its neighbors; otherwise every transmission draws its own.
    """

    graph: AsGraph
    cluster: Sequence[int] = ()
    bgp_model: TimeModel = Exponential(1.0)
    sdn_model: TimeModel = INSTANT
    mode: str = "tree"
    source: Optional[int] = None
    trials: int = 1
    seed: int = 0
    ells: Sequence[int] = ()
    per_node_draws: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.mode not in MODES:
            raise DomainError(f"unknown routing mode {self.mode!r}; pick one of {MODES}")
        if self.trials < 1:
            raise DomainError("trials must be >= 1")
        self.cluster = np.unique(np.asarray(self.cluster, dtype=np.int64))
        if len(self.cluster) and (self.cluster[0] < 0 or self.cluster[-1] >= self.graph.n):
            raise DomainError("cluster members must be graph nodes")
        if self.source is not None and not 0 <= self.source < self.graph.n:
            raise DomainError(f"source {self.source} is not a node")
        self.ells = tuple(int(l) for l in self.ells)
        if any(l < 1 or l > self.graph.n for l in self.ells):
            raise DomainError(f"ell values must lie in [1, N={self.graph.n}]")

    def with_cluster(self, cluster) -> "Scenario":
        """Same scenario (sharing routing caches) with a different cluster."""
        other = Scenario(self.graph, cluster, self.bgp_model, self.sdn_model, self.mode,
                         self.source, self.trials, self.seed, self.ells, self.per_node_draws)
        other._cache = self._cache
        return other


@dataclass
class _Routes:
    tree: RoutingTree
    levels: list            # per depth: node ids at that depth (tree order)
    edge_src: np.ndarray    # forwarding edges, grouped by target depth for tree/dag
    edge_dst: np.ndarray
    edge_levels: list       # per depth: slice into edge arrays


def _build_routes(graph: AsGraph, source: int, mode: str) -> _Routes:
    tree = routing_tree(graph, source)
    depth = tree.dist
    reach = np.flatnonzero(depth >= 0)
    maxd = int(depth[reach].max()) if len(reach) else 0
    levels = [np.flatnonzero(depth == d) for d in range(maxd + 1)]
    if mode == "tree":
        child = reach[depth[reach] > 0]
        src, dst = tree.next_hop[child], child
    elif mode == "dag":
        if graph.is_labeled:
            raise DomainError("dag mode is only defined on unlabeled graphs")
        sp = shortest_paths(graph, source)
        src, dst = sp.dag_src, sp.dag_dst
    else:
        src = np.concatenate([np.full(len(graph.neighbors(u)), u) for u in range(graph.n)] or [np.zeros(0)])
        dst = np.concatenate([graph.neighbors(u) for u in range(graph.n)] or [np.zeros(0)])
        src, dst = src.astype(np.int64), dst.astype(np.int64)
        return _Routes(tree, levels, src, dst, [])
    order = np.argsort(depth[dst], kind="stable")
    src, dst = src[order], dst[order]
    bounds = np.searchsorted(depth[dst], np.arange(maxd + 2))
    edge_levels = [slice(bounds[d], bounds[d + 1]) for d in range(maxd + 1)]
    return _Routes(tree, levels, src, dst, edge_levels)


def _routes(scenario: Scenario, source: int) -> _Routes:
    key = (scenario.mode, source)
    if key not in scenario._cache:
        scenario._cache[key] = _build_routes(scenario.graph, source, scenario.mode)
    return scenario._cache[key]


@dataclass
class PropagationTrace:
    """Outcome of one trial.

    ``times[v]`` is ``inf`` for nodes that never receive the update.
    ``tsd``, ``path_len`` and ``kprime`` are per-destination (``-1``/nan for
    the source and unreachable nodes).
    """

    source: int
    times: np.ndarray
    cluster_arrival: float
    tsd: np.ndarray
    path_len: np.ndarray
    kprime: np.ndarray

    @property
    def reached(self) -> np.ndarray:
        return np.isfinite(self.times)

    @property
    def sorted_times(self) -> np.ndarray:
        return np.sort(self.times[self.reached])

    @property
    def unreached(self) -> int:
        return int((~self.reached).sum())

    def t_partial(self, ell: int) -> float:
        """Time until ``ell`` nodes hold the update (nan if fewer are reachable)."""
        st = self.sorted_times
        return float(st[ell - 1]) if ell <= len(st) else math.nan

    @property
    def t_c(self) -> float:
        return float(self.sorted_times[-1])

    def dump(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "time", "tsd", "d", "kprime"])
            for v in range(len(self.times)):
                w.writerow([v, repr(float(self.times[v])), repr(float(self.tsd[v])),
                            int(self.path_len[v]), int(self.kprime[v])])


def _edge_delays(scenario: Scenario, routes: _Routes, rng) -> np.ndarray:
    if scenario.per_node_draws:
        node_delay = np.asarray(scenario.bgp_model.sample(rng, scenario.graph.n), dtype=float)
        return node_delay[routes.edge_src]
    return np.asarray(scenario.bgp_model.sample(rng, len(routes.edge_src)), dtype=float)


def _propagate_levels(routes, w, n, source, start):
    """Earliest arrival when every forwarding edge goes one level deeper."""
    t = start.copy()
    t[source] = 0.0
    for sl in routes.edge_levels[1:]:
        cand = t[routes.edge_src[sl]] + w[sl]
        np.minimum.at(t, routes.edge_dst[sl], cand)
    return t


def _propagate_heap(routes, w, n, start):
    # adjacency from the flat edge list, built once per call
    order = np.argsort(routes.edge_src, kind="stable")
    src, dst, wt = routes.edge_src[order], routes.edge_dst[order], w[order]
    ptr = np.searchsorted(src, np.arange(n + 1))
    t = start.copy()
    heap = [(float(t[v]), int(v)) for v in np.flatnonzero(np.isfinite(t))]
    heapq.heapify(heap)
    done = np.zeros(n, dtype=bool)
    while heap:
        tu, u = heapq.heappop(heap)
        if done[u]:
            continue
        done[u] = True
        for j in range(ptr[u], ptr[u + 1]):
            v = dst[j]
            tv = tu + wt[j]
            if tv < t[v]:
                t[v] = tv
                heapq.heappush(heap, (tv, int(v)))
    return t


def trial_source(scenario: Scenario, trial_index: int) -> int:
    if scenario.source is not None:
        return int(scenario.source)
    return int(make_rng(scenario.seed, trial_index, 0).integers(scenario.graph.n))


def run_trial(scenario: Scenario, trial_index: int = 0) -> PropagationTrace:
    """Propagate one announcement; deterministic in ``(seed, trial_index)``.

    Per-hop delays come from a stream that does not depend on the cluster,
    so runs that differ only in their cluster see identical hop delays.
    """
    n = scenario.graph.n
    source = trial_source(scenario, trial_index)
    routes = _routes(scenario, source)
    w = _edge_delays(scenario, routes, make_rng(scenario.seed, trial_index, 1))
    t_sdn = float(scenario.sdn_model.sample(make_rng(scenario.seed, trial_index, 2)))

    start = np.full(n, np.inf)
    start[source] = 0.0
    if scenario.mode == "flood":
        first = _propagate_heap(routes, w, n, start)
    else:
        first = _propagate_levels(routes, w, n, source, start)
    if not np.isfinite(np.delete(first, source)).any():
        raise DisconnectedSource(f"nothing reachable from source {source}")

    cluster = scenario.cluster
    t_star = float(first[cluster].min()) if len(cluster) else math.inf
    if math.isfinite(t_star):
        start[cluster] = np.minimum(start[cluster], t_star + t_sdn)
        start[source] = 0.0
        if scenario.mode == "flood":
            times = _propagate_heap(routes, w, n, start)
        else:
            times = _propagate_levels(routes, w, n, source, start)
    else:
        times = first

    tsd, plen, kp = _path_stats(routes, times, cluster, n, source)
    return PropagationTrace(source, times, t_star, tsd, plen, kp)


def _path_stats(routes: _Routes, times, cluster, n, source):
    in_cluster = np.zeros(n, dtype=np.int64)
    in_cluster[cluster] = 1
    tree = routes.tree
    tsd = np.full(n, np.nan)
    plen = np.where(tree.dist >= 0, tree.dist, -1)
    kp = -np.ones(n, dtype=np.int64)
    tsd[source] = times[source]
    kp[source] = in_cluster[source]
    for lvl in routes.levels[1:]:
        par = tree.next_hop[lvl]
        tsd[lvl] = np.maximum(tsd[par], times[lvl])
        kp[lvl] = kp[par] + in_cluster[lvl]
    tsd[source] = np.nan
    plen[source] = -1
    kp[source] = -1
    return tsd, plen, kp


# --------------------------------------------------------------------------
# aggregation

@dataclass
class Moments:
    """Streaming count / mean / sum of squared deviations; merge is commutative."""

    count: int = 0
    mean: float = 0.0
    m2: float = 0.0

    def add_many(self, values) -> None:
        values = np.asarray(values, dtype=float)
        if len(values) == 0:
            return
        other = Moments(len(values), float(values.mean()), float(((values - values.mean()) ** 2).sum()))
        self.merge(other)

    def merge(self, other: "Moments") -> None:
        if other.count == 0:
            return
        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean += delta * other.count / n
        self.m2 += other.m2 + delta ** 2 * self.count * other.count / n
        self.count = n

    @property
    def std(self) -> float:
        return math.sqrt(self.m2 / (self.count - 1)) if self.count > 1 else 0.0

    @property
    def se(self) -> float:
        return self.std / math.sqrt(self.count) if self.count > 0 else math.nan


@dataclass
class ClusteredMoments(Moments):
    """Moments of values pooled from several trials, plus per-trial sums.

    :attr:`se` treats every value as independent.  :meth:`clustered_se`
    treats trials as the independent units, which is the right error bar
    when values within one trial are correlated (destinations sharing a
    path prefix share its hop delays).
    """

    sq_sums: float = 0.0    # sum over trials of (trial sum)^2
    cross: float = 0.0      # sum over trials of trial sum * trial count
    sq_counts: float = 0.0  # sum over trials of (trial count)^2

    def add_trial(self, values) -> None:
        values = np.asarray(values, dtype=float)
        s, n = float(values.sum()), len(values)
        self.sq_sums += s * s
        self.cross += s * n
        self.sq_counts += n * n
        self.add_many(values)

    def merge(self, other: "Moments") -> None:
        if isinstance(other, ClusteredMoments):
            self.sq_sums += other.sq_sums
            self.cross += other.cross
            self.sq_counts += other.sq_counts
        super().merge(other)

    def clustered_se(self, trials: int) -> float:
        if self.count == 0 or trials < 2:
            return math.nan
        m = self.mean
        resid = max(self.sq_sums - 2 * m * self.cross + m * m * self.sq_counts, 0.0)
        return math.sqrt(trials / (trials - 1) * resid) / self.count


@dataclass
class SummaryStats:
    """Aggregates over trials.

    ``buckets[(d, k')]`` pools T_SD over all destinations of all trials and
    ``by_d[d]`` pools over k'; both are :class:`ClusteredMoments`.
    """

    seed: int
    trials: int
    buckets: dict = field(default_factory=dict)
    by_d: dict = field(default_factory=dict)
    t_c: Moments = field(default_factory=Moments)
    t_ell: dict = field(default_factory=dict)
    unreached: int = 0

    def bucket_rows(self):
        for (d, kp), m in sorted(self.buckets.items()):
            yield d, kp, m.count, m.mean, m.se, m.clustered_se(self.trials)

    def to_json(self) -> str:
        def mom(m):
            out = {"count": m.count, "mean": m.mean, "se": m.se}
            if isinstance(m, ClusteredMoments):
                out["se_trials"] = m.clustered_se(self.trials)
            return out
        return json.dumps({
            "seed": self.seed,
            "trials": self.trials,
            "unreached": self.unreached,
            "t_c": mom(self.t_c),
            "t_ell": {str(l): mom(m) for l, m in sorted(self.t_ell.items())},
            "buckets": [{"d": d, "kprime": kp, **mom(m)} for (d, kp), m in sorted(self.buckets.items())],
            "by_d": {str(d): mom(m) for d, m in sorted(self.by_d.items())},
        }, indent=2, sort_keys=True)

    def write_buckets_csv(self, path, header: str = "") -> None:
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(f"# {header}\n")
            w = csv.writer(fh)
            w.writerow(["bucket_d", "bucket_kprime", "count", "mean", "se", "se_trials"])
            for d, kp, c, m, se, se_t in self.bucket_rows():
                w.writerow([d, kp, c, repr(m), repr(se), repr(se_t)])


def run_monte_carlo(scenario: Scenario, collect_buckets: bool = True) -> SummaryStats:
    """Run ``scenario.trials`` trials and aggregate them."""
    stats = SummaryStats(scenario.seed, scenario.trials)
    for l in scenario.ells:
        stats.t_ell[l] = Moments()
    for trial in range(scenario.trials):
        tr = run_trial(scenario, trial)
        stats.unreached += tr.unreached
        stats.t_c.add_many([tr.t_c])
        for l in scenario.ells:
            val = tr.t_partial(l)
            if not math.isnan(val):
                stats.t_ell[l].add_many([val])
        if not collect_buckets:
            continue
        ok = tr.path_len > 0
        d, kp, tsd = tr.path_len[ok], tr.kprime[ok], tr.tsd[ok]
        key = d * (len(tr.times) + 2) + kp
        order = np.argsort(key, kind="stable")
        key, d, kp, tsd = key[order], d[order], kp[order], tsd[order]
        cuts = np.flatnonzero(np.diff(key)) + 1
        for seg_d, seg_k, seg in zip(np.split(d, cuts), np.split(kp, cuts), np.split(tsd, cuts)):
            b = (int(seg_d[0]), int(seg_k[0]))
            stats.buckets.setdefault(b, ClusteredMoments()).add_trial(seg)
        dcuts = np.flatnonzero(np.diff(d)) + 1
        for seg_d, seg in zip(np.split(d, dcuts), np.split(tsd, dcuts)):
            stats.by_d.setdefault(int(seg_d[0]), ClusteredMoments()).add_trial(seg)
    return stats


@dataclass
class SweepRow:
    k: int
    ell: object  # int, or "c" for full convergence
    mean: float
    se: float
    ratio: float
    ratio_se: float


def _ratio(m, se, m0, se0):
    if m0 == 0:
        return math.nan, math.nan
    r = m / m0
    rel = math.hypot(se / m if m else 0.0, se0 / m0)
    return r, abs(r) * rel


def normalized_sweep(base: Scenario, k_values: Sequence[int], select, collect_buckets: bool = False):
    """Run the no-cluster baseline and one run per ``k``; return ratios to the baseline.

    ``select(k)`` returns the cluster node set for size ``k``.  All runs use
    the same seed, so hop delays are shared between them.

    Returns ``(rows, stats)`` with ``rows`` a list of :class:`SweepRow` and
    ``stats`` a dict ``k -> SummaryStats`` (``k = 0`` is the baseline).
    """
    if len(k_values) == 0:
        raise DomainError("k_values must be nonempty")
    stats = {0: run_monte_carlo(base.with_cluster(()), collect_buckets)}
    for k in k_values:
        if k not in stats:
            stats[k] = run_monte_carlo(base.with_cluster(select(k) if k > 0 else ()), collect_buckets)
    return sweep_rows(stats, k_values, base.ells), stats


def sweep_rows(stats: dict, k_values, ells) -> list[SweepRow]:
    base = stats[0]
    rows = []
    for k in k_values:
        s = stats[k]
        for l in list(ells) + ["c"]:
            m, m0 = (s.t_c, base.t_c) if l == "c" else (s.t_ell[l], base.t_ell[l])
            r, rse = _ratio(m.mean, m.se, m0.mean, m0.se)
            if k == 0:
                r, rse = 1.0, 0.0
            rows.append(SweepRow(int(k), l, m.mean, m.se, r, rse))
    return rows


def tsd_ratio_by_d(stats: dict, k: int, d: int) -> float:
    """``E[T_SD | d, k] / E[T_SD | d, k=0]`` from a sweep's stats."""
    return stats[k].by_d[d].mean / stats[0].by_d[d].mean


def write_sweep_csv(rows: Sequence[SweepRow], path, header: str = "") -> None:
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh)
        w.writerow(["k", "ell", "mean", "se", "ratio"])
        for r in rows:
            w.writerow([r.k, r.ell, repr(r.mean), repr(r.se), repr(r.ratio)])
