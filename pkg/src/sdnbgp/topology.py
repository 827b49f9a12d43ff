"""AS graphs, routing trees and centrality.

:class:`AsGraph` is an immutable undirected graph on dense node ids
``0 .. n-1``.  Optionally every edge carries a business relationship
(customer-to-provider or peer-to-peer) and every node ranks its neighbors
with a local preference; such a *labeled* graph routes by the Gao-Rexford
rules, an unlabeled one by shortest paths.
"""
from __future__ import annotations

import bz2
import csv
import gzip
import hashlib
import heapq
import logging
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import networkx as nx
import numpy as np

from .dataplane import CentralityProfile, PathLengthDistribution
from .errors import (ConflictError, DomainError, EmptySample, MissingProfile,
                     ParseError, UnlabeledGraph)
from .timemodel import make_rng

log = logging.getLogger(__name__)

C2P = "c2p"
P2P = "p2p"

# route classes, in order of preference
ORIGIN, FROM_CUSTOMER, FROM_PEER, FROM_PROVIDER = 0, 1, 2, 3
UNREACHABLE = -1


class AsGraph:
    """Undirected AS-level graph.

    Parameters
    ----------
    n : int
        Number of nodes.
    edges : sequence of (u, v)
        Undirected edges.  For a ``c2p`` edge, ``u`` is the customer and
        ``v`` the provider.
    labels : sequence of str, optional
        ``"c2p"`` or ``"p2p"`` for every edge, or None for an unlabeled graph.
    asns : sequence of int, optional
        Original AS numbers of the dense ids.
    local_pref : dict, optional
        ``local_pref[u]`` is an int array aligned with ``neighbors(u)``;
        higher is preferred.
    """

    def __init__(self, n: int, edges, labels: Optional[Sequence[str]] = None,
                 asns: Optional[Sequence[int]] = None, local_pref: Optional[dict] = None):
        self.n = int(n)
        edges = [(int(u), int(v)) for u, v in edges]
        if labels is not None:
            labels = [str(lab) for lab in labels]
            if len(labels) != len(edges):
                raise DomainError("labels must be given for every edge or for none")
            bad = set(labels) - {C2P, P2P}
            if bad:
                raise DomainError(f"unknown relationship labels {sorted(bad)}")
        seen = set()
        for u, v in edges:
            if u == v:
                raise DomainError(f"self-loop at node {u}")
            if not (0 <= u < self.n and 0 <= v < self.n):
                raise DomainError(f"edge ({u}, {v}) outside node range")
            key = (min(u, v), max(u, v))
            if key in seen:
                raise DomainError(f"duplicate edge {key}")
            seen.add(key)
        self.edges = edges
        self.labels = labels
        self.asns = None if asns is None else np.asarray(asns, dtype=np.int64)

        nbrs = [[] for _ in range(self.n)]
        for u, v in edges:
            nbrs[u].append(v)
            nbrs[v].append(u)
        self._adj = [np.array(sorted(x), dtype=np.int64) for x in nbrs]

        self.customers = self.providers = self.peers = None
        if labels is not None:
            cust = [[] for _ in range(self.n)]
            prov = [[] for _ in range(self.n)]
            peer = [[] for _ in range(self.n)]
            for (u, v), lab in zip(edges, labels):
                if lab == C2P:
                    prov[u].append(v)
                    cust[v].append(u)
                else:
                    peer[u].append(v)
                    peer[v].append(u)
            self.customers = [np.array(sorted(x), dtype=np.int64) for x in cust]
            self.providers = [np.array(sorted(x), dtype=np.int64) for x in prov]
            self.peers = [np.array(sorted(x), dtype=np.int64) for x in peer]

        self.local_pref = None
        if local_pref is not None:
            lp = {}
            for u in range(self.n):
                ranks = np.asarray(local_pref.get(u, ()), dtype=np.int64)
                if len(ranks) != len(self._adj[u]):
                    raise DomainError(f"node {u} needs one local preference per neighbor")
                lp[u] = ranks
            self.local_pref = lp

    def __repr__(self):
        kind = "labeled" if self.is_labeled else "unlabeled"
        return f"AsGraph(n={self.n}, edges={len(self.edges)}, {kind})"

    @property
    def is_labeled(self) -> bool:
        return self.labels is not None

    def number_of_edges(self) -> int:
        return len(self.edges)

    def neighbors(self, u: int) -> np.ndarray:
        return self._adj[u]

    def degrees(self) -> np.ndarray:
        return np.array([len(a) for a in self._adj], dtype=np.int64)

    def pref(self, u: int, v: int) -> int:
        """Local preference node ``u`` gives to neighbor ``v`` (0 when unset)."""
        if self.local_pref is None:
            return 0
        idx = np.searchsorted(self._adj[u], v)
        return int(self.local_pref[u][idx])

    def edge_set(self) -> set:
        return {(min(u, v), max(u, v)) for u, v in self.edges}

    def graph_hash(self) -> str:
        h = hashlib.sha256()
        h.update(str(self.n).encode())
        labs = self.labels or [""] * len(self.edges)
        for (u, v), lab in sorted(zip(self.edges, labs)):
            h.update(f"{u},{v},{lab};".encode())
        return h.hexdigest()[:16]

    def to_networkx(self) -> nx.Graph:
        G = nx.Graph()
        G.add_nodes_from(range(self.n))
        G.add_edges_from(self.edges)
        return G

    @classmethod
    def from_networkx(cls, G: nx.Graph) -> "AsGraph":
        mapping = {node: i for i, node in enumerate(sorted(G.nodes()))}
        edges = [(mapping[u], mapping[v]) for u, v in G.edges() if u != v]
        return cls(len(mapping), edges)

    def subgraph(self, nodes: Iterable[int]) -> "AsGraph":
        """Induced subgraph, relabeled densely in increasing old-id order."""
        keep = np.array(sorted(set(int(x) for x in nodes)), dtype=np.int64)
        remap = -np.ones(self.n, dtype=np.int64)
        remap[keep] = np.arange(len(keep))
        edges, labels = [], []
        labs = self.labels or [None] * len(self.edges)
        for (u, v), lab in zip(self.edges, labs):
            if remap[u] >= 0 and remap[v] >= 0:
                edges.append((int(remap[u]), int(remap[v])))
                labels.append(lab)
        asns = self.asns[keep] if self.asns is not None else keep
        return AsGraph(len(keep), edges, labels if self.is_labeled else None, asns)

    def components(self) -> list[np.ndarray]:
        seen = np.zeros(self.n, dtype=bool)
        comps = []
        for s in range(self.n):
            if seen[s]:
                continue
            seen[s] = True
            comp, queue = [s], deque([s])
            while queue:
                u = queue.popleft()
                for v in self._adj[u]:
                    if not seen[v]:
                        seen[v] = True
                        comp.append(int(v))
                        queue.append(v)
            comps.append(np.array(sorted(comp), dtype=np.int64))
        return sorted(comps, key=lambda c: (-len(c), c[0]))

    def largest_component(self) -> "AsGraph":
        comps = self.components()
        if len(comps) <= 1:
            return self
        log.info("using largest component: %d of %d nodes", len(comps[0]), self.n)
        return self.subgraph(comps[0])

    def is_connected(self) -> bool:
        return self.n <= 1 or len(self.components()) == 1

    def prune(self, min_degree: int = 3, drop_stubs: bool = True) -> "AsGraph":
        """Drop stub ASes (no customers) and ASes with fewer than ``min_degree`` neighbors.

        The largest connected component of what remains is returned.
        """
        deg = self.degrees()
        keep = deg >= min_degree
        if drop_stubs:
            if not self.is_labeled:
                raise UnlabeledGraph("stub detection needs relationship labels")
            keep &= np.array([len(c) > 0 for c in self.customers])
        return self.subgraph(np.flatnonzero(keep)).largest_component()

    def write_edgelist_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "v", "label"])
            labs = self.labels or [""] * len(self.edges)
            for (u, v), lab in zip(self.edges, labs):
                w.writerow([u, v, lab])

    @classmethod
    def read_edgelist_csv(cls, path) -> "AsGraph":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
        edges = [(int(r["u"]), int(r["v"])) for r in rows]
        labels = [r.get("label", "") or "" for r in rows]
        n = 1 + max((max(e) for e in edges), default=-1)
        return cls(n, edges, labels if any(labels) else None)


# --------------------------------------------------------------------------
# generators

def gen_full_mesh(N: int) -> AsGraph:
    if N < 1:
        raise DomainError("N must be >= 1")
    return AsGraph(N, [(u, v) for u in range(N) for v in range(u + 1, N)])


def gen_poisson(N: int, p: float, seed: int) -> AsGraph:
    """Erdos-Renyi G(N, p)."""
    if not 0 <= p <= 1:
        raise DomainError(f"p must lie in [0, 1], got {p}")
    if p == 1:
        return gen_full_mesh(N)
    return AsGraph.from_networkx(nx.fast_gnp_random_graph(N, p, seed=int(seed)))


def gen_barabasi_albert(N: int, m: int, seed: int) -> AsGraph:
    if not 1 <= m < N:
        raise DomainError(f"need 1 <= m < N, got m={m}, N={N}")
    return AsGraph.from_networkx(nx.barabasi_albert_graph(N, m, seed=int(seed)))


def gen_small_world(N: int, k_nn: int, p_rewire: float, seed: int) -> AsGraph:
    """Newman-Watts-Strogatz: ring lattice plus random shortcuts."""
    if k_nn % 2 or not 0 < k_nn < N or not 0 <= p_rewire <= 1:
        raise DomainError(f"invalid small-world parameters (N={N}, k={k_nn}, p={p_rewire})")
    return AsGraph.from_networkx(nx.newman_watts_strogatz_graph(N, k_nn, p_rewire, seed=int(seed)))


# --------------------------------------------------------------------------
# CAIDA serial AS-relationship files

def _open_text(path):
    path = str(path)
    if path.endswith(".bz2"):
        return bz2.open(path, "rt")
    if path.endswith(".gz"):
        return gzip.open(path, "rt")
    return open(path)


def load_caida_asrel(path) -> AsGraph:
    """Parse ``as1|as2|rel`` lines; ``rel`` is -1 (as1 provides as2) or 0 (peers)."""
    rels = {}
    with _open_text(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("|")
            if len(parts) < 3:
                raise ParseError(f"line {lineno}: expected as1|as2|rel, got {line!r}")
            try:
                a, b, rel = int(parts[0]), int(parts[1]), int(parts[2])
            except ValueError:
                raise ParseError(f"line {lineno}: non-integer field in {line!r}") from None
            if rel == -1:
                entry = (C2P, b, a)  # (label, customer, provider)
            elif rel == 0:
                entry = (P2P, min(a, b), max(a, b))
            else:
                raise ParseError(f"line {lineno}: unknown relationship code {rel}")
            if a == b:
                raise ParseError(f"line {lineno}: self-loop on AS {a}")
            key = (min(a, b), max(a, b))
            if key in rels and rels[key] != entry:
                raise ConflictError(f"line {lineno}: AS pair {key} has conflicting relationships")
            rels[key] = entry
    asns = sorted({asn for key in rels for asn in key})
    index = {asn: i for i, asn in enumerate(asns)}
    edges = [(index[u], index[v]) for _, u, v in rels.values()]
    labels = [lab for lab, _, _ in rels.values()]
    log.info("loaded %d ASes, %d links from %s", len(asns), len(edges), path)
    return AsGraph(len(asns), edges, labels, asns)


def write_caida_asrel(graph: AsGraph, path) -> None:
    if not graph.is_labeled:
        raise UnlabeledGraph("only labeled graphs can be written as AS-rel")
    asns = graph.asns if graph.asns is not None else np.arange(graph.n)
    with open(path, "w") as fh:
        fh.write("# as1|as2|rel\n")
        for (u, v), lab in zip(graph.edges, graph.labels):
            if lab == C2P:
                fh.write(f"{asns[v]}|{asns[u]}|-1\n")
            else:
                fh.write(f"{asns[u]}|{asns[v]}|0\n")


def assign_local_prefs(graph: AsGraph, seed: int) -> AsGraph:
    """Give every node a uniformly random ranking ``1..degree`` of its neighbors."""
    rng = make_rng(seed)
    prefs = {u: rng.permutation(len(graph.neighbors(u))) + 1 for u in range(graph.n)}
    return AsGraph(graph.n, graph.edges, graph.labels, graph.asns, prefs)


# --------------------------------------------------------------------------
# routing

@dataclass
class RoutingTree:
    """Best route of every node towards one origin.

    ``next_hop[v]`` is the neighbor ``v`` routes through (-1 for the origin
    and for unreachable nodes), ``dist[v]`` the AS-hop length (-1 when
    unreachable) and ``route_class[v]`` one of the ``FROM_*`` constants.
    """

    origin: int
    next_hop: np.ndarray
    dist: np.ndarray
    route_class: np.ndarray

    def path(self, v: int) -> Optional[list[int]]:
        """Node sequence from ``v`` to the origin, or None if unreachable."""
        if self.dist[v] < 0:
            return None
        out = [int(v)]
        while out[-1] != self.origin:
            out.append(int(self.next_hop[out[-1]]))
        return out

    @property
    def reachable(self) -> np.ndarray:
        return self.dist >= 0

    def order(self) -> np.ndarray:
        """Reachable nodes sorted so that every node follows its next hop."""
        idx = np.flatnonzero(self.dist >= 0)
        return idx[np.argsort(self.dist[idx], kind="stable")]


def _better(graph, v, cand, best):
    # cand/best are neighbors of v offering equal-class, equal-length routes
    if best < 0:
        return True
    pc, pb = graph.pref(v, cand), graph.pref(v, best)
    if pc != pb:
        return pc > pb
    return cand < best


def compute_policy_paths(graph: AsGraph, origin: int) -> RoutingTree:
    """Gao-Rexford best routes of all nodes towards ``origin``.

    Built in three phases: customer-learned routes climb provider links
    breadth-first from the origin, peer-learned routes add one peer hop
    on top of those, and provider-learned routes descend customer links from
    everything routed so far in order of path length.  Within a class the
    shortest route wins, then the highest local preference, then the lowest
    neighbor id.
    """
    if not graph.is_labeled:
        raise UnlabeledGraph("policy routing needs relationship labels")
    n = graph.n
    next_hop = -np.ones(n, dtype=np.int64)
    dist = -np.ones(n, dtype=np.int64)
    cls = np.full(n, UNREACHABLE, dtype=np.int64)
    dist[origin] = 0
    cls[origin] = ORIGIN

    # customer routes: BFS up the provider hierarchy, level by level
    frontier = [origin]
    level = 0
    while frontier:
        offers = {}
        for u in frontier:
            for v in graph.providers[u]:
                if dist[v] < 0 and _better(graph, v, u, offers.get(v, -1)):
                    offers[v] = u
        level += 1
        for v, u in offers.items():
            next_hop[v], dist[v], cls[v] = u, level, FROM_CUSTOMER
        frontier = sorted(offers)

    # peer routes: one peer hop from a node holding a customer (or own) route
    up = np.flatnonzero((cls == ORIGIN) | (cls == FROM_CUSTOMER))
    offers = {}
    for u in up:
        for v in graph.peers[u]:
            if cls[v] != UNREACHABLE:
                continue
            cand = (dist[u] + 1, u)
            cur = offers.get(v)
            if cur is None or cand[0] < cur[0] or (cand[0] == cur[0] and _better(graph, v, u, cur[1])):
                offers[v] = cand
    for v, (dv, u) in offers.items():
        next_hop[v], dist[v], cls[v] = u, dv, FROM_PEER

    # provider routes: Dijkstra down customer links with unit weights
    heap = [(int(dist[u]), int(u)) for u in np.flatnonzero(dist >= 0)]
    heapq.heapify(heap)
    while heap:
        du, u = heapq.heappop(heap)
        if du != dist[u]:
            continue
        for v in graph.customers[u]:
            if cls[v] in (ORIGIN, FROM_CUSTOMER, FROM_PEER):
                continue
            if dist[v] < 0 or du + 1 < dist[v]:
                next_hop[v], dist[v], cls[v] = u, du + 1, FROM_PROVIDER
                heapq.heappush(heap, (du + 1, int(v)))
            elif du + 1 == dist[v] and _better(graph, v, u, next_hop[v]):
                next_hop[v] = u
    return RoutingTree(int(origin), next_hop, dist, cls)


def is_valley_free(graph: AsGraph, path: Sequence[int]) -> bool:
    """Check an announcement path given as ``[receiver, ..., origin]``."""
    if not graph.is_labeled:
        raise UnlabeledGraph("valley-freeness needs relationship labels")
    # walk in announcement direction: origin -> receiver
    seq = list(path)[::-1]
    phase = 0  # 0: climbing, 1: after the peer hop or while descending
    for a, b in zip(seq, seq[1:]):
        if b in graph.providers[a]:
            if phase:
                return False
        elif b in graph.peers[a]:
            if phase:
                return False
            phase = 1
        elif b in graph.customers[a]:
            phase = 1
        else:
            return False
    return len(set(seq)) == len(seq)


@dataclass
class ShortestPaths:
    """BFS distances from a source and the shortest-path DAG.

    ``dist`` is -1 for unreachable nodes.  ``dag_src``/``dag_dst`` list the
    DAG edges ``u -> v`` with ``dist[v] == dist[u] + 1``; ``parent`` is the
    lowest-id DAG predecessor of each node.
    """

    source: int
    dist: np.ndarray
    parent: np.ndarray
    dag_src: np.ndarray
    dag_dst: np.ndarray

    def as_tree(self) -> RoutingTree:
        cls = np.where(self.dist > 0, FROM_PROVIDER, np.where(self.dist == 0, ORIGIN, UNREACHABLE))
        return RoutingTree(self.source, self.parent.copy(), self.dist.copy(), cls)


def shortest_paths(graph: AsGraph, source: int) -> ShortestPaths:
    n = graph.n
    dist = -np.ones(n, dtype=np.int64)
    parent = -np.ones(n, dtype=np.int64)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in graph.neighbors(u):
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                parent[v] = u
                queue.append(v)
            elif dist[v] == dist[u] + 1 and u < parent[v]:
                parent[v] = u
    src, dst = [], []
    for u in np.flatnonzero(dist >= 0):
        nb = graph.neighbors(u)
        nxt = nb[dist[nb] == dist[u] + 1]
        src.extend([u] * len(nxt))
        dst.extend(nxt.tolist())
    return ShortestPaths(int(source), dist, parent,
                         np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64))


def routing_tree(graph: AsGraph, source: int) -> RoutingTree:
    """Policy routing tree for labeled graphs, lowest-id BFS tree otherwise."""
    if graph.is_labeled:
        return compute_policy_paths(graph, source)
    return shortest_paths(graph, source).as_tree()


# --------------------------------------------------------------------------
# centrality and path statistics

def betweenness(graph: AsGraph) -> CentralityProfile:
    """Exact shortest-path betweenness (unordered pairs, unnormalized).

    Computed on the largest connected component; nodes outside it score 0.
    """
    comps = graph.components()
    if len(comps) > 1:
        log.info("betweenness on largest component (%d of %d nodes)", len(comps[0]), graph.n)
    G = graph.to_networkx().subgraph(comps[0].tolist()) if comps else nx.Graph()
    bc = nx.betweenness_centrality(G, normalized=False)
    values = np.zeros(graph.n)
    for node, b in bc.items():
        values[node] = b
    return CentralityProfile(values, backend="exact")


def path_sample_betweenness(n: int, paths: Iterable[Sequence[int]]) -> CentralityProfile:
    """Fraction of sampled paths on which each node is an intermediate hop."""
    counts = np.zeros(n)
    total = 0
    for path in paths:
        total += 1
        for v in path[1:-1]:
            counts[v] += 1
    if total == 0:
        raise EmptySample("no paths given")
    return CentralityProfile(counts / total, backend="path-sample")


@dataclass
class PathSample:
    """SD-path statistics gathered from full routing trees of sampled origins.

    ``intermediate`` counts, per node, the sampled paths it lies on as an
    intermediate hop; ``lengths`` holds one entry per sampled path.
    """

    n: int
    origins: np.ndarray
    lengths: np.ndarray
    intermediate: np.ndarray

    @property
    def n_paths(self) -> int:
        return len(self.lengths)

    def profile(self) -> CentralityProfile:
        if self.n_paths == 0:
            raise EmptySample("no paths sampled")
        return CentralityProfile(self.intermediate / self.n_paths, backend="path-sample")

    def length_distribution(self) -> PathLengthDistribution:
        return path_length_distribution(self.lengths)


def _descendant_counts(tree: RoutingTree) -> np.ndarray:
    counts = np.zeros(len(tree.dist))
    for v in tree.order()[::-1]:
        p = tree.next_hop[v]
        if p >= 0:
            counts[p] += counts[v] + 1
    return counts


def sample_paths(graph: AsGraph, n_paths: int, seed: int) -> PathSample:
    """Sample about ``n_paths`` SD-paths as complete routing trees of random origins.

    Each sampled origin contributes the paths from all nodes that reach it.
    A node is intermediate on exactly as many of those paths as it has
    descendants in the tree (the origin itself excluded).
    """
    rng = make_rng(seed)
    order = rng.permutation(graph.n)
    lengths, inter, origins = [], np.zeros(graph.n), []
    count = 0
    for origin in order:
        tree = routing_tree(graph, int(origin))
        reach = np.flatnonzero(tree.dist > 0)
        if len(reach) == 0:
            continue
        desc = _descendant_counts(tree)
        desc[origin] = 0
        inter += desc
        lengths.append(tree.dist[reach])
        origins.append(int(origin))
        count += len(reach)
        if count >= n_paths:
            break
    if not origins:
        raise EmptySample("graph has no routable pairs")
    return PathSample(graph.n, np.asarray(origins), np.concatenate(lengths), inter)


def path_length_distribution(paths) -> PathLengthDistribution:
    """Histogram of path lengths.

    ``paths`` may be node sequences or plain integer lengths.
    """
    lengths = []
    for p in paths:
        lengths.append(len(p) - 1 if isinstance(p, (list, tuple, np.ndarray)) else int(p))
    if not lengths:
        raise EmptySample("no paths given")
    return PathLengthDistribution.from_lengths(lengths)


@dataclass(frozen=True)
class ClusterSelection:
    strategy: str  # "random" or "betweenness"
    k: int

    def __post_init__(self):
        if self.strategy not in ("random", "betweenness"):
            raise DomainError(f"unknown cluster strategy {self.strategy!r}")
        if self.k < 0:
            raise DomainError("cluster size must be >= 0")


def select_cluster(selection: ClusterSelection, n: int,
                   profile: Optional[CentralityProfile] = None, seed: int = 0) -> np.ndarray:
    """Node ids of the SDN cluster, sorted."""
    k = selection.k
    if k > n:
        raise DomainError(f"cluster size {k} exceeds N={n}")
    if selection.strategy == "random":
        return np.sort(make_rng(seed).choice(n, size=k, replace=False))
    if profile is None:
        raise MissingProfile("betweenness selection needs a centrality profile")
    # descending score, ties broken by smallest id
    order = np.lexsort((np.arange(n), -profile.values))
    return np.sort(order[:k])


def read_centrality_csv(path) -> CentralityProfile:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
    values = np.zeros(1 + max(int(r["node"]) for r in rows))
    for r in rows:
        values[int(r["node"])] = float(r["score"])
    return CentralityProfile(values)


def write_centrality_csv(profile: CentralityProfile, path, header: str = "") -> None:
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh)
        w.writerow(["node", "score"])
        for i, v in enumerate(profile.values):
            w.writerow([i, repr(float(v))])
