"""Experiment configuration, sweeps, result files and figure presets.

A configuration is one YAML (or JSON) file with nested sections::

    name: poisson-sweep
    seed: 1
    topology: {generator: poisson, N: 1000, p: 0.005, seed: 1}
    cluster: {strategy: random, k: [20, 50, 100, 200]}
    time: {bgp: {variant: exponential, rate: 1.0}}
    simulation: {mode: tree, trials: 500, ell_fractions: [0.1, 0.5, 1.0]}

Every CSV written here starts with a ``# seed=... config=...`` comment line
and every JSON carries the same keys, so results can be traced back to the
configuration that produced them.
"""
from __future__ import annotations

import copy
import csv
import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
import yaml

from . import controlplane as cp
from . import dataplane as dp
from . import simulator as sim
from . import timemodel as tm
from . import topology as topo
from .errors import ConfigError

log = logging.getLogger(__name__)

OUTPUT_ENV = "SDNBGP_OUTPUT_DIR"
GENERATORS = ("full_mesh", "poisson", "barabasi_albert", "small_world", "caida", "edgelist")

DEFAULTS = {
    "name": "experiment",
    "seed": 0,
    "topology": {"generator": "poisson", "N": 1000, "p": 0.005, "seed": 1, "largest_component": True},
    "cluster": {"strategy": "random", "k": [0], "seed": None, "centrality": "auto", "paths": 100_000},
    "time": {"bgp": {"variant": "exponential", "rate": 1.0}, "sdn": {"variant": "deterministic", "value": 0.0}},
    "simulation": {"mode": "auto", "trials": 100, "ell_fractions": [0.1, 0.5, 1.0], "per_node_draws": False,
                   "workers": 1},
    "analytic": {"degree_model": "auto", "path_lengths": None},
    "output_dir": None,
}


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in (extra or {}).items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _set_path(data: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    node = data
    for key in keys[:-1]:
        node = node.setdefault(key, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {dotted}: {key} is not a section")
    node[keys[-1]] = value


@dataclass
class ExperimentConfig:
    data: dict
    source_path: Optional[Path] = None
    _graph: Optional[topo.AsGraph] = field(default=None, repr=False)

    def __post_init__(self):
        self.data = _merge(DEFAULTS, self.data)
        self.validate()

    @classmethod
    def load(cls, path, overrides: Optional[list[str]] = None) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file {path} not found")
        try:
            raw = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path} must contain a mapping")
        apply_overrides(raw, overrides or [])
        return cls(raw, path)

    # -- accessors ---------------------------------------------------------
    def __getitem__(self, key):
        return self.data[key]

    @property
    def name(self) -> str:
        return str(self.data["name"])

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def k_values(self) -> list[int]:
        k = self.data["cluster"]["k"]
        return [int(x) for x in (k if isinstance(k, (list, tuple)) else [k])]

    @property
    def trials(self) -> int:
        return int(self.data["simulation"]["trials"])

    @property
    def output_dir(self) -> Path:
        out = self.data.get("output_dir") or os.environ.get(OUTPUT_ENV) or "results"
        return Path(out) / self.name

    def digest(self) -> str:
        # settings that cannot change results stay out of the digest
        payload = {k: v for k, v in self.data.items() if k != "output_dir"}
        payload["simulation"] = {k: v for k, v in payload["simulation"].items() if k != "workers"}
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]

    def header(self, graph: Optional[topo.AsGraph] = None) -> str:
        parts = [f"seed={self.seed}", f"config={self.digest()}"]
        if graph is not None:
            parts.append(f"graph={graph.graph_hash()}")
        return " ".join(parts)

    def validate(self) -> None:
        t = self.data["topology"]
        gen = t.get("generator")
        if gen not in GENERATORS:
            raise ConfigError(f"unknown topology generator {gen!r}")
        if gen in ("caida", "edgelist"):
            path = t.get("path")
            if not path or not Path(path).exists():
                raise ConfigError(f"topology file {path!r} does not exist")
        elif int(t.get("N", 0)) < 1:
            raise ConfigError("topology.N must be >= 1")
        if self.data["cluster"]["strategy"] not in ("random", "betweenness"):
            raise ConfigError("cluster.strategy must be 'random' or 'betweenness'")
        if any(k < 0 for k in self.k_values):
            raise ConfigError("cluster sizes must be >= 0")
        if gen not in ("caida", "edgelist") and any(k > int(t["N"]) for k in self.k_values):
            raise ConfigError("cluster sizes must not exceed N")
        fr = self.data["simulation"]["ell_fractions"] or []
        if any(not 0 < float(f) <= 1 for f in fr):
            raise ConfigError("ell fractions must lie in (0, 1]")
        if self.trials < 1:
            raise ConfigError("simulation.trials must be >= 1")
        mode = self.data["simulation"]["mode"]
        if mode not in ("auto",) + sim.MODES:
            raise ConfigError(f"unknown routing mode {mode!r}")
        try:
            self.bgp_model
            self.sdn_model
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"invalid time model: {exc}") from None

    @property
    def bgp_model(self) -> tm.TimeModel:
        return tm.from_dict(self.data["time"]["bgp"])

    @property
    def sdn_model(self) -> tm.TimeModel:
        return tm.from_dict(self.data["time"]["sdn"])

    # -- derived objects ---------------------------------------------------
    def graph(self) -> topo.AsGraph:
        if self._graph is None:
            self._graph = build_graph(self.data["topology"])
        return self._graph

    def mode(self, graph: topo.AsGraph) -> str:
        mode = self.data["simulation"]["mode"]
        if mode == "auto":
            return "tree"
        return mode

    def ells(self, n: int) -> list[int]:
        return sorted({max(1, min(n, int(round(float(f) * n)))) for f in self.data["simulation"]["ell_fractions"] or []})


def apply_overrides(data: dict, overrides: list[str]) -> None:
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        key, value = item.split("=", 1)
        _set_path(data, key.strip(), yaml.safe_load(value))


def build_graph(settings: dict) -> topo.AsGraph:
    gen = settings["generator"]
    seed = int(settings.get("seed", 1))
    if gen == "full_mesh":
        g = topo.gen_full_mesh(int(settings["N"]))
    elif gen == "poisson":
        g = topo.gen_poisson(int(settings["N"]), float(settings["p"]), seed)
    elif gen == "barabasi_albert":
        g = topo.gen_barabasi_albert(int(settings["N"]), int(settings.get("m", 5)), seed)
    elif gen == "small_world":
        g = topo.gen_small_world(int(settings["N"]), int(settings.get("k_nn", 4)), float(settings.get("p_rewire", 0.1)), seed)
    elif gen == "edgelist":
        g = topo.AsGraph.read_edgelist_csv(settings["path"])
    else:
        g = topo.load_caida_asrel(settings["path"])
        if g.is_labeled and settings.get("local_prefs", True):
            g = topo.assign_local_prefs(g, seed)
        if settings.get("prune"):
            g = g.prune(int(settings.get("min_degree", 3)), drop_stubs=True)
            if g.is_labeled and settings.get("local_prefs", True):
                g = topo.assign_local_prefs(g, seed)
    if settings.get("largest_component", True):
        g = g.largest_component()
    return g


def _write_csv(path: Path, header: str, columns: list[str], rows) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(f"# {header}\n")
        w = csv.writer(fh)
        w.writerow(columns)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def read_result_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))


def _write_manifest(cfg: ExperimentConfig, graph: Optional[topo.AsGraph], outputs: list[Path], extra=None) -> Path:
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "name": cfg.name,
        "seed": cfg.seed,
        "config": cfg.digest(),
        "graph": graph.graph_hash() if graph is not None else None,
        "nodes": graph.n if graph is not None else None,
        "outputs": sorted(p.name for p in outputs),
        "settings": {k: v for k, v in cfg.data.items() if k != "output_dir"},
    }
    manifest.update(extra or {})
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


# --------------------------------------------------------------------------
# centrality / path statistics with an on-disk cache

def centrality_backend(cfg: ExperimentConfig, graph: topo.AsGraph) -> str:
    backend = cfg["cluster"].get("centrality", "auto")
    if backend == "auto":
        return "exact" if graph.n <= 5000 and not graph.is_labeled else "path-sample"
    return backend


def graph_paths(cfg: ExperimentConfig, graph: topo.AsGraph) -> topo.PathSample:
    return topo.sample_paths(graph, int(cfg["cluster"].get("paths", 100_000)), cfg.seed)


def centrality(cfg: ExperimentConfig, graph: topo.AsGraph,
               paths: Optional[topo.PathSample] = None) -> dp.CentralityProfile:
    backend = centrality_backend(cfg, graph)
    n_paths = int(cfg["cluster"].get("paths", 100_000))
    tag = f"{graph.graph_hash()}-{backend}-{cfg.seed}-{n_paths if backend != 'exact' else 0}"
    cache = cfg.output_dir.parent / "cache" / f"centrality-{tag}.csv"
    if cache.exists():
        return topo.read_centrality_csv(cache)
    if backend == "exact":
        profile = topo.betweenness(graph)
    else:
        profile = (paths or graph_paths(cfg, graph)).profile()
    cache.parent.mkdir(parents=True, exist_ok=True)
    topo.write_centrality_csv(profile, cache, header=f"graph={graph.graph_hash()} backend={backend} seed={cfg.seed}")
    return profile


def cluster_selector(cfg: ExperimentConfig, graph: topo.AsGraph, profile=None):
    strategy = cfg["cluster"]["strategy"]
    cseed = cfg["cluster"].get("seed")
    cseed = cfg.seed if cseed is None else int(cseed)

    def select(k: int) -> np.ndarray:
        sel = topo.ClusterSelection(strategy, k)
        return topo.select_cluster(sel, graph.n, profile, seed=cseed * 1_000_003 + k)
    return select


# --------------------------------------------------------------------------
# commands

def bounds_rows(path_dist: dp.PathLengthDistribution, N: int, k_values, strategy: str,
                profile: Optional[dp.CentralityProfile] = None):
    """``(k, omega, lower_norm, upper_norm)`` per cluster size."""
    rows = []
    for k in k_values:
        if k == 0:
            rows.append((0, 1.0, 1.0, 1.0))
            continue
        omega = 1.0
        if strategy == "betweenness" and k < N:
            cluster = topo.select_cluster(topo.ClusterSelection("betweenness", k), N, profile)
            omega = dp.omega_ratio(profile, cluster)
        dist = dp.Hypergeometric(N, k) if strategy == "random" else dp.FisherNoncentral(N, k, omega)
        lo, hi = dp.normalized_bounds(path_dist, dist)
        rows.append((k, omega, lo, hi))
    return rows


def cmd_analytic_bounds(cfg: ExperimentConfig) -> list[Path]:
    """Normalized bounds on E[T_SD] per k, for random and betweenness clusters."""
    graph = cfg.graph()
    lengths = cfg["analytic"].get("path_lengths")
    paths = None
    if lengths:
        path_dist = dp.PathLengthDistribution.from_lengths(lengths)
    else:
        paths = graph_paths(cfg, graph)
        path_dist = paths.length_distribution()
    header = cfg.header(graph)
    outputs = [cfg.output_dir / "path_lengths.csv"]
    _write_csv(outputs[0], header, ["d", "probability"], path_dist.probs.items())
    profile = centrality(cfg, graph, paths)
    for strategy in ("random", "betweenness"):
        rows = bounds_rows(path_dist, graph.n, cfg.k_values, strategy, profile)
        outputs.append(_write_csv(cfg.output_dir / f"bounds_{strategy}.csv", header,
                                  ["k", "lower_norm", "upper_norm", "omega"],
                                  [(k, lo, hi, om) for k, om, lo, hi in rows]))
    _write_manifest(cfg, graph, outputs)
    return outputs


def degree_model_for(cfg: ExperimentConfig, graph: topo.AsGraph):
    choice = cfg["analytic"].get("degree_model", "auto")
    n = graph.n
    density = 2 * graph.number_of_edges() / (n * (n - 1)) if n > 1 else 1.0
    if choice == "fullmesh" or (choice == "auto" and density >= 1.0):
        return cp.FullMesh()
    if choice in ("poisson", "auto"):
        return cp.PoissonGraph(float(cfg["analytic"].get("p", density)))
    raise ConfigError(f"unknown degree model {choice!r}")


def convergence_rows(N: int, k_values, ells, lam: float, model) -> list[tuple]:
    rows = []
    for k in k_values:
        sc = cp.chain_scenario(N, k, lam, model)
        tl = cp.expected_t_partial(ells, sc) if ells else []
        rows.append((k, cp.expected_tc(sc), *tl))
    return rows


def cmd_analytic_convergence(cfg: ExperimentConfig) -> list[Path]:
    """Expected total and partial convergence times per k (with ratios to k=0)."""
    graph = cfg.graph()
    N = graph.n
    fracs = [float(f) for f in cfg["simulation"]["ell_fractions"] or []]
    ells = [max(1, min(N, int(round(f * N)))) for f in fracs]
    lam = 1.0 / cfg.bgp_model.mean()
    model = degree_model_for(cfg, graph)
    rows = convergence_rows(N, cfg.k_values, ells, lam, model)
    base = convergence_rows(N, [0], ells, lam, model)[0]
    header = cfg.header(graph)
    cols = ["k", "E_Tc"] + [f"E_Tl_{f:g}N" for f in fracs]
    out = [_write_csv(cfg.output_dir / "convergence.csv", header, cols, rows)]
    norm = [(r[0], *[v / b if b else math.nan for v, b in zip(r[1:], base[1:])]) for r in rows]
    out.append(_write_csv(cfg.output_dir / "convergence_normalized.csv", header, cols, norm))
    _write_manifest(cfg, graph, out, {"degree_model": repr(model)})
    return out


def _stats_state(stats: sim.SummaryStats) -> dict:
    def mom(m):
        d = {"count": m.count, "mean": m.mean, "m2": m.m2}
        if isinstance(m, sim.ClusteredMoments):
            d.update(sq_sums=m.sq_sums, cross=m.cross, sq_counts=m.sq_counts)
        return d
    return {
        "seed": stats.seed, "trials": stats.trials, "unreached": stats.unreached,
        "t_c": mom(stats.t_c),
        "t_ell": [[l, mom(m)] for l, m in stats.t_ell.items()],
        "buckets": [[d, kp, mom(m)] for (d, kp), m in stats.buckets.items()],
        "by_d": [[d, mom(m)] for d, m in stats.by_d.items()],
    }


def _stats_from_state(state: dict) -> sim.SummaryStats:
    def mom(d):
        if "sq_sums" in d:
            return sim.ClusteredMoments(**d)
        return sim.Moments(**d)
    s = sim.SummaryStats(state["seed"], state["trials"], unreached=state["unreached"])
    s.t_c = mom(state["t_c"])
    s.t_ell = {int(l): mom(m) for l, m in state["t_ell"]}
    s.buckets = {(int(d), int(kp)): mom(m) for d, kp, m in state["buckets"]}
    s.by_d = {int(d): mom(m) for d, m in state["by_d"]}
    return s


def _store(done, stats, ckpt, tag, key):
    for k, result in done:
        stats[k] = result
        (ckpt / f"{tag}k{k}.json").write_text(json.dumps({"key": key, "stats": _stats_state(result)}))
        log.info("finished k=%d (%s)", k, tag or "sweep")


def run_sweep(cfg: ExperimentConfig, graph: topo.AsGraph, bgp_model=None, tag: str = "",
              collect_buckets: bool = True, profile=None) -> dict:
    """Simulate k=0 and every configured k, checkpointing each k to disk.

    Returns ``k -> SummaryStats``.  A rerun with the same configuration picks
    up finished cluster sizes from the checkpoint directory.
    """
    bgp_model = bgp_model or cfg.bgp_model
    scenario = sim.Scenario(graph, (), bgp_model, cfg.sdn_model, cfg.mode(graph), None,
                            cfg.trials, cfg.seed, cfg.ells(graph.n),
                            bool(cfg["simulation"].get("per_node_draws", False)))
    if cfg["cluster"]["strategy"] == "betweenness" and profile is None:
        profile = centrality(cfg, graph)
    select = cluster_selector(cfg, graph, profile)
    ckpt = cfg.output_dir / "checkpoints"
    ckpt.mkdir(parents=True, exist_ok=True)
    key = f"{cfg.digest()}-{tm.to_json(bgp_model)}"
    stats, todo = {}, []
    for k in [0] + [k for k in cfg.k_values if k != 0]:
        path = ckpt / f"{tag}k{k}.json"
        if path.exists():
            saved = json.loads(path.read_text())
            if saved.get("key") == key:
                stats[k] = _stats_from_state(saved["stats"])
                continue
        todo.append((k, scenario.with_cluster(select(k) if k > 0 else ())))
    workers = int(cfg["simulation"].get("workers", 1))
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = pool.map(sim.run_monte_carlo, [sc for _, sc in todo], [collect_buckets] * len(todo))
            done = zip([k for k, _ in todo], results)
            _store(done, stats, ckpt, tag, key)
    else:
        _store(((k, sim.run_monte_carlo(sc, collect_buckets)) for k, sc in todo), stats, ckpt, tag, key)
    return stats


def cmd_simulate(cfg: ExperimentConfig) -> list[Path]:
    graph = cfg.graph()
    stats = run_sweep(cfg, graph)
    header = cfg.header(graph)
    ells = cfg.ells(graph.n)
    rows = sim.sweep_rows(stats, cfg.k_values, ells)
    out = cfg.output_dir
    outputs = [_write_csv(out / "sweep.csv", header, ["k", "ell", "mean", "se", "ratio"],
                          [(r.k, r.ell, r.mean, r.se, r.ratio) for r in rows])]
    for k in sorted(stats):
        s = stats[k]
        outputs.append(_write_csv(out / f"buckets_k{k}.csv", header,
                                  ["bucket_d", "bucket_kprime", "count", "mean", "se", "se_trials"],
                                  list(s.bucket_rows())))
        path = out / f"summary_k{k}.json"
        payload = json.loads(s.to_json())
        payload.update(config=cfg.digest(), graph=graph.graph_hash(), k=k)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        outputs.append(path)
    _write_manifest(cfg, graph, outputs, {"unreached": {str(k): s.unreached for k, s in stats.items()}})
    return outputs


def cmd_topo_stats(cfg: ExperimentConfig) -> list[Path]:
    graph = cfg.graph()
    header = cfg.header(graph)
    paths = graph_paths(cfg, graph)
    dist = paths.length_distribution()
    deg = graph.degrees()
    out = cfg.output_dir
    outputs = [_write_csv(out / "path_lengths.csv", header, ["d", "probability"], dist.probs.items())]
    profile = centrality(cfg, graph, paths)
    top = np.lexsort((np.arange(graph.n), -profile.values))[:20]
    asns = graph.asns if graph.asns is not None else np.arange(graph.n)
    outputs.append(_write_csv(out / "top_centrality.csv", header, ["node", "asn", "score", "degree"],
                              [(int(v), int(asns[v]), float(profile.values[v]), int(deg[v])) for v in top]))
    summary = {
        "nodes": graph.n, "edges": graph.number_of_edges(), "labeled": graph.is_labeled,
        "mean_degree": float(deg.mean()) if graph.n else 0.0, "max_degree": int(deg.max()) if graph.n else 0,
        "sampled_paths": paths.n_paths, "mean_path_length": dist.mean(),
        "modal_path_length": max(dist.probs, key=dist.probs.get),
        "seed": cfg.seed, "config": cfg.digest(), "graph": graph.graph_hash(),
    }
    path = out / "topology.json"
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    outputs.append(path)
    _write_manifest(cfg, graph, outputs)
    return outputs


# --------------------------------------------------------------------------
# presets

TABLE_K = (20, 50, 100, 200)
TABLE_D = (2, 5)


def preset_config(name: str, caida: Optional[str] = None, trials: Optional[int] = None,
                  output_dir: Optional[str] = None) -> ExperimentConfig:
    poisson = {"generator": "poisson", "N": 1000, "p": 0.005, "seed": 1, "largest_component": True}
    ba = {"generator": "barabasi_albert", "N": 1000, "m": 5, "seed": 1, "largest_component": True}
    if name == "table-bounds":
        data = {"topology": poisson, "cluster": {"strategy": "random", "k": list(TABLE_K)},
                "simulation": {"mode": "tree", "trials": 500, "ell_fractions": []}}
    elif name == "fig6":
        data = {"topology": poisson, "cluster": {"strategy": "random", "k": [20, 50, 100, 200]},
                "simulation": {"mode": "tree", "trials": 500, "ell_fractions": []}}
    elif name == "fig7":
        data = {"topology": ba, "cluster": {"strategy": "random", "k": [10, 20, 50, 100, 200, 500]},
                "simulation": {"mode": "dag", "trials": 500, "ell_fractions": [0.1, 0.5, 1.0]},
                "analytic": {"degree_model": "poisson"}}
    elif name in ("fig3", "fig8"):
        if not caida:
            raise ConfigError(f"preset {name} needs a CAIDA AS-relationship file (--caida)")
        topology = {"generator": "caida", "path": caida, "seed": 1, "prune": name == "fig8"}
        if name == "fig3":
            ks = [0, 1, 2, 5, 10, 20, 50, 100, 200, 500, 1000, 2000, 5000, 10000, 20000, 50000]
            data = {"topology": topology, "cluster": {"strategy": "betweenness", "k": ks, "paths": 1_000_000},
                    "simulation": {"mode": "tree", "trials": 1, "ell_fractions": []}}
        else:
            data = {"topology": topology,
                    "cluster": {"strategy": "betweenness", "k": [10, 20, 50, 100, 200], "paths": 200_000},
                    "simulation": {"mode": "tree", "trials": 200, "ell_fractions": [0.1, 0.5, 1.0]}}
    else:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    data["name"] = name
    data["seed"] = 1
    if trials is not None:
        data["simulation"]["trials"] = int(trials)
    if output_dir is not None:
        data["output_dir"] = output_dir
    return ExperimentConfig(data)


def table_bounds(cfg: ExperimentConfig, simulate: bool = True) -> list[tuple]:
    """Rows ``(d, k, upper, simulation, lower)`` as fractions of the k=0 value."""
    N = int(cfg["topology"]["N"])
    stats = run_sweep(cfg, cfg.graph()) if simulate else None
    rows = []
    for d in TABLE_D:
        for k in cfg.k_values:
            lo, hi = dp.tsd_bounds_given_d(d, dp.Hypergeometric(N, k))
            s = sim.tsd_ratio_by_d(stats, k, d) if stats else math.nan
            rows.append((d, k, hi / d, s, lo / d))
    return rows


def reproduce(name: str, caida: Optional[str] = None, trials: Optional[int] = None,
              output_dir: Optional[str] = None) -> list[Path]:
    cfg = preset_config(name, caida, trials, output_dir)
    graph = cfg.graph()
    header = cfg.header(graph)
    out = cfg.output_dir
    outputs = []
    if name == "table-bounds":
        rows = table_bounds(cfg)
        outputs.append(_write_csv(out / "table_bounds.csv", header,
                                  ["d", "k", "upper", "simulation", "lower"], rows))
    elif name == "fig6":
        for label, model in (("exponential", tm.Exponential(1.0)), ("uniform", tm.Uniform(0.0, 2.0))):
            stats = run_sweep(cfg, graph, model, tag=f"{label}-")
            mu = model.mean()
            for k in cfg.k_values:
                dist = dp.Hypergeometric(graph.n, k)
                rows = []
                for d, m in sorted(stats[k].by_d.items()):
                    if d + 1 > graph.n:
                        continue
                    lo, hi = dp.tsd_bounds_given_d(d, dist, mu)
                    rows.append((d, m.count, m.mean, m.clustered_se(stats[k].trials), lo, hi))
                outputs.append(_write_csv(out / f"fig6_{label}_k{k}.csv", header,
                                          ["d", "count", "sim_mean", "sim_se", "lower", "upper"], rows))
                brow = []
                for (d, kp), m in sorted(stats[k].buckets.items()):
                    brow.append((d, kp, m.count, m.mean, m.clustered_se(stats[k].trials),
                                 dp.lb(d, kp) * mu, dp.ub(d, kp) * mu))
                outputs.append(_write_csv(out / f"fig6_{label}_k{k}_buckets.csv", header,
                                          ["d", "kprime", "count", "mean", "se", "lower", "upper"], brow))
    elif name == "fig7":
        ells = cfg.ells(graph.n)
        model = degree_model_for(cfg, graph)
        analytic = {k: convergence_rows(graph.n, [k], ells, 1.0, model)[0][2:] for k in [0] + cfg.k_values}
        sims = {}
        for label, tmodel in (("exponential", tm.Exponential(1.0)), ("uniform", tm.Uniform(0.0, 2.0))):
            sims[label] = run_sweep(cfg, graph, tmodel, tag=f"{label}-", collect_buckets=False)
        for j, ell in enumerate(ells):
            rows = []
            for k in [0] + cfg.k_values:
                r = [sims[lab][k].t_ell[ell].mean / sims[lab][0].t_ell[ell].mean for lab in ("exponential", "uniform")]
                rows.append((k, *r, analytic[k][j] / analytic[0][j]))
            outputs.append(_write_csv(out / f"fig7_ell{ell}.csv", header,
                                      ["k", "sim_exponential", "sim_uniform", "analytic"], rows))
    elif name == "fig3":
        outputs.extend(cmd_analytic_bounds(cfg))
    elif name == "fig8":
        stats = run_sweep(cfg, graph, collect_buckets=False)
        rows = sim.sweep_rows(stats, [0] + cfg.k_values, cfg.ells(graph.n))
        outputs.append(_write_csv(out / "fig8_sweep.csv", header, ["k", "ell", "mean", "se", "ratio"],
                                  [(r.k, r.ell, r.mean, r.se, r.ratio) for r in rows]))
    _write_manifest(cfg, graph, outputs, {"preset": name})
    return outputs


PRESETS = ("fig3", "fig6", "fig7", "fig8", "table-bounds")


# --------------------------------------------------------------------------
# plot scripts

_PLOT_HEAD = '''"""Plot {title} from {csv_names}."""
import csv
from pathlib import Path

import matplotlib.pyplot as plt

HERE = Path(__file__).resolve().parent


def load(name):
    with open(HERE / name, newline="") as fh:
        return list(csv.DictReader(line for line in fh if not line.startswith("#")))

'''

_FIG3_BODY = '''
fig, ax = plt.subplots()
for name, colour, label in (("bounds_random.csv", "0.8", "random"), ("bounds_betweenness.csv", "0.4", "betweenness")):
    rows = [r for r in load(name) if int(r["k"]) > 0]
    k = [int(r["k"]) for r in rows]
    ax.fill_between(k, [float(r["lower_norm"]) for r in rows], [float(r["upper_norm"]) for r in rows],
                    color=colour, alpha=0.7, label=label)
ax.set_xscale("log")
ax.set_xlabel("SDN cluster size k")
ax.set_ylabel("E[T_SD | k] / E[T_SD | k=0]")
ax.legend()
fig.savefig(HERE / "fig3.pdf", bbox_inches="tight")
'''

_FIG7_BODY = '''
names = {names!r}
fig, axes = plt.subplots(len(names), 1, figsize=(5, 3 * len(names)), sharex=True, squeeze=False)
for ax, name in zip(axes[:, 0], names):
    rows = load(name)
    k = [int(r["k"]) for r in rows]
    ax.plot(k, [float(r["sim_exponential"]) for r in rows], "ks-", label="sim, exponential")
    ax.plot(k, [float(r["sim_uniform"]) for r in rows], "bo-", label="sim, uniform")
    ax.plot(k, [float(r["analytic"]) for r in rows], "r--", label="analytic")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("E[T_l | k] / E[T_l | k=0]")
    ax.set_title(name)
axes[-1, 0].set_xlabel("SDN cluster size k")
axes[0, 0].legend()
fig.savefig(HERE / "fig7.pdf", bbox_inches="tight")
'''

_FIG6_BODY = '''
names = {names!r}
fig, axes = plt.subplots(1, len(names), figsize=(4 * len(names), 3), squeeze=False)
for ax, name in zip(axes[0], names):
    rows = load(name)
    d = [int(r["d"]) for r in rows]
    ax.fill_between(d, [float(r["lower"]) for r in rows], [float(r["upper"]) for r in rows], color="0.8")
    ax.errorbar(d, [float(r["sim_mean"]) for r in rows], yerr=[3 * float(r["sim_se"]) for r in rows], fmt="ko")
    ax.set_title(name)
    ax.set_xlabel("path length d")
axes[0][0].set_ylabel("E[T_SD | d]")
fig.savefig(HERE / "fig6.pdf", bbox_inches="tight")
'''

_SWEEP_BODY = '''
rows = load({name!r})
fig, ax = plt.subplots()
for ell in sorted({{r["ell"] for r in rows}}):
    sub = [r for r in rows if r["ell"] == ell]
    ax.plot([int(r["k"]) for r in sub], [float(r["ratio"]) for r in sub], "o-", label=f"ell={{ell}}")
ax.set_xlabel("SDN cluster size k")
ax.set_ylabel("normalized time")
ax.legend()
fig.savefig(HERE / {pdf!r}, bbox_inches="tight")
'''


def cmd_emit_plots(results_dir) -> list[Path]:
    """Write one matplotlib script per recognised figure next to its CSVs."""
    results = Path(results_dir)
    if not results.is_dir():
        raise ConfigError(f"results directory {results} does not exist")
    csvs = sorted(p.name for p in results.glob("*.csv"))
    if not csvs:
        raise ConfigError(f"no result CSVs in {results}")
    scripts = []

    def emit(fname, title, names, body):
        text = _PLOT_HEAD.format(title=title, csv_names=", ".join(names)) + body
        path = results / fname
        path.write_text(text)
        scripts.append(path)

    if "bounds_random.csv" in csvs and "bounds_betweenness.csv" in csvs:
        emit("plot_fig3.py", "connectivity-time bounds", ["bounds_random.csv", "bounds_betweenness.csv"], _FIG3_BODY)
    fig7 = [c for c in csvs if c.startswith("fig7_ell")]
    fig7.sort(key=lambda c: int(c[len("fig7_ell"):-4]))
    if fig7:
        emit("plot_fig7.py", "partial convergence", fig7, _FIG7_BODY.format(names=fig7))
    fig6 = [c for c in csvs if c.startswith("fig6_") and not c.endswith("_buckets.csv")]
    if fig6:
        emit("plot_fig6.py", "E[T_SD|d] against its bounds", fig6, _FIG6_BODY.format(names=fig6))
    for name in ("sweep.csv", "fig8_sweep.csv"):
        if name in csvs:
            pdf = name.replace(".csv", ".pdf")
            emit(f"plot_{name[:-4]}.py", "normalized convergence sweep", [name],
                 _SWEEP_BODY.format(name=name, pdf=pdf))
    if not scripts:
        raise ConfigError(f"no recognised result files in {results}")
    return scripts
