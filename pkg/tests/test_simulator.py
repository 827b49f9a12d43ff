import json
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdnbgp import dataplane as dp
from sdnbgp import simulator as sim
from sdnbgp import timemodel as tm
from sdnbgp import topology as topo
from sdnbgp.errors import DisconnectedSource, DomainError

from oracles import random_hierarchy


def test_line_deterministic(path3):
    sc = sim.Scenario(path3, bgp_model=tm.Deterministic(1.0), source=0)
    tr = sim.run_trial(sc)
    np.testing.assert_array_equal(tr.times, [0, 1, 2])
    assert tr.tsd[2] == 2 and tr.path_len[2] == 2 and tr.kprime[2] == 0


def test_line_with_cluster(path3):
    sc = sim.Scenario(path3, cluster=[1, 2], bgp_model=tm.Deterministic(1.0), source=0)
    tr = sim.run_trial(sc)
    assert tr.times[1] == 1 and tr.times[2] == 1
    assert tr.kprime[2] == 2 and tr.cluster_arrival == 1
    assert dp.lb(2, 2) <= tr.tsd[2] <= dp.ub(2, 2)


def test_sdn_latency_delays_cluster(path3):
    sc = sim.Scenario(path3, cluster=[1, 2], bgp_model=tm.Deterministic(1.0),
                      sdn_model=tm.Deterministic(5.0), source=0)
    assert sim.run_trial(sc).times[2] == 2  # bgp hop beats the controller


def test_source_in_cluster(path3):
    sc = sim.Scenario(path3, cluster=[0, 2], bgp_model=tm.Deterministic(1.0), source=0)
    tr = sim.run_trial(sc)
    assert tr.times.tolist() == [0, 1, 0]
    assert tr.kprime[2] == 2 and tr.tsd[2] == 1


def _oracle_times(sc, trial):
    """Dijkstra from a virtual root over the trial's own forwarding edges."""
    source = sim.trial_source(sc, trial)
    routes = sim._routes(sc, source)
    w = sim._edge_delays(sc, routes, tm.make_rng(sc.seed, trial, 1))
    t_sdn = float(sc.sdn_model.sample(tm.make_rng(sc.seed, trial, 2)))
    G = nx.DiGraph()
    G.add_nodes_from(range(sc.graph.n))
    for u, v, x in zip(routes.edge_src, routes.edge_dst, w):
        if G.has_edge(u, v):
            G[u][v]["weight"] = min(G[u][v]["weight"], x)
        else:
            G.add_edge(int(u), int(v), weight=float(x))
    first = nx.single_source_dijkstra_path_length(G, source)
    reached = [c for c in sc.cluster if c in first]
    if reached:
        t_star = min(first[c] for c in reached)
        G.add_node("root")
        G.add_edge("root", source, weight=0.0)
        for c in sc.cluster:
            if c != source:
                G.add_edge("root", int(c), weight=t_star + t_sdn)
        first = nx.single_source_dijkstra_path_length(G, "root")
    out = np.full(sc.graph.n, np.inf)
    for v, t in first.items():
        if v != "root":
            out[v] = t
    return out


@pytest.mark.parametrize("mode", sim.MODES)
@pytest.mark.parametrize("seed", [1, 2])
def test_propagation_matches_dijkstra(mode, seed):
    g = topo.gen_poisson(150, 0.03, seed)
    cluster = topo.select_cluster(topo.ClusterSelection("random", 15), g.n, seed=seed)
    sc = sim.Scenario(g, cluster, tm.Exponential(1.0), tm.Uniform(0.0, 0.5), mode, trials=5, seed=seed)
    for trial in range(5):
        np.testing.assert_allclose(sim.run_trial(sc, trial).times, _oracle_times(sc, trial), rtol=1e-12)


def test_propagation_labeled_tree_mode():
    g = topo.assign_local_prefs(random_hierarchy(np.random.default_rng(4), 12, 0.5, 0.3), 1)
    sc = sim.Scenario(g, [2, 5, 7], mode="tree", trials=4, seed=3, source=int(np.argmax(g.degrees())))
    for trial in range(4):
        np.testing.assert_allclose(sim.run_trial(sc, trial).times, _oracle_times(sc, trial))


def test_tsd_is_max_over_routing_path():
    g = topo.gen_poisson(120, 0.04, 5).largest_component()
    sc = sim.Scenario(g, [3, 9, 40], mode="dag", seed=2)
    tr = sim.run_trial(sc)
    tree = topo.routing_tree(g, tr.source)
    for v in range(g.n):
        if v == tr.source:
            assert math.isnan(tr.tsd[v])
            continue
        p = tree.path(v)
        assert tr.tsd[v] == max(tr.times[p])
        assert tr.path_len[v] == len(p) - 1
        assert tr.kprime[v] == len(set(p) & {3, 9, 40})


def test_dag_mode_rejects_labels():
    g = random_hierarchy(np.random.default_rng(1), 6, 0.9)
    with pytest.raises(DomainError):
        sim.run_trial(sim.Scenario(g, mode="dag", source=0))


def test_scenario_validation(path3):
    with pytest.raises(DomainError):
        sim.Scenario(path3, mode="gossip")
    with pytest.raises(DomainError):
        sim.Scenario(path3, cluster=[5])
    with pytest.raises(DomainError):
        sim.Scenario(path3, ells=[4])
    with pytest.raises(DomainError):
        sim.Scenario(path3, trials=0)


def test_isolated_source():
    g = topo.AsGraph(3, [(1, 2)])
    with pytest.raises(DisconnectedSource):
        sim.run_trial(sim.Scenario(g, source=0))


def test_unreached_nodes_reported():
    g = topo.AsGraph(4, [(0, 1), (2, 3)])
    tr = sim.run_trial(sim.Scenario(g, source=0))
    assert tr.unreached == 2 and math.isnan(tr.t_partial(3))


def test_trials_reproducible_and_distinct():
    g = topo.gen_poisson(100, 0.05, 1)
    sc = sim.Scenario(g, trials=3, seed=9)
    a, b = sim.run_trial(sc, 1), sim.run_trial(sc, 1)
    np.testing.assert_array_equal(a.times, b.times)
    assert not np.array_equal(sim.run_trial(sc, 2).times, a.times)


@given(st.integers(0, 10_000), st.sampled_from(sim.MODES))
def test_cluster_never_delays_within_a_trial(seed, mode):
    g = topo.gen_poisson(60, 0.08, 2).largest_component()
    base = sim.Scenario(g, mode=mode, seed=seed)
    cl = base.with_cluster(topo.select_cluster(topo.ClusterSelection("random", 8), g.n, seed=seed))
    t0, t1 = sim.run_trial(base).times, sim.run_trial(cl).times
    assert (t1 <= t0 + 1e-12).all()


def test_per_node_draws_share_delay():
    star = topo.AsGraph(5, [(0, i) for i in range(1, 5)])
    sc = sim.Scenario(star, source=0, per_node_draws=True, seed=4)
    tr = sim.run_trial(sc)
    assert len(set(tr.times[1:].tolist())) == 1
    indep = sim.run_trial(sim.Scenario(star, source=0, seed=4))
    assert len(set(indep.times[1:].tolist())) == 4


def test_partial_times_are_order_statistics():
    g = topo.gen_poisson(80, 0.06, 3).largest_component()
    tr = sim.run_trial(sim.Scenario(g, seed=1))
    st_ = np.sort(tr.times)
    assert tr.t_partial(1) == 0.0
    assert tr.t_partial(10) == st_[9]
    assert tr.t_c == st_[-1]


def test_trace_dump(tmp_path, path3):
    tr = sim.run_trial(sim.Scenario(path3, bgp_model=tm.Deterministic(1.0), source=0))
    path = tmp_path / "trace.csv"
    tr.dump(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "node,time,tsd,d,kprime"
    assert lines[3].split(",")[:2] == ["2", "2.0"]


# -- aggregation -----------------------------------------------------------

@given(st.lists(st.floats(-1e3, 1e3), min_size=1, max_size=40), st.integers(0, 40))
def test_moments_merge_matches_batch(values, cut):
    cut = min(cut, len(values))
    a, b, full = sim.Moments(), sim.Moments(), sim.Moments()
    a.add_many(values[:cut])
    b.add_many(values[cut:])
    full.add_many(values)
    a.merge(b)
    assert a.count == full.count
    assert a.mean == pytest.approx(np.mean(values), abs=1e-9)
    if len(values) > 1:
        assert a.std == pytest.approx(np.std(values, ddof=1), rel=1e-7, abs=1e-9)


def test_clustered_se_matches_ratio_estimator_formula():
    rng = np.random.default_rng(0)
    groups = [rng.normal(size=rng.integers(1, 9)) + rng.normal() for _ in range(30)]
    m = sim.ClusteredMoments()
    for g in groups:
        m.add_trial(g)
    pooled = np.concatenate(groups)
    mean = pooled.mean()
    resid = np.array([(g - mean).sum() for g in groups])
    T = len(groups)
    expected = math.sqrt(T / (T - 1) * (resid ** 2).sum()) / len(pooled)
    assert m.mean == pytest.approx(mean)
    assert m.clustered_se(T) == pytest.approx(expected, rel=1e-9)


def test_clustered_merge():
    a, b, both = sim.ClusteredMoments(), sim.ClusteredMoments(), sim.ClusteredMoments()
    for i, grp in enumerate([[1.0, 2.0], [3.0], [0.5, 0.5, 4.0], [2.0]]):
        (a if i % 2 else b).add_trial(grp)
        both.add_trial(grp)
    a.merge(b)
    assert a.clustered_se(4) == pytest.approx(both.clustered_se(4))


def test_single_trial_zero_variance(path3):
    stats = sim.run_monte_carlo(sim.Scenario(path3, trials=1, source=0, ells=[2]))
    assert stats.t_c.count == 1 and stats.t_c.std == 0.0
    assert all(m.std == 0.0 for m in stats.t_ell.values())


def test_full_mesh_total_time():
    sc = sim.Scenario(topo.gen_full_mesh(3), trials=10_000, seed=1)
    stats = sim.run_monte_carlo(sc, collect_buckets=False)
    assert abs(stats.t_c.mean - 1.5) <= 3 * stats.t_c.se


def test_bucket_pooling():
    g = topo.gen_poisson(100, 0.05, 2).largest_component()
    sc = sim.Scenario(g, [1, 5, 7, 30], trials=3, seed=2)
    stats = sim.run_monte_carlo(sc)
    total = sum(m.count for m in stats.buckets.values())
    assert total == sum(m.count for m in stats.by_d.values()) == 3 * (g.n - 1)
    rows = list(stats.bucket_rows())
    assert all(len(r) == 6 for r in rows)


def test_summary_files(tmp_path, path3):
    stats = sim.run_monte_carlo(sim.Scenario(path3, trials=4, seed=1, ells=[2]))
    payload = json.loads(stats.to_json())
    assert payload["trials"] == 4 and "2" in payload["t_ell"]
    path = tmp_path / "b.csv"
    stats.write_buckets_csv(path, header="seed=1")
    lines = path.read_text().splitlines()
    assert lines[0] == "# seed=1"
    assert lines[1] == "bucket_d,bucket_kprime,count,mean,se,se_trials"


def test_sweep_baseline_ratio_one():
    g = topo.gen_poisson(150, 0.04, 1).largest_component()
    base = sim.Scenario(g, trials=40, seed=5, ells=[15, 75], mode="dag")
    select = lambda k: topo.select_cluster(topo.ClusterSelection("random", k), g.n, seed=k)
    rows, stats = sim.normalized_sweep(base, [0, 10, 40], select)
    assert all(r.ratio == 1.0 for r in rows if r.k == 0)
    for r in rows:
        assert r.ratio <= 1 + 3 * r.ratio_se
    assert set(stats) == {0, 10, 40}
    with pytest.raises(DomainError):
        sim.normalized_sweep(base, [], select)


def test_sweep_csv(tmp_path):
    rows = [sim.SweepRow(0, "c", 2.0, 0.1, 1.0, 0.0)]
    path = tmp_path / "s.csv"
    sim.write_sweep_csv(rows, path)
    assert path.read_text().splitlines() == ["k,ell,mean,se,ratio", "0,c,2.0,0.1,1.0"]
