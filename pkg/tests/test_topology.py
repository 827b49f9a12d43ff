import bz2
import itertools

import numpy as np
import pytest

from sdnbgp import topology as topo
from sdnbgp.errors import ConflictError, DomainError, MissingProfile, ParseError, UnlabeledGraph

from oracles import (brute_betweenness, first_hop_class, path_vector_fixed_point, random_hierarchy,
                     valley_free_paths)


# -- graph container -------------------------------------------------------

def test_graph_rejects_self_loop_and_duplicates():
    with pytest.raises(DomainError):
        topo.AsGraph(3, [(0, 0)])
    with pytest.raises(DomainError):
        topo.AsGraph(3, [(0, 1), (1, 0)])


def test_graph_labels_all_or_nothing():
    with pytest.raises(DomainError):
        topo.AsGraph(3, [(0, 1), (1, 2)], [topo.C2P])
    with pytest.raises(DomainError):
        topo.AsGraph(3, [(0, 1)], ["sibling"])


def test_relationship_lists():
    g = topo.AsGraph(3, [(0, 1), (1, 2)], [topo.C2P, topo.P2P])
    assert list(g.providers[0]) == [1] and list(g.customers[1]) == [0]
    assert list(g.peers[1]) == [2] and list(g.peers[2]) == [1]


def test_networkx_round_trip():
    g = topo.gen_poisson(60, 0.1, 3)
    h = topo.AsGraph.from_networkx(g.to_networkx())
    assert h.edge_set() == g.edge_set()
    assert h.graph_hash() == topo.AsGraph(g.n, sorted(g.edge_set())).graph_hash()


def test_edgelist_csv_round_trip(tmp_path):
    g = topo.AsGraph(4, [(0, 1), (1, 2), (2, 3)], [topo.C2P, topo.P2P, topo.C2P])
    path = tmp_path / "g.csv"
    g.write_edgelist_csv(path)
    assert path.read_text().splitlines()[0] == "u,v,label"
    h = topo.AsGraph.read_edgelist_csv(path)
    assert h.graph_hash() == g.graph_hash()


def test_largest_component_and_subgraph():
    g = topo.AsGraph(6, [(0, 1), (1, 2), (4, 5)])
    assert [len(c) for c in g.components()] == [3, 2, 1]
    lcc = g.largest_component()
    assert lcc.n == 3 and lcc.is_connected()


def test_prune_drops_stubs_and_low_degree():
    # clique of providers 0..3 (peers), each with one stub customer
    edges = [(u, v) for u, v in itertools.combinations(range(4), 2)]
    labels = [topo.P2P] * len(edges)
    for stub, prov in zip(range(4, 8), range(4)):
        edges.append((stub, prov))
        labels.append(topo.C2P)
    g = topo.AsGraph(8, edges, labels)
    pruned = g.prune(min_degree=3)
    assert pruned.n == 4
    assert (pruned.degrees() >= 3).all()


# -- generators ------------------------------------------------------------

@pytest.mark.parametrize("N, m", [(1, 0), (3, 3), (100, 4950)])
def test_full_mesh_edges(N, m):
    assert topo.gen_full_mesh(N).number_of_edges() == m


def test_poisson_extremes():
    assert topo.gen_poisson(30, 0.0, 1).number_of_edges() == 0
    assert topo.gen_poisson(30, 1.0, 1).number_of_edges() == 435


def test_poisson_edge_count():
    m = topo.gen_poisson(1000, 0.005, 7).number_of_edges()
    assert abs(m - 2497.5) <= 4 * 49.9


def test_generators_deterministic():
    assert topo.gen_poisson(200, 0.02, 9).graph_hash() == topo.gen_poisson(200, 0.02, 9).graph_hash()
    assert topo.gen_poisson(200, 0.02, 9).graph_hash() != topo.gen_poisson(200, 0.02, 10).graph_hash()


def test_barabasi_albert_degree():
    g = topo.gen_barabasi_albert(1000, 5, 1)
    assert 9.5 <= g.degrees().mean() <= 10.5


def test_barabasi_albert_heavy_tail():
    for seed in range(10):
        deg = topo.gen_barabasi_albert(1000, 5, seed).degrees()
        assert deg.max() >= 5 * np.median(deg)


def test_small_world_lattice():
    g = topo.gen_small_world(30, 4, 0.0, 1)
    assert (g.degrees() == 4).all()


# -- CAIDA format ----------------------------------------------------------

def test_caida_parse(tmp_path):
    path = tmp_path / "rel.txt"
    path.write_text("# source: test\n1|2|-1\n2|3|0\n")
    g = topo.load_caida_asrel(path)
    assert g.n == 3 and list(g.asns) == [1, 2, 3]
    assert list(g.providers[1]) == [0]  # AS 2 is customer of AS 1
    assert list(g.peers[1]) == [2]


def test_caida_comment_only(tmp_path):
    path = tmp_path / "rel.txt"
    path.write_text("# nothing here\n")
    assert topo.load_caida_asrel(path).n == 0


@pytest.mark.parametrize("line, err", [("1|2|7", ParseError), ("1|1|0", ParseError),
                                       ("1|x|0", ParseError), ("1|2", ParseError)])
def test_caida_bad_lines(tmp_path, line, err):
    path = tmp_path / "rel.txt"
    path.write_text(line + "\n")
    with pytest.raises(err):
        topo.load_caida_asrel(path)


def test_caida_conflict(tmp_path):
    path = tmp_path / "rel.txt"
    path.write_text("1|2|-1\n2|1|-1\n")
    with pytest.raises(ConflictError):
        topo.load_caida_asrel(path)


def test_caida_bz2_and_round_trip(tmp_path):
    g = random_hierarchy(np.random.default_rng(3), 12)
    plain = tmp_path / "rel.txt"
    topo.write_caida_asrel(g, plain)
    packed = tmp_path / "rel.txt.bz2"
    packed.write_bytes(bz2.compress(plain.read_bytes()))
    h = topo.load_caida_asrel(packed)
    # isolated nodes disappear; compare relationships on AS numbers
    rel = lambda gr: {(int(gr.asns[u]) if gr.asns is not None else u,
                       int(gr.asns[v]) if gr.asns is not None else v, lab)
                      for (u, v), lab in zip(gr.edges, gr.labels)}
    assert rel(h) == rel(g)


# -- local preferences -----------------------------------------------------

def test_local_prefs_are_permutations():
    g = topo.assign_local_prefs(topo.gen_poisson(80, 0.08, 2), 5)
    for u in range(g.n):
        deg = len(g.neighbors(u))
        assert sorted(g.pref(u, v) for v in g.neighbors(u)) == list(range(1, deg + 1))


def test_local_prefs_single_neighbor_and_determinism():
    g = topo.AsGraph(2, [(0, 1)])
    assert topo.assign_local_prefs(g, 1).pref(0, 1) == 1
    a = topo.assign_local_prefs(topo.gen_poisson(50, 0.1, 1), 9)
    b = topo.assign_local_prefs(topo.gen_poisson(50, 0.1, 1), 9)
    assert all((a.local_pref[u] == b.local_pref[u]).all() for u in range(50))


# -- policy routing --------------------------------------------------------

def test_policy_chain():
    g = topo.AsGraph(3, [(0, 1), (1, 2)], [topo.C2P, topo.C2P])
    tree = topo.compute_policy_paths(g, 2)
    assert tree.path(0) == [0, 1, 2]
    assert topo.is_valley_free(g, tree.path(0))
    assert tree.route_class[0] == topo.FROM_PROVIDER
    assert topo.compute_policy_paths(g, 0).route_class[2] == topo.FROM_CUSTOMER


def test_policy_square_uses_at_most_one_peer_edge():
    A, B, C, D = range(4)
    g = topo.AsGraph(4, [(A, B), (B, C), (D, A), (D, C)], [topo.P2P, topo.P2P, topo.C2P, topo.C2P])
    assert not topo.is_valley_free(g, [C, B, A, D])
    tree = topo.compute_policy_paths(g, D)
    assert tree.path(B) in ([B, A, D], [B, C, D])
    assert tree.route_class[B] == topo.FROM_PEER
    assert tree.path(C) == [C, D]


def test_policy_needs_labels():
    with pytest.raises(UnlabeledGraph):
        topo.compute_policy_paths(topo.gen_full_mesh(3), 0)


def test_policy_unreachable_through_valley():
    # 0 and 2 are providers of 1; 0 cannot reach 2 through its customer
    g = topo.AsGraph(3, [(1, 0), (1, 2)], [topo.C2P, topo.C2P])
    tree = topo.compute_policy_paths(g, 2)
    assert tree.path(0) is None and tree.route_class[0] == topo.UNREACHABLE


@pytest.mark.parametrize("seed", range(20))
def test_policy_paths_match_path_vector(seed):
    rng = np.random.default_rng(seed)
    g = random_hierarchy(rng, int(rng.integers(4, 11)))
    g = topo.assign_local_prefs(g, seed)
    for origin in range(g.n):
        tree = topo.compute_policy_paths(g, origin)
        ref = path_vector_fixed_point(g, origin)
        for v in range(g.n):
            if v in ref:
                assert tree.path(v) == list(ref[v][1])
                assert tree.route_class[v] == ref[v][0]
            else:
                assert tree.path(v) is None


@pytest.mark.parametrize("seed", range(20, 30))
def test_policy_classes_against_enumeration(seed):
    rng = np.random.default_rng(seed)
    g = random_hierarchy(rng, 8)
    for origin in range(g.n):
        tree = topo.compute_policy_paths(g, origin)
        for v in range(g.n):
            if v == origin:
                continue
            paths = valley_free_paths(g, v, origin)
            if not paths:
                assert tree.path(v) is None
                continue
            best = min(first_hop_class(g, p) for p in paths)
            assert tree.route_class[v] == best
            assert topo.is_valley_free(g, tree.path(v))
            if best != topo.FROM_PROVIDER:
                assert tree.dist[v] == min(len(p) - 1 for p in paths if first_hop_class(g, p) == best)


# -- shortest paths and centrality ----------------------------------------

def test_shortest_paths_full_mesh():
    sp = topo.shortest_paths(topo.gen_full_mesh(6), 2)
    assert sorted(sp.dist.tolist()) == [0, 1, 1, 1, 1, 1]


def test_shortest_paths_line(path3):
    sp = topo.shortest_paths(path3, 0)
    assert sp.dist[2] == 2
    assert sorted(zip(sp.dag_src.tolist(), sp.dag_dst.tolist())) == [(0, 1), (1, 2)]


def test_shortest_path_dag_complete():
    g = topo.gen_poisson(120, 0.05, 4)
    sp = topo.shortest_paths(g, 0)
    for u, v in zip(sp.dag_src, sp.dag_dst):
        assert sp.dist[v] == sp.dist[u] + 1
    expected = sum(1 for u, v in g.edges if sp.dist[u] >= 0 and abs(sp.dist[u] - sp.dist[v]) == 1)
    assert len(sp.dag_src) == expected


def test_poisson_mean_distance():
    means = []
    for seed in range(10):
        g = topo.gen_poisson(1000, 0.005, seed).largest_component()
        d = topo.shortest_paths(g, 0).dist
        means.append(d[d > 0].mean())
    assert 3 <= np.mean(means) <= 5


@pytest.mark.parametrize("seed", range(6))
def test_betweenness_brute_force(seed):
    g = topo.gen_poisson(30 + 4 * seed, 0.12, seed).largest_component()
    np.testing.assert_allclose(topo.betweenness(g).values, brute_betweenness(g), atol=1e-9)


def test_betweenness_shapes(path3):
    star = topo.AsGraph(5, [(0, i) for i in range(1, 5)])
    b = topo.betweenness(star).values
    assert b[0] == b.max() and (b[1:] == 0).all()
    np.testing.assert_allclose(topo.betweenness(path3).values, [0, 1, 0])
    c4 = topo.AsGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert len(set(np.round(topo.betweenness(c4).values, 12))) == 1


def test_path_sample_betweenness_counts():
    prof = topo.path_sample_betweenness(4, [[0, 1, 2], [3, 1, 0], [0, 3]])
    np.testing.assert_allclose(prof.values, [0, 2 / 3, 0, 0])


def test_sampled_intermediates_match_explicit_paths():
    g = topo.gen_poisson(70, 0.07, 8).largest_component()
    sample = topo.sample_paths(g, 500, 3)
    counts = np.zeros(g.n)
    lengths = []
    for origin in sample.origins:
        tree = topo.routing_tree(g, int(origin))
        for v in np.flatnonzero(tree.dist > 0):
            p = tree.path(int(v))
            lengths.append(len(p) - 1)
            for w in p[1:-1]:
                counts[w] += 1
    np.testing.assert_array_equal(sample.intermediate, counts)
    assert sorted(sample.lengths.tolist()) == sorted(lengths)
    assert sample.n_paths >= 500


def test_path_length_distribution_inputs():
    assert topo.path_length_distribution([[0, 1, 2, 3]] * 3).probs == {3: 1.0}
    assert topo.path_length_distribution([2, 2, 5, 5]).probs == {2: 0.5, 5: 0.5}


# -- cluster selection -----------------------------------------------------

def test_select_all_nodes():
    np.testing.assert_array_equal(topo.select_cluster(topo.ClusterSelection("random", 7), 7, seed=2), np.arange(7))


def test_select_star_center():
    star = topo.AsGraph(6, [(3, i) for i in range(6) if i != 3])
    prof = topo.betweenness(star)
    assert topo.select_cluster(topo.ClusterSelection("betweenness", 1), 6, prof).tolist() == [3]


def test_select_random_reproducible():
    sel = topo.ClusterSelection("random", 10)
    a = topo.select_cluster(sel, 100, seed=4)
    assert a.tolist() == topo.select_cluster(sel, 100, seed=4).tolist()
    assert len(set(a.tolist())) == 10


def test_select_ties_lowest_id():
    prof = topo.betweenness(topo.AsGraph(4, [(0, 1), (1, 2), (2, 3), (3, 0)]))
    assert topo.select_cluster(topo.ClusterSelection("betweenness", 2), 4, prof).tolist() == [0, 1]


def test_select_errors():
    with pytest.raises(MissingProfile):
        topo.select_cluster(topo.ClusterSelection("betweenness", 2), 10)
    with pytest.raises(DomainError):
        topo.select_cluster(topo.ClusterSelection("random", 11), 10)
    with pytest.raises(DomainError):
        topo.ClusterSelection("degree", 3)


def test_centrality_csv_round_trip(tmp_path):
    prof = topo.betweenness(topo.gen_poisson(40, 0.15, 1).largest_component())
    path = tmp_path / "c.csv"
    topo.write_centrality_csv(prof, path, header="test")
    np.testing.assert_array_equal(topo.read_centrality_csv(path).values, prof.values)
