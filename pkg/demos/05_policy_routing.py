"""
Routing under business relationships
====================================

Real inter-domain routes follow customer/provider/peer agreements: an AS
prefers routes learned from customers, passes peer and provider routes
only to its customers, and ties go to the shorter path.  This demo builds a
small labeled topology, routes over it, and picks a cluster by centrality.
"""

# %%
import tempfile
from pathlib import Path

from sdnbgp import dataplane as dp
from sdnbgp import topology as topo

text = """# as1|as2|rel  (-1: as1 provides as2, 0: peers)
10|20|0
10|30|0
20|30|0
10|100|-1
10|101|-1
20|102|-1
20|103|-1
30|104|-1
100|200|-1
101|201|-1
103|202|-1
104|203|-1
104|204|-1
"""
path = Path(tempfile.mkdtemp()) / "rel.txt"
path.write_text(text)
graph = topo.assign_local_prefs(topo.load_caida_asrel(path), seed=1)
asn = {int(a): i for i, a in enumerate(graph.asns)}
print(graph)

# %%
# Routes towards AS 203, printed as AS numbers.
tree = topo.compute_policy_paths(graph, asn[203])
for a in (200, 201, 202, 30, 10):
    hops = tree.path(asn[a])
    print(a, "->", [int(graph.asns[v]) for v in hops], "valley-free:", topo.is_valley_free(graph, hops))

# %%
# Centrality from sampled routing trees, then the most central cluster.
sample = topo.sample_paths(graph, 500, seed=2)
profile = sample.profile()
cluster = topo.select_cluster(topo.ClusterSelection("betweenness", 3), graph.n, profile)
print("cluster:", [int(graph.asns[v]) for v in cluster])
omega = dp.omega_ratio(profile, cluster)
lengths = sample.length_distribution()
for name, dist in (("random", dp.Hypergeometric(graph.n, 3)), ("central", dp.FisherNoncentral(graph.n, 3, omega))):
    lo, hi = dp.normalized_bounds(lengths, dist)
    print(f"{name:8s} cluster: normalized connectivity time in [{lo:.2f}, {hi:.2f}]")
