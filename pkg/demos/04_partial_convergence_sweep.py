"""
Partial convergence on a scale-free graph
=========================================

How long until the first 10%, half, and all of the ASes hold a new route,
as the cluster grows?  The chain model replaces the real graph with a
random graph of the same density; here it is compared with direct
simulation.
"""

# %%
from sdnbgp import controlplane as cp
from sdnbgp import simulator as sim
from sdnbgp import timemodel as tm
from sdnbgp import topology as topo

graph = topo.gen_barabasi_albert(1000, 5, seed=1)
density = 2 * graph.number_of_edges() / (graph.n * (graph.n - 1))
ells = [100, 500, 1000]

# %%
# Candidates are ASes one hop further from the source than some updated AS.
base = sim.Scenario(graph, mode="dag", trials=100, seed=1, ells=ells)
select = lambda k: topo.select_cluster(topo.ClusterSelection("random", k), graph.n, seed=k)
rows, stats = sim.normalized_sweep(base, [0, 50, 100, 200, 500], select)

# %%
model = cp.PoissonGraph(density)
ref = cp.expected_t_partial(ells, cp.chain_scenario(graph.n, 0, 1.0, model))
print("  k   ell  simulated  chain model")
for r in rows:
    if r.ell == "c":
        continue
    chain = cp.expected_t_partial(r.ell, cp.chain_scenario(graph.n, r.k, 1.0, model)) / ref[ells.index(r.ell)]
    print(f"{r.k:4d} {r.ell:5d}  {r.ratio:8.3f}  {chain:10.3f}")
