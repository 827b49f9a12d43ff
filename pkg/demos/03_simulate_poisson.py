"""
Checking the path bounds by simulation
======================================

Propagate announcements over a sparse random graph, record for every
destination when its whole path holds the route, and compare per-bucket
averages with the analytic bounds.
"""

# %%
from sdnbgp import dataplane as dp
from sdnbgp import simulator as sim
from sdnbgp import timemodel as tm
from sdnbgp import topology as topo

graph = topo.gen_poisson(1000, 0.005, seed=1).largest_component()
print(graph)

# %%
# A random cluster of 100 ASes, exponential hop delays with mean 1, and
# an instantaneous controller.
cluster = topo.select_cluster(topo.ClusterSelection("random", 100), graph.n, seed=7)
scenario = sim.Scenario(graph, cluster, tm.Exponential(1.0), trials=100, seed=3)
stats = sim.run_monte_carlo(scenario)

# %%
# Each bucket groups destinations by path length and members on the path.
# The error bar treats trials as independent units, because destinations
# in one trial share the delays of their common path prefix.
print(" d  k'   count   mean    LB    UB")
for d, kp, count, mean, _, se in stats.bucket_rows():
    if count >= 50:
        print(f"{d:2d} {kp:2d} {count:7d} {mean:6.3f} {dp.lb(d, kp):5.2f} {dp.ub(d, kp):5.2f}  +-{3 * se:.3f}")

# %%
# Replaying the same trials without the cluster gives the baseline; both
# runs share their hop delays, so the difference is the cluster's effect.
baseline = sim.run_monte_carlo(scenario.with_cluster(()))
for d in (2, 5):
    print(f"d={d}: {sim.tsd_ratio_by_d({0: baseline, 100: stats}, 100, d):.1%} of the no-cluster time")
