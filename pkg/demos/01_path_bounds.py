"""
How much faster does one path reconnect?
========================================

A path of ``d`` AS hops reconnects once every AS on it holds the new route.
Cluster members learn it from the controller instead of hop by hop, so the
more of them sit on the path, the sooner it reconnects.
"""

# %%
# Bounds for a single path, in units of the mean per-hop update time.
from sdnbgp import dataplane as dp

d = 5
for kprime in range(d + 2):
    print(f"k'={kprime}: between {dp.lb(d, kprime):.2f} and {dp.ub(d, kprime):.2f}")

# %%
# How many members land on a path depends on how the cluster was chosen.
# A random cluster of 200 out of 1000 ASes gives a hypergeometric count.
random_pick = dp.Hypergeometric(1000, 200)
print(random_pick.pmf(d).round(4))

# %%
# A cluster of central ASes is more likely to sit on paths.  The odds ratio
# is the mean centrality inside the cluster over the mean outside.
central_pick = dp.FisherNoncentral(1000, 200, omega=4.0)
print(central_pick.pmf(d).round(4))

# %%
# Averaging the bounds over k' and normalizing by the no-cluster value ``d``
# gives the table of relative speed-ups for short and long paths.
print("d    k   upper  lower")
for d in (2, 5):
    for k in (20, 50, 100, 200):
        lo, hi = dp.tsd_bounds_given_d(d, dp.Hypergeometric(1000, k))
        print(f"{d}  {k:4d}  {hi / d:6.1%} {lo / d:6.1%}")

# %%
# Over a whole population of paths the lengths are mixed.
lengths = dp.PathLengthDistribution({2: 0.2, 3: 0.45, 4: 0.25, 5: 0.1})
for omega in (1.0, 4.0, 20.0):
    lo, hi = dp.normalized_bounds(lengths, dp.FisherNoncentral(1000, 50, omega))
    print(f"omega={omega:5.1f}: normalized time in [{lo:.3f}, {hi:.3f}]")
