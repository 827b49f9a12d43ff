"""
Network-wide convergence as a birth chain
=========================================

Every AS without the update but next to one that has it is a candidate for
the next update.  Candidates pick it up at rate ``lam`` each, so the chain
moves faster when more of them exist.  Reaching any cluster member updates
the whole cluster at once.
"""

# %%
from sdnbgp import controlplane as cp

N = 1000
for k in (0, 10, 100, 500):
    sc = cp.chain_scenario(N, k)
    print(f"full mesh, k={k:3d}: E[T_c] = {cp.expected_tc(sc):.3f}")

# %%
# In a full mesh every non-updated AS is a candidate from the start, so the
# total time is a harmonic sum and a cluster barely helps.  Sparse graphs
# start with few candidates, which is where jumping ahead pays off.
sparse = cp.PoissonGraph(p=0.01)
base = cp.expected_t_partial([100, 500, 1000], cp.chain_scenario(N, 0, 1.0, sparse))
for k in (50, 100, 200, 500):
    t = cp.expected_t_partial([100, 500, 1000], cp.chain_scenario(N, k, 1.0, sparse))
    print(f"G(N, 0.01), k={k:3d}: time to 100/500/1000 ASes relative to no cluster:", (t / base).round(3))

# %%
# The full distribution is available through its moment generating function.
sc = cp.ChainScenario(200, 20, 1.0, sparse)
print("mean", cp.expected_tc(sc), "from MGF", cp.tc_moment(1, sc))
print("std ", cp.variance_tc(sc) ** 0.5)
