# Baseline planning on the burger-and-steak reference network.
#
# Run with:  python demos/01_baseline_plan.py
# %%
from collections import Counter

from supplynet import plan, reference_network, total_cost
from supplynet.scenarios import summarize

net = reference_network()
kinds = Counter(k.value for k in net.vertices.values())
print("vertices:", dict(kinds), "edges:", len(net.edges), "products:", net.product_ids)

# %% Bill of materials for the two finished goods
for k in ("BP", "ST"):
    print(k, "<-", net.bom(k))

# %%
# The base model minimizes fixed edge/vertex cost plus per-unit transport,
# production and holding, subject to flow balance and capacities.
base = plan(net)
s = summarize(net, base)
print(f"total cost {s.total_cost:.2f}  (flow {s.flow_cost:.2f}, production {s.production_cost:.2f})")
print(f"edges in use {s.used_edges}/{len(net.edges)}, open vertices {s.open_vertices}, unmet {s.unmet_demand:g}")

# %% Where do the finished goods come from?
for (i, k), v in sorted(base.p.items()):
    if v > 0 and k in ("BP", "ST"):
        print(f"  {i} makes {v:g} x {k}")

# %% The cost breakdown is recomputed independently of the solver objective
print(total_cost(net, base))
