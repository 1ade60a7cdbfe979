# Centralized re-planning versus the negotiation protocol on three disruptions:
#   C5  a customer orders five more burger patties
#   T4  the seasoning supplier T4 goes offline
#   O1  the manufacturer O1 goes offline
#
# Run with:  python demos/02_compare_recovery.py
# %%
from supplynet import plan, reference_network
from supplynet.scenarios import SCENARIOS, ScenarioConfig, annotation_counts, report_text, run_scenario

base = plan(reference_network())
reports = [run_scenario(ScenarioConfig(event=name), base) for name in SCENARIOS]
print(report_text(reports))

# %%
# C_f and C_p are the flow and production cost deltas against the baseline,
# E_a counts newly opened edges, F_c counts surviving edges whose flow moved,
# and C_e counts messages.  The centralized count is a full state round trip.
for rep in reports:
    for method in ("centralized", "distributed"):
        print(rep.scenario, method, annotation_counts(rep, method))

# %% Centralized is cost-optimal but touches much more of the network
for rep in reports:
    c, d = rep.total_cost("centralized"), rep.total_cost("distributed")
    print(f"{rep.scenario}: centralized {c:.2f}  distributed {d:.2f}  premium {d - c:.2f}")
