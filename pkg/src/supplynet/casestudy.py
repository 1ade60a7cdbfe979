"""Reconstruction of the 23-entity beef supply chain used in the scenarios.

Eight tier suppliers, three OEMs, four distributors and eight customers.  Each
Beef Patty needs one Raw Beef, one Seasoning and one Package0; each Steak
needs one Raw Beef, one Seasoning and one Package1.  All OEMs make and stock
both end products; distributors stock both.

The topology is fixed.  Every edge is either *primary* (cheap, sized to the
demand it normally carries) or *backup* (pricier, generous capacity), which
is what makes the pre-disruption plan predictable.  Numbers are drawn from
the documented ranges below with a seeded generator; they are a
reconstruction, not published data.
"""
from __future__ import annotations

import numpy as np

from .network import EntityKind, ProductType, SupplyNetwork

PRODUCTS = (
    ProductType("RB", "RawBeef"),
    ProductType("SE", "Seasoning"),
    ProductType("P0", "Package0"),
    ProductType("P1", "Package1"),
    ProductType("BP", "BeefPatty"),
    ProductType("ST", "Steak"),
)
END_PRODUCTS = ("BP", "ST")
BOM = {("RB", "BP"): 1.0, ("SE", "BP"): 1.0, ("P0", "BP"): 1.0,
       ("RB", "ST"): 1.0, ("SE", "ST"): 1.0, ("P1", "ST"): 1.0}

SUPPLIES = {
    "T1": "RB", "T2": "RB", "T3": "RB",
    "T4": "SE", "T5": "SE",
    "T6": "P0", "T7": "P0",
    "T8": "P1",
}
# secondary products are supplied at backup prices; they give every component a second source
SECONDARY = {"T7": "P1"}
OEMS = ("O1", "O2", "O3")
DISTRIBUTORS = ("D1", "D2", "D3", "D4")
CUSTOMERS = tuple(f"C{n}" for n in range(1, 9))

# supplier -> OEMs reached by a primary edge; every other supplier/OEM pair is a backup edge
PRIMARY_SUPPLY = {
    "T1": ("O1",), "T2": ("O2",), "T3": ("O3",),
    "T4": ("O3",), "T5": ("O1", "O2"),
    "T6": ("O1", "O3"), "T7": ("O2",),
    "T8": ("O1", "O2", "O3"),
}
# T4 has no edge to O1/O2: its only outlet is O3
NO_EDGE = {("T4", "O1"), ("T4", "O2")}
PRIMARY_OEM_DIST = {("O1", "D1"), ("O1", "D2"), ("O2", "D2"), ("O2", "D3"),
                    ("O3", "D3"), ("O3", "D4")}
# customer -> (primary distributor, backup distributors)
CUSTOMER_LINKS = {
    "C1": ("D1", ("D2",)), "C2": ("D1", ("D2",)),
    "C3": ("D2", ("D1",)), "C4": ("D2", ("D3",)),
    "C5": ("D3", ("D2",)), "C6": ("D3", ("D4",)),
    "C7": ("D4", ("D3",)), "C8": ("D4", ("D3",)),
}
CUSTOMER_PRODUCTS = {
    "C1": ("BP", "ST"), "C2": ("BP",), "C3": ("ST",), "C4": ("BP", "ST"),
    "C5": ("BP",), "C6": ("ST",), "C7": ("BP", "ST"), "C8": ("BP",),
}

RANGES = {
    "demand": (15, 35),
    "c_primary": (1.0, 3.0), "c_backup": (4.0, 8.0),
    "f_primary": (5.0, 15.0), "f_backup": (10.0, 25.0),
    "q_slack_primary": (1.15, 1.35), "q_backup": (80.0, 140.0),
    "e_supplier": (1.0, 4.0), "e_oem": (5.0, 10.0),
    "phi": (10.0, 30.0), "h": (0.5, 2.0),
    "rho_d": 500.0, "rho_E": 50.0, "rho_V": 50.0,
    "capacity_slack": 1.5,
}


def _u(rng, lo_hi, digits=2):
    lo, hi = lo_hi
    return round(float(rng.uniform(lo, hi)), digits)


def build_case_study_network(seed: int = 0) -> SupplyNetwork:
    rng = np.random.default_rng(seed)
    vertices = {}
    vertices.update({t: EntityKind.SUPPLIER for t in SUPPLIES})
    vertices.update({o: EntityKind.OEM for o in OEMS})
    vertices.update({dd: EntityKind.DISTRIBUTOR for dd in DISTRIBUTORS})
    vertices.update({cc: EntityKind.CUSTOMER for cc in CUSTOMERS})

    d = {}
    for cust in CUSTOMERS:
        for k in CUSTOMER_PRODUCTS[cust]:
            d[(cust, k)] = float(rng.integers(*RANGES["demand"]))
    total = {k: sum(v for (_, kk), v in d.items() if kk == k) for k in END_PRODUCTS}

    edges, c, f, q = [], {}, {}, {}

    def add_edge(i, j, products, primary, expected, secondary=()):
        edges.append((i, j))
        tier = "primary" if primary else "backup"
        for k in products:
            c[(i, j, k)] = _u(rng, RANGES[f"c_{tier}"])
        for k in secondary:
            c[(i, j, k)] = _u(rng, RANGES["c_backup"])
        f[(i, j)] = _u(rng, RANGES[f"f_{tier}"])
        if primary:
            q[(i, j)] = float(np.ceil(expected * _u(rng, RANGES["q_slack_primary"])))
        else:
            q[(i, j)] = float(np.ceil(_u(rng, RANGES["q_backup"])))

    # expected flows, used only to size primary capacities
    dist_load = {dd: {k: 0.0 for k in END_PRODUCTS} for dd in DISTRIBUTORS}
    for cust, (prim, backups) in CUSTOMER_LINKS.items():
        for k in CUSTOMER_PRODUCTS[cust]:
            dist_load[prim][k] += d[(cust, k)]
    feeders = {dd: [o for o in OEMS if (o, dd) in PRIMARY_OEM_DIST] for dd in DISTRIBUTORS}
    oem_load = {o: {k: 0.0 for k in END_PRODUCTS} for o in OEMS}
    for dd in DISTRIBUTORS:
        for o in feeders[dd]:
            for k in END_PRODUCTS:
                oem_load[o][k] += dist_load[dd][k] / len(feeders[dd])
    oem_need = {o: {"RB": oem_load[o]["BP"] + oem_load[o]["ST"],
                    "SE": oem_load[o]["BP"] + oem_load[o]["ST"],
                    "P0": oem_load[o]["BP"], "P1": oem_load[o]["ST"]} for o in OEMS}

    for t, k in SUPPLIES.items():
        for o in OEMS:
            if (t, o) in NO_EDGE:
                continue
            primary = o in PRIMARY_SUPPLY[t]
            n_primary = sum(o in PRIMARY_SUPPLY[s] for s, kk in SUPPLIES.items() if kk == k)
            extra = (SECONDARY[t],) if t in SECONDARY else ()
            add_edge(t, o, (k,), primary, oem_need[o][k] / max(n_primary, 1), extra)
    for o in OEMS:
        for dd in DISTRIBUTORS:
            primary = (o, dd) in PRIMARY_OEM_DIST
            add_edge(o, dd, END_PRODUCTS, primary,
                     sum(dist_load[dd].values()) / max(len(feeders[dd]), 1))
    for cust, (prim, backups) in CUSTOMER_LINKS.items():
        load = sum(d[(cust, k)] for k in CUSTOMER_PRODUCTS[cust])
        for dd in (prim,) + backups:
            add_edge(dd, cust, CUSTOMER_PRODUCTS[cust], dd == prim, load)

    e, p_bar, phi, h = {}, {}, {}, {}
    slack = RANGES["capacity_slack"]
    all_end = total["BP"] + total["ST"]
    market = {"RB": all_end, "SE": all_end, "P0": total["BP"], "P1": total["ST"]}
    for t, k in SUPPLIES.items():
        e[(t, k)] = _u(rng, RANGES["e_supplier"])
        need = market[k]
        if t in SECONDARY:
            e[(t, SECONDARY[t])] = _u(rng, RANGES["e_supplier"])
            h[(t, SECONDARY[t])] = _u(rng, RANGES["h"])
            need += market[SECONDARY[t]]
        # each supplier alone could cover its whole market
        p_bar[t] = float(np.ceil(slack * need))
        phi[t] = _u(rng, RANGES["phi"])
        h[(t, k)] = _u(rng, RANGES["h"])
    for o in OEMS:
        for k in END_PRODUCTS:
            e[(o, k)] = _u(rng, RANGES["e_oem"])
        p_bar[o] = float(np.ceil(slack * all_end * 2 / len(OEMS)))
        phi[o] = _u(rng, RANGES["phi"])
        for k in ("RB", "SE", "P0", "P1", "BP", "ST"):
            h[(o, k)] = _u(rng, RANGES["h"])
    for dd in DISTRIBUTORS:
        for k in END_PRODUCTS:
            h[(dd, k)] = _u(rng, RANGES["h"])

    rho_d = {key: RANGES["rho_d"] for key in d}
    rho_E = {ed: RANGES["rho_E"] for ed in edges}
    rho_V = {v: RANGES["rho_V"] for v in p_bar}
    return SupplyNetwork(
        products=PRODUCTS, vertices=vertices, edges=tuple(edges), d=d, f=f, c=c, q=q,
        p_bar=p_bar, e=e, r=dict(BOM), phi=phi, I0={}, h=h, rho_d=rho_d, rho_E=rho_E,
        rho_V=rho_V,
    )
