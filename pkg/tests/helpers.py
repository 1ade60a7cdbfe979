"""Instance generators and independent checkers shared by the test modules."""
from __future__ import annotations

import itertools
import math

import numpy as np

from supplynet.milp import BINARY, CONTINUOUS, EQ, GE, LE, Constraint, Variable, build
from supplynet.network import (
    EntityKind, FlowPlan, ProductType, SupplyNetwork, capacity_violations, max_residual,
)


# -- MILPs ---------------------------------------------------------------------

def random_milp(rng: np.random.Generator, max_bin=8, max_cont=12, max_rows=15, feasible=True):
    """Random MILP; with ``feasible`` the rows are built around a known integral point."""
    nb = int(rng.integers(0, max_bin + 1))
    nc = int(rng.integers(1, max_cont + 1))
    m = int(rng.integers(1, max_rows + 1))
    names = [f"b{i}" for i in range(nb)] + [f"x{i}" for i in range(nc)]
    point = np.concatenate([rng.integers(0, 2, nb).astype(float), rng.uniform(0, 5, nc)])
    variables = [Variable(f"b{i}", BINARY) for i in range(nb)]
    for i in range(nc):
        up = None if rng.random() < 0.3 else float(np.ceil(point[nb + i] + rng.uniform(0, 4)))
        variables.append(Variable(f"x{i}", CONTINUOUS, up))
    cons = []
    for _ in range(m):
        mask = rng.random(nb + nc) < 0.5
        if not mask.any():
            mask[rng.integers(nb + nc)] = True
        coef = np.where(mask, rng.integers(-5, 6, nb + nc), 0).astype(float)
        act = float(coef @ point)
        sense = rng.choice([LE, GE, EQ], p=[0.45, 0.45, 0.1])
        if not feasible:
            rhs = float(rng.integers(-20, 21))
        elif sense == LE:
            rhs = act + float(rng.uniform(0, 3))
        elif sense == GE:
            rhs = act - float(rng.uniform(0, 3))
        else:
            rhs = act
        cons.append(Constraint({n: c for n, c in zip(names, coef) if c}, str(sense), rhs))
    # keep most instances bounded: nonnegative costs on uncapped continuous variables
    obj = {}
    for v in variables:
        lo = 0 if (v.kind == CONTINUOUS and v.upper is None and rng.random() < 0.8) else -10
        obj[v.name] = float(rng.integers(lo, 11))
    return build(variables, cons, obj)


def max_violation(problem, values) -> float:
    worst = 0.0
    for con in problem.constraints:
        act = sum(c * values[n] for n, c in con.coeffs.items())
        scale = 1.0 + abs(con.rhs)
        if con.sense == LE:
            worst = max(worst, (act - con.rhs) / scale)
        elif con.sense == GE:
            worst = max(worst, (con.rhs - act) / scale)
        else:
            worst = max(worst, abs(act - con.rhs) / scale)
    for v in problem.variables:
        x = values[v.name]
        worst = max(worst, -x)
        hi = 1.0 if v.is_binary else v.upper
        if hi is not None:
            worst = max(worst, x - hi)
    return worst


def vertex_enumeration_lp(c, A, senses, b, upper):
    """Independent LP oracle: best objective over all basic feasible points.

    Every constraint (rows, x >= 0, finite upper bounds) is written as
    ``g.x <= h``; each nonsingular choice of n of them is a candidate
    vertex.  Returns (status, objective); unboundedness is detected by a
    large-box re-solve.
    """
    n = len(c)
    G, h = [], []
    for row, s, rhs in zip(A, senses, b):
        if s in (LE, EQ):
            G.append(row), h.append(rhs)
        if s in (GE, EQ):
            G.append(-row), h.append(-rhs)
    for j in range(n):
        e = np.zeros(n)
        e[j] = -1.0
        G.append(e), h.append(0.0)
    box = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        box.append((e, upper[j] if math.isfinite(upper[j]) else None))
    G, h = np.array(G), np.array(h)

    def best(bigM):
        GG, hh = list(G), list(h)
        for e, u in box:
            GG.append(e), hh.append(u if u is not None else bigM)
        GG, hh = np.array(GG), np.array(hh)
        val = math.inf
        for rows in itertools.combinations(range(len(GG)), n):
            M = GG[list(rows)]
            if abs(np.linalg.det(M)) < 1e-9:
                continue
            x = np.linalg.solve(M, hh[list(rows)])
            if np.all(GG @ x <= hh + 1e-7):
                val = min(val, float(c @ x))
        return val

    v1 = best(1e4)
    if v1 == math.inf:
        return "infeasible", math.nan
    v2 = best(1e5)
    if v2 < v1 - 1e-6:
        return "unbounded", math.nan
    return "optimal", v1


# -- supply networks -----------------------------------------------------------

PRODUCTS = (ProductType("A"), ProductType("B"), ProductType("P"))
BOM = {("A", "P"): 1.0, ("B", "P"): 2.0}


def random_network(rng: np.random.Generator, n_sup=2, n_oem=2, n_cust=2) -> SupplyNetwork:
    """Three-echelon toy: suppliers make A or B, OEMs assemble P = A + 2B, customers buy P."""
    sup = [f"S{i}" for i in range(n_sup)]
    oem = [f"O{i}" for i in range(n_oem)]
    cust = [f"C{i}" for i in range(n_cust)]
    vertices = {**{s: EntityKind.SUPPLIER for s in sup}, **{o: EntityKind.OEM for o in oem},
                **{c: EntityKind.CUSTOMER for c in cust}}
    edges, c, f, q = [], {}, {}, {}
    e, p_bar, phi, h, d = {}, {}, {}, {}, {}
    for n, s in enumerate(sup):
        made = ("A", "B")[n % 2]
        e[(s, made)] = round(float(rng.uniform(1, 4)), 2)
        if n >= 2 or rng.random() < 0.3:
            other = ("B", "A")[n % 2]
            e[(s, other)] = round(float(rng.uniform(2, 6)), 2)
        p_bar[s] = float(rng.integers(40, 120))
        phi[s] = round(float(rng.uniform(5, 20)), 2)
        for o in oem:
            edges.append((s, o))
            for k in (k for (v, k) in e if v == s):
                c[(s, o, k)] = round(float(rng.uniform(1, 5)), 2)
            f[(s, o)] = round(float(rng.uniform(5, 20)), 2)
            q[(s, o)] = float(rng.integers(20, 80))
    for o in oem:
        e[(o, "P")] = round(float(rng.uniform(3, 8)), 2)
        p_bar[o] = float(rng.integers(20, 60))
        phi[o] = round(float(rng.uniform(5, 20)), 2)
        for k in ("A", "B", "P"):
            h[(o, k)] = round(float(rng.uniform(0.2, 2)), 2)
        for cc in cust:
            edges.append((o, cc))
            c[(o, cc, "P")] = round(float(rng.uniform(1, 5)), 2)
            f[(o, cc)] = round(float(rng.uniform(5, 20)), 2)
            q[(o, cc)] = float(rng.integers(10, 40))
    for cc in cust:
        d[(cc, "P")] = float(rng.integers(5, 25))
    return SupplyNetwork(
        products=PRODUCTS, vertices=vertices, edges=tuple(edges), d=d, f=f, c=c, q=q,
        p_bar=p_bar, e=e, r=dict(BOM), phi=phi, h=h,
        rho_d={key: 200.0 for key in d},
        rho_E={ed: float(rng.integers(5, 40)) for ed in edges},
        rho_V={v: float(rng.integers(5, 40)) for v in p_bar},
    )


def chain_network(d=5.0, q=10.0, c=2.0, f=10.0) -> SupplyNetwork:
    """One supplier making A, one customer, one edge."""
    return SupplyNetwork(
        products=(ProductType("A"),),
        vertices={"S": EntityKind.SUPPLIER, "C": EntityKind.CUSTOMER},
        edges=(("S", "C"),), d={("C", "A"): d}, f={("S", "C"): f}, c={("S", "C", "A"): c},
        q={("S", "C"): q}, p_bar={"S": 100.0}, e={("S", "A"): 1.0}, phi={"S": 3.0},
        rho_d={("C", "A"): 100.0}, rho_E={("S", "C"): 10.0}, rho_V={"S": 10.0},
    )


def plan_problems(net: SupplyNetwork, plan: FlowPlan, tol=1e-6) -> list[str]:
    """Balance, capacity and exact beta/zeta implication checks."""
    out = []
    r = max_residual(net, plan)
    if r > tol:
        out.append(f"flow balance residual {r:g}")
    out += capacity_violations(net, plan, tol)
    for (i, j, k), v in plan.y.items():
        if v > 0 and plan.beta.get((i, j), 0) != 1:
            out.append(f"y{(i, j, k)} > 0 with beta = 0")
    for (i, k), v in plan.p.items():
        if v > 0 and plan.zeta.get(i, 0) != 1:
            out.append(f"p{(i, k)} > 0 with zeta = 0")
    for val in list(plan.beta.values()) + list(plan.zeta.values()):
        if val not in (0, 1):
            out.append(f"indicator {val!r} not 0/1")
    return out
