"""Centralized planner: the global flow MILP and its disruption re-plan variant."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .milp import EQ, GE, LE, MilpProblem, MilpSolution, ModelBuilder, SolverConfig, solve
from .network import (
    FlowPlan, PlanDelta, SupplyNetwork, plan_delta, total_cost, validate_network,
)


class PlanningError(RuntimeError):
    """The planning model could not be solved to optimality."""


@dataclass(frozen=True)
class ReplanPenalties:
    rho_E: Mapping[tuple[str, str], float] = field(default_factory=dict)
    rho_V: Mapping[str, float] = field(default_factory=dict)
    ea_cap: int | None = None

    def __post_init__(self):
        if any(v < 0 for v in self.rho_E.values()) or any(v < 0 for v in self.rho_V.values()):
            raise ValueError("change penalties must be nonnegative")
        if self.ea_cap is not None and self.ea_cap < 0:
            raise ValueError("ea_cap must be >= 0")

    @classmethod
    def from_network(cls, net: SupplyNetwork, ea_cap: int | None = None) -> "ReplanPenalties":
        return cls(dict(net.rho_E), dict(net.rho_V), ea_cap)

    @classmethod
    def zero(cls) -> "ReplanPenalties":
        return cls()


def _y(i, j, k):
    return f"y[{i},{j},{k}]"


def _beta(i, j):
    return f"beta[{i},{j}]"


def _zeta(i):
    return f"zeta[{i}]"


def _add_base(mb: ModelBuilder, net: SupplyNetwork) -> None:
    problems = validate_network(net)
    if problems:
        raise ValueError(f"invalid network: {problems[0]}")
    balance: dict[tuple[str, str], dict[str, float]] = {}

    def term(key, name, coef):
        row = balance.setdefault(key, {})
        row[name] = row.get(name, 0.0) + coef

    for (i, j) in net.edges:
        b = mb.binary(_beta(i, j), cost=net.f.get((i, j), 0.0))
        load = {}
        for k in net.edge_products(i, j):
            y = mb.var(_y(i, j, k), cost=net.c[(i, j, k)])
            load[y] = 1.0
            term((j, k), y, 1.0)
            term((i, k), y, -1.0)
            if not net.usable((i, j)):
                mb.add({y: 1.0}, EQ, 0.0, f"lost_{y}")
        load[b] = -float(net.q.get((i, j), 0.0))
        mb.add(load, LE, 0.0, f"cap_{b}")
        if not net.usable((i, j)):
            mb.add({b: 1.0}, EQ, 0.0, f"lost_{b}")

    for v in net.vertices:
        made = net.producible(v)
        if made:
            z = mb.binary(_zeta(v), cost=net.phi.get(v, 0.0))
            row = {}
            for kp in made:
                p = mb.var(f"p[{v},{kp}]", cost=net.e[(v, kp)])
                row[p] = 1.0
                term((v, kp), p, 1.0)
                for k, rate in net.bom(kp).items():
                    term((v, k), p, -rate)
            row[z] = -net.capacity(v)
            mb.add(row, LE, 0.0, f"prod_{v}")
            if v in net.lost_vertices:
                mb.add({z: 1.0}, EQ, 0.0, f"lost_{z}")
        for k in net.stockable(v):
            inv = mb.var(f"I[{v},{k}]", cost=net.h[(v, k)])
            term((v, k), inv, -1.0)

    for (v, k), dem in net.d.items():
        x = mb.var(f"x[{v},{k}]", upper=float(dem))
        s = mb.var(f"short[{v},{k}]", cost=net.rho_d.get((v, k), 0.0))
        term((v, k), x, -1.0)
        mb.add({x: 1.0, s: 1.0}, GE, float(dem), f"unmet_{v}_{k}")

    for v in net.vertices:
        for k in net.product_ids:
            row = balance.get((v, k), {})
            rhs = -float(net.I0.get((v, k), 0.0))
            if row or rhs:
                mb.add(row, EQ, rhs, f"bal_{v}_{k}")


def build_base_model(net: SupplyNetwork) -> MilpProblem:
    """Global cost-minimizing flow model for one period."""
    mb = ModelBuilder()
    _add_base(mb, net)
    return mb.build()


def build_replan_model(net_disrupted: SupplyNetwork, baseline: FlowPlan,
                       pen: ReplanPenalties) -> MilpProblem:
    """Base model on the disrupted network plus usage-change penalties.

    ``dE[i,j] >= +-(beta - beta0)`` and ``dV[i] >= +-(zeta - zeta0)`` are
    binary and priced by ``pen``; with ``pen.ea_cap`` set, at most that many
    previously unused edges may be opened.
    """
    mb = ModelBuilder()
    _add_base(mb, net_disrupted)
    for (i, j) in net_disrupted.edges:
        b0 = float(baseline.beta.get((i, j), 0))
        dE = mb.binary(f"dE[{i},{j}]", cost=pen.rho_E.get((i, j), 0.0))
        b = _beta(i, j)
        mb.add({dE: 1.0, b: -1.0}, GE, -b0)
        mb.add({dE: 1.0, b: 1.0}, GE, b0)
    for v in net_disrupted.vertices:
        if _zeta(v) not in mb:
            continue
        z0 = float(baseline.zeta.get(v, 0))
        dV = mb.binary(f"dV[{v}]", cost=pen.rho_V.get(v, 0.0))
        mb.add({dV: 1.0, _zeta(v): -1.0}, GE, -z0)
        mb.add({dV: 1.0, _zeta(v): 1.0}, GE, z0)
    if pen.ea_cap is not None:
        new = {_beta(i, j): 1.0 for (i, j) in net_disrupted.edges
               if not baseline.beta.get((i, j), 0)}
        mb.add(new, LE, float(pen.ea_cap), "ea_cap")
    return mb.build()


def extract_plan(net: SupplyNetwork, sol: MilpSolution, baseline: FlowPlan | None = None) -> FlowPlan:
    vals = sol.values

    def clean(name):
        v = vals.get(name, 0.0)
        return 0.0 if abs(v) < 1e-9 else v

    y = {(i, j, k): clean(_y(i, j, k)) for (i, j, k) in net.c}
    beta = {(i, j): int(round(vals.get(_beta(i, j), 0.0))) for (i, j) in net.edges}
    p = {key: clean(f"p[{key[0]},{key[1]}]") for key in net.e}
    zeta = {v: int(round(vals[_zeta(v)])) for v in net.vertices if _zeta(v) in vals}
    inv = {key: clean(f"I[{key[0]},{key[1]}]") for key in net.h}
    x = {key: clean(f"x[{key[0]},{key[1]}]") for key in net.d}
    short = {key: max(0.0, net.d[key] - x[key]) for key in net.d}
    short = {key: (0.0 if s < 1e-9 else s) for key, s in short.items()}
    plan = FlowPlan(y, beta, x, p, zeta, inv, short)
    return FlowPlan(y, beta, x, p, zeta, inv, short, total_cost(net, plan, baseline))


def _solve(problem: MilpProblem, cfg: SolverConfig) -> MilpSolution:
    sol = solve(problem, cfg)
    if not sol.optimal:
        raise PlanningError(f"planning model is {sol.status.value}")
    return sol


def plan(net: SupplyNetwork, cfg: SolverConfig = SolverConfig()) -> FlowPlan:
    """Globally optimal flow plan for ``net``."""
    return extract_plan(net, _solve(build_base_model(net), cfg))


def replan(net_disrupted: SupplyNetwork, baseline: FlowPlan, pen: ReplanPenalties,
           cfg: SolverConfig = SolverConfig()) -> tuple[FlowPlan, PlanDelta]:
    problem = build_replan_model(net_disrupted, baseline, pen)
    new = extract_plan(net_disrupted, _solve(problem, cfg), baseline)
    return new, plan_delta(baseline, new, net_disrupted)


def centralized_comm_effort(net: SupplyNetwork, delta: PlanDelta | None) -> int:
    """One re-run request, a request/response pair per entity, one notice per changed entity."""
    changed = len(delta.changed_entities) if delta is not None else 0
    return 1 + 2 * len(net.vertices) + changed
