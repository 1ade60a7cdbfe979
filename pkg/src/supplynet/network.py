"""Supply network, flow plans, disruptions, costs and plan deltas.

Quantities follow one sign convention throughout: demands ``d`` and satisfied
demand ``x`` are nonnegative magnitudes with ``0 <= x <= d`` and the
shortfall is ``d - x``.  The per-vertex, per-product balance reads::

    inflow - outflow + produced - consumed_by_bom = x + (I - I0)

Parameters are sparse mappings keyed by tuples.  Keys double as capability
declarations: an edge carries product ``k`` only if ``c[(i, j, k)]`` exists,
a vertex can produce ``k`` only if ``e[(i, k)]`` exists and can stock ``k``
only if ``h[(i, k)]`` exists.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

TOL = 1e-6

Edge = tuple[str, str]


class EntityKind(str, enum.Enum):
    CUSTOMER = "Customer"
    DISTRIBUTOR = "Distributor"
    OEM = "OEM"
    SUPPLIER = "TierSupplier"


@dataclass(frozen=True)
class ProductType:
    id: str
    name: str = ""


class PlanShapeError(ValueError):
    """A plan references indices the network does not define."""


class DisruptionError(ValueError):
    """A disruption event references an unknown vertex, edge or product."""


@dataclass(frozen=True)
class SupplyNetwork:
    products: tuple[ProductType, ...]
    vertices: Mapping[str, EntityKind]
    edges: tuple[Edge, ...]
    d: Mapping[tuple[str, str], float] = field(default_factory=dict)
    f: Mapping[Edge, float] = field(default_factory=dict)
    c: Mapping[tuple[str, str, str], float] = field(default_factory=dict)
    q: Mapping[Edge, float] = field(default_factory=dict)
    p_bar: Mapping[str, float] = field(default_factory=dict)
    e: Mapping[tuple[str, str], float] = field(default_factory=dict)
    r: Mapping[tuple[str, str], float] = field(default_factory=dict)
    phi: Mapping[str, float] = field(default_factory=dict)
    I0: Mapping[tuple[str, str], float] = field(default_factory=dict)
    h: Mapping[tuple[str, str], float] = field(default_factory=dict)
    rho_d: Mapping[tuple[str, str], float] = field(default_factory=dict)
    rho_E: Mapping[Edge, float] = field(default_factory=dict)
    rho_V: Mapping[str, float] = field(default_factory=dict)
    lost_edges: frozenset = frozenset()
    lost_vertices: frozenset = frozenset()

    @property
    def product_ids(self) -> list[str]:
        return [p.id for p in self.products]

    def kind(self, v: str) -> EntityKind:
        return self.vertices[v]

    def usable(self, edge: Edge) -> bool:
        return edge not in self.lost_edges

    def edge_products(self, i: str, j: str) -> list[str]:
        return [k for k in self.product_ids if (i, j, k) in self.c]

    def out_edges(self, v: str) -> list[Edge]:
        return [e for e in self.edges if e[0] == v]

    def in_edges(self, v: str) -> list[Edge]:
        return [e for e in self.edges if e[1] == v]

    def bom(self, product: str) -> dict[str, float]:
        """Components (and units per unit of ``product``) consumed to make ``product``."""
        return {k: rate for (k, kp), rate in self.r.items() if kp == product and rate}

    def producible(self, v: str) -> list[str]:
        return [k for k in self.product_ids if (v, k) in self.e]

    def stockable(self, v: str) -> list[str]:
        return [k for k in self.product_ids if (v, k) in self.h]

    def capacity(self, v: str) -> float:
        return 0.0 if v in self.lost_vertices else float(self.p_bar.get(v, 0.0))


@dataclass(frozen=True)
class CostBreakdown:
    transport_var: float = 0.0
    holding: float = 0.0
    production_var: float = 0.0
    transport_fixed: float = 0.0
    production_fixed: float = 0.0
    demand_penalty: float = 0.0
    edge_change_penalty: float = 0.0
    vertex_change_penalty: float = 0.0

    @property
    def total(self) -> float:
        return (self.transport_var + self.holding + self.production_var + self.transport_fixed
                + self.production_fixed + self.demand_penalty + self.edge_change_penalty
                + self.vertex_change_penalty)

    @property
    def flow_cost(self) -> float:
        return self.transport_var + self.transport_fixed + self.holding

    @property
    def production_cost(self) -> float:
        return self.production_var + self.production_fixed


@dataclass(frozen=True)
class FlowPlan:
    """One period's decisions.  Missing keys mean zero."""

    y: Mapping[tuple[str, str, str], float] = field(default_factory=dict)
    beta: Mapping[Edge, int] = field(default_factory=dict)
    x: Mapping[tuple[str, str], float] = field(default_factory=dict)
    p: Mapping[tuple[str, str], float] = field(default_factory=dict)
    zeta: Mapping[str, int] = field(default_factory=dict)
    I: Mapping[tuple[str, str], float] = field(default_factory=dict)
    shortfall: Mapping[tuple[str, str], float] = field(default_factory=dict)
    cost: CostBreakdown | None = None

    def edge_flow(self, i: str, j: str, products: Iterable[str]) -> dict[str, float]:
        return {k: float(self.y.get((i, j, k), 0.0)) for k in products}

    def used(self, edge: Edge) -> bool:
        return bool(self.beta.get(edge, 0))

    def is_open(self, v: str) -> bool:
        return bool(self.zeta.get(v, 0))

    @property
    def unmet_demand(self) -> float:
        return float(sum(self.shortfall.values()))


# -- disruptions -------------------------------------------------------------

@dataclass(frozen=True)
class EdgeLoss:
    edges: frozenset

    def __init__(self, edges: Iterable[Edge] = ()):
        object.__setattr__(self, "edges", frozenset(tuple(e) for e in edges))


@dataclass(frozen=True)
class VertexLoss:
    vertex: str


@dataclass(frozen=True)
class NewDemand:
    vertex: str
    product: str
    units: float


DisruptionEvent = EdgeLoss | VertexLoss | NewDemand


def apply_disruption(net: SupplyNetwork, event: DisruptionEvent) -> SupplyNetwork:
    """Return the network as it stands after ``event``; ``net`` is untouched.

    Lost edges and vertices are recorded on the network (planners pin their
    flows, ``beta`` and ``zeta`` to zero); a lost vertex also loses its stock.
    """
    if isinstance(event, EdgeLoss):
        known = set(net.edges)
        for e in sorted(event.edges):
            if e not in known:
                raise DisruptionError(f"unknown edge {e}")
        return replace(net, lost_edges=net.lost_edges | event.edges)
    if isinstance(event, VertexLoss):
        v = event.vertex
        if v not in net.vertices:
            raise DisruptionError(f"unknown vertex {v!r}")
        incident = {e for e in net.edges if v in e}
        I0 = {key: val for key, val in net.I0.items() if key[0] != v}
        return replace(net, lost_edges=net.lost_edges | incident,
                       lost_vertices=net.lost_vertices | {v}, I0=I0)
    if isinstance(event, NewDemand):
        v, k = event.vertex, event.product
        if v not in net.vertices:
            raise DisruptionError(f"unknown vertex {v!r}")
        if k not in net.product_ids:
            raise DisruptionError(f"unknown product {k!r}")
        if net.vertices[v] is not EntityKind.CUSTOMER:
            raise DisruptionError(f"{v!r} is not a customer")
        if event.units < 0:
            raise DisruptionError("demand increment must be nonnegative")
        d = dict(net.d)
        d[(v, k)] = d.get((v, k), 0.0) + float(event.units)
        rho_d = dict(net.rho_d)
        if (v, k) not in rho_d:
            rho_d[(v, k)] = max((val for (_, kk), val in net.rho_d.items() if kk == k), default=0.0)
        return replace(net, d=d, rho_d=rho_d)
    raise TypeError(f"unsupported event {event!r}")


# -- validation --------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    field: str
    entity: object
    message: str


def _bom_cycle(net: SupplyNetwork) -> list[str] | None:
    succ: dict[str, list[str]] = {}
    for (k, kp), rate in net.r.items():
        if rate:
            succ.setdefault(k, []).append(kp)
    state: dict[str, int] = {}
    stack: list[str] = []

    def visit(k):
        state[k] = 1
        stack.append(k)
        for nxt in succ.get(k, []):
            if state.get(nxt) == 1:
                return stack[stack.index(nxt):] + [nxt]
            if nxt not in state:
                found = visit(nxt)
                if found:
                    return found
        state[k] = 2
        stack.pop()
        return None

    for k in sorted(succ):
        if k not in state:
            found = visit(k)
            if found:
                return found
    return None


def validate_network(net: SupplyNetwork) -> list[Violation]:
    """List every violated network invariant (empty list means well formed)."""
    out: list[Violation] = []
    pids = net.product_ids
    if len(set(pids)) != len(pids):
        out.append(Violation("products", sorted(pids), "duplicate product ids"))
    products = set(pids)
    vertices = set(net.vertices)
    for v, kind in net.vertices.items():
        if not isinstance(kind, EntityKind):
            out.append(Violation("vertices", v, f"unknown kind {kind!r}"))
    seen: set[Edge] = set()
    for e in net.edges:
        i, j = e
        if i not in vertices or j not in vertices:
            out.append(Violation("edges", e, "edge references unknown vertex"))
        if i == j:
            out.append(Violation("edges", e, "self-loop"))
        if e in seen:
            out.append(Violation("edges", e, "duplicate edge"))
        seen.add(e)

    def check_values(name, mapping, key_ok):
        for key, val in mapping.items():
            if not key_ok(key):
                out.append(Violation(name, key, "references unknown entity"))
            if not isinstance(val, (int, float)) or not math.isfinite(val) or val < 0:
                out.append(Violation(name, key, f"must be finite and >= 0, got {val!r}"))

    vk = lambda key: key[0] in vertices and key[1] in products  # noqa: E731
    check_values("d", net.d, vk)
    check_values("f", net.f, lambda key: key in seen)
    check_values("c", net.c, lambda key: key[:2] in seen and key[2] in products)
    check_values("q", net.q, lambda key: key in seen)
    check_values("p_bar", net.p_bar, lambda key: key in vertices)
    check_values("e", net.e, vk)
    check_values("r", net.r, lambda key: key[0] in products and key[1] in products)
    check_values("phi", net.phi, lambda key: key in vertices)
    check_values("I0", net.I0, vk)
    check_values("h", net.h, vk)
    check_values("rho_d", net.rho_d, vk)
    check_values("rho_E", net.rho_E, lambda key: key in seen)
    check_values("rho_V", net.rho_V, lambda key: key in vertices)

    for (v, k), val in net.d.items():
        if val > 0 and net.vertices.get(v) is not EntityKind.CUSTOMER:
            out.append(Violation("d", (v, k), "only customers may carry demand"))
    for v, val in net.p_bar.items():
        if val > 0 and net.vertices.get(v) not in (EntityKind.OEM, EntityKind.SUPPLIER):
            out.append(Violation("p_bar", v, "only OEMs and tier suppliers may produce"))
    for key, val in net.I0.items():
        if val > 0 and key not in net.h:
            out.append(Violation("I0", key, "initial stock without holding capability (h)"))
    for (k, kp) in net.r:
        if k == kp:
            out.append(Violation("r", (k, kp), "product consumes itself"))
    cycle = _bom_cycle(net)
    if cycle:
        out.append(Violation("r", tuple(cycle), "bill of materials contains a cycle"))
    for e in net.lost_edges:
        if e not in seen:
            out.append(Violation("lost_edges", e, "unknown edge"))
    for v in net.lost_vertices:
        if v not in vertices:
            out.append(Violation("lost_vertices", v, "unknown vertex"))
    return out


# -- plan arithmetic ---------------------------------------------------------

def check_plan_shape(net: SupplyNetwork, plan: FlowPlan) -> None:
    edges = set(net.edges)
    problems = []
    problems += [k for k in plan.y if k not in net.c]
    problems += [k for k in plan.beta if k not in edges]
    problems += [k for k in plan.p if k not in net.e]
    problems += [k for k in plan.I if k not in net.h]
    problems += [k for k in list(plan.x) + list(plan.shortfall) if k not in net.d]
    problems += [k for k in plan.zeta if k not in net.vertices]
    if problems:
        raise PlanShapeError(f"plan indices not defined by the network: {problems[:5]}")


def total_cost(net: SupplyNetwork, plan: FlowPlan, baseline: FlowPlan | None = None) -> CostBreakdown:
    """Operating cost of ``plan``; change penalties are added when a baseline is given."""
    check_plan_shape(net, plan)
    tv = sum(net.c[key] * val for key, val in plan.y.items())
    hold = sum(net.h[key] * val for key, val in plan.I.items())
    pv = sum(net.e[key] * val for key, val in plan.p.items())
    tf = sum(net.f.get(e, 0.0) * b for e, b in plan.beta.items())
    pf = sum(net.phi.get(v, 0.0) * z for v, z in plan.zeta.items())
    dp = sum(net.rho_d.get(key, 0.0) * val for key, val in plan.shortfall.items())
    ec = vc = 0.0
    if baseline is not None:
        check_plan_shape(net, baseline)
        ec = sum(net.rho_E.get(e, 0.0) * abs(plan.beta.get(e, 0) - baseline.beta.get(e, 0))
                 for e in net.edges)
        vc = sum(net.rho_V.get(v, 0.0) * abs(plan.zeta.get(v, 0) - baseline.zeta.get(v, 0))
                 for v in net.vertices)
    return CostBreakdown(float(tv), float(hold), float(pv), float(tf), float(pf), float(dp),
                         float(ec), float(vc))


def flow_balance_residual(net: SupplyNetwork, plan: FlowPlan) -> dict[tuple[str, str], float]:
    """Residual of the balance equation for every (vertex, product); zero when feasible."""
    res = {(v, k): 0.0 for v in net.vertices for k in net.product_ids}
    for (i, j, k), val in plan.y.items():
        res[(j, k)] += val
        res[(i, k)] -= val
    for (i, kp), val in plan.p.items():
        res[(i, kp)] += val
        for k, rate in net.bom(kp).items():
            res[(i, k)] -= rate * val
    for key, val in plan.x.items():
        res[key] -= val
    for key in res:
        res[key] -= plan.I.get(key, 0.0) - net.I0.get(key, 0.0)
    return res


def max_residual(net: SupplyNetwork, plan: FlowPlan) -> float:
    return max((abs(v) for v in flow_balance_residual(net, plan).values()), default=0.0)


def capacity_violations(net: SupplyNetwork, plan: FlowPlan, tol: float = TOL) -> list[str]:
    """Capacity and usage-indicator violations ((2c), (2d), demand caps, lost entities)."""
    out = []
    for (i, j) in net.edges:
        load = sum(plan.y.get((i, j, k), 0.0) for k in net.edge_products(i, j))
        beta = plan.beta.get((i, j), 0)
        if beta not in (0, 1):
            out.append(f"beta{(i, j)} not binary")
        if load > net.q.get((i, j), 0.0) * beta + tol:
            out.append(f"edge {(i, j)} load {load:.6g} exceeds q*beta")
        if not net.usable((i, j)) and (load > tol or beta):
            out.append(f"lost edge {(i, j)} still used")
    for v in net.vertices:
        made = sum(val for (i, _), val in plan.p.items() if i == v)
        z = plan.zeta.get(v, 0)
        if z not in (0, 1):
            out.append(f"zeta[{v}] not binary")
        if made > net.capacity(v) * z + tol:
            out.append(f"vertex {v} production {made:.6g} exceeds p_bar*zeta")
    for key, val in plan.x.items():
        if val > net.d.get(key, 0.0) + tol:
            out.append(f"x{key} exceeds demand")
    for name, mapping in (("y", plan.y), ("x", plan.x), ("p", plan.p), ("I", plan.I),
                          ("shortfall", plan.shortfall)):
        for key, val in mapping.items():
            if val < -tol:
                out.append(f"{name}{key} negative")
    for key, d in net.d.items():
        if plan.shortfall.get(key, 0.0) < d - plan.x.get(key, 0.0) - tol:
            out.append(f"shortfall{key} below d - x")
    return out


# -- plan deltas -------------------------------------------------------------

@dataclass(frozen=True)
class PlanDelta:
    """Differences between a baseline plan and a new plan.

    ``added_edges`` went from unused to used; ``changed_edges`` were used
    before, are still usable and carry a different product vector (dropping
    to zero counts as a change); ``removed_edges`` were used before and are
    now lost.  Added edges never count as changed flows.
    """

    edge_change: Mapping[Edge, int]
    vertex_change: Mapping[str, int]
    added_edges: tuple[Edge, ...]
    changed_edges: tuple[Edge, ...]
    removed_edges: tuple[Edge, ...]
    changed_entities: frozenset
    C_f: float
    C_p: float

    @property
    def E_a(self) -> int:
        return len(self.added_edges)

    @property
    def F_c(self) -> int:
        return len(self.changed_edges)


def plan_delta(baseline: FlowPlan, new: FlowPlan, net: SupplyNetwork, tol: float = TOL) -> PlanDelta:
    check_plan_shape(net, baseline)
    check_plan_shape(net, new)
    edge_change, added, changed, removed = {}, [], [], []
    touched: set[str] = set()
    for e in net.edges:
        b0, b1 = baseline.beta.get(e, 0), new.beta.get(e, 0)
        edge_change[e] = int(abs(b1 - b0))
        ks = net.edge_products(*e)
        f0, f1 = baseline.edge_flow(*e, ks), new.edge_flow(*e, ks)
        differs = any(abs(f0[k] - f1[k]) > tol for k in ks)
        if differs or b0 != b1:
            touched.update(e)
        if not b0 and b1:
            added.append(e)
        elif b0 and not net.usable(e):
            removed.append(e)
        elif b0 and (differs or not b1):
            changed.append(e)
    vertex_change = {}
    for v in net.vertices:
        z0, z1 = baseline.zeta.get(v, 0), new.zeta.get(v, 0)
        vertex_change[v] = int(abs(z1 - z0))
        prod_diff = any(abs(baseline.p.get((v, k), 0.0) - new.p.get((v, k), 0.0)) > tol
                        for k in net.producible(v))
        if z0 != z1 or prod_diff:
            touched.add(v)
    c0, c1 = total_cost(net, baseline), total_cost(net, new)
    return PlanDelta(edge_change, vertex_change, tuple(added), tuple(changed), tuple(removed),
                     frozenset(touched), c1.flow_cost - c0.flow_cost,
                     c1.production_cost - c0.production_cost)
