"""Model-based agents: one per vertex and one per edge of the supply network.

Each agent owns a knowledge base made of three parts:

* capability model: what it can produce / stock / ship, plus mapping
  functions (costs, bill of materials, capacities);
* environment model: which agents are upstream / downstream / transport /
  same-capability peers, and the flows currently exchanged with them;
* state model: inventory, inbound and outbound flow, planned production.

Agents never read the global network after initialization; everything the
recovery protocol needs is in here or arrives in messages.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .network import EntityKind, FlowPlan, SupplyNetwork, max_residual

PRODUCTION, INVENTORY, TRANSPORT = "production", "inventory", "transport"
TRANSPORTATION = "Transportation"

Capability = tuple[str, str]


class KnowledgeError(ValueError):
    """A knowledge update contradicts what the agent knows."""


class CapacityViolation(ValueError):
    def __init__(self, product: str, message: str):
        super().__init__(f"{product}: {message}")
        self.product = product


class NegativeInventory(ValueError):
    def __init__(self, product: str, value: float):
        super().__init__(f"{product}: inventory would become {value:g}")
        self.product = product


def edge_agent_id(i: str, j: str) -> str:
    return f"{i}->{j}"


@dataclass
class CapabilityModel:
    produce: set[str] = field(default_factory=set)
    hold: set[str] = field(default_factory=set)
    transport: set[str] = field(default_factory=set)
    production_cost: dict[str, float] = field(default_factory=dict)
    bom: dict[str, list[tuple[str, float]]] = field(default_factory=dict)
    holding_cost: dict[str, float] = field(default_factory=dict)
    production_capacity: float = 0.0
    line_cost: float = 0.0
    inventory_capacity: float = math.inf
    # keyed by (i, j) edges the agent touches (vertex) or is (edge agent)
    transport_capacity: dict[tuple[str, str], float] = field(default_factory=dict)
    transport_cost: dict[tuple[tuple[str, str], str], float] = field(default_factory=dict)
    transport_fixed: dict[tuple[str, str], float] = field(default_factory=dict)
    demand: dict[str, float] = field(default_factory=dict)
    priority: dict[str, float] = field(default_factory=dict)

    def capabilities(self) -> list[Capability]:
        return ([(PRODUCTION, k) for k in sorted(self.produce)]
                + [(INVENTORY, k) for k in sorted(self.hold)]
                + [(TRANSPORT, k) for k in sorted(self.transport)])

    def has(self, cap: Capability) -> bool:
        kind, k = cap
        return k in {PRODUCTION: self.produce, INVENTORY: self.hold,
                     TRANSPORT: self.transport}.get(kind, set())

    def known_products(self) -> set[str]:
        comps = {c for parts in self.bom.values() for c, _ in parts}
        return self.produce | self.hold | self.transport | comps | set(self.demand)


@dataclass
class EnvironmentModel:
    upstream: dict[str, set[str]] = field(default_factory=dict)
    downstream: dict[str, set[str]] = field(default_factory=dict)
    transport: dict[str, set[str]] = field(default_factory=dict)
    peers: dict[Capability, set[str]] = field(default_factory=dict)
    inflow: dict[tuple[str, str], float] = field(default_factory=dict)
    outflow: dict[tuple[str, str], float] = field(default_factory=dict)

    def referenced(self) -> set[str]:
        out: set[str] = set()
        for group in (self.upstream, self.downstream, self.transport, self.peers):
            for ids in group.values():
                out |= ids
        return out


@dataclass
class StateModel:
    inventory: dict[str, float] = field(default_factory=dict)
    inflow: dict[str, float] = field(default_factory=dict)
    outflow: dict[str, float] = field(default_factory=dict)
    production: dict[str, float] = field(default_factory=dict)


@dataclass
class Agent:
    id: str
    kind: EntityKind | str
    capability: CapabilityModel = field(default_factory=CapabilityModel)
    environment: EnvironmentModel = field(default_factory=EnvironmentModel)
    state: StateModel = field(default_factory=StateModel)
    view: set[str] = field(default_factory=set)

    @property
    def is_edge(self) -> bool:
        return self.kind == TRANSPORTATION

    @property
    def links(self) -> set[tuple[str, str]]:
        return {(self.id, other) for other in self.view}

    def production_effect(self, production: Mapping[str, float] | None = None) -> dict[str, float]:
        """Net change per product from making ``production`` (output minus consumed components)."""
        production = self.state.production if production is None else production
        effect: dict[str, float] = {}
        for k, units in production.items():
            if not units:
                continue
            effect[k] = effect.get(k, 0.0) + units
            for comp, rate in self.capability.bom.get(k, []):
                effect[comp] = effect.get(comp, 0.0) - rate * units
        return effect

    def projected_inventory(self) -> dict[str, float]:
        """End-of-period stock if the current flows and production are carried out."""
        st = self.state
        keys = set(st.inventory) | set(st.inflow) | set(st.outflow) | set(self.production_effect())
        effect = self.production_effect()
        return {k: st.inventory.get(k, 0.0) + st.inflow.get(k, 0.0) - st.outflow.get(k, 0.0)
                + effect.get(k, 0.0) for k in keys}

    def out_residual(self, j: str) -> float:
        """Unused capacity on the agent's own edge to ``j`` (0 when no such edge is known)."""
        edge = (self.id, j)
        if edge not in self.capability.transport_capacity:
            return 0.0
        used = sum(v for (jj, _), v in self.environment.outflow.items() if jj == j)
        return max(0.0, self.capability.transport_capacity[edge] - used)

    def in_residual(self, k: str) -> float:
        """Unused inbound transport capacity over every known edge that carries ``k`` here."""
        total = 0.0
        for (i, j), cap in self.capability.transport_capacity.items():
            if j != self.id or ((i, j), k) not in self.capability.transport_cost:
                continue
            used = sum(v for (ii, _), v in self.environment.inflow.items() if ii == i)
            total += max(0.0, cap - used)
        return total

    def production_residual(self) -> float:
        return max(0.0, self.capability.production_capacity - sum(self.state.production.values()))


class AgentNetwork(dict):
    """Mapping of agent id -> :class:`Agent` with a few relation helpers."""

    def vertex_agents(self) -> list[Agent]:
        return [a for _, a in sorted(self.items()) if not a.is_edge]

    def link(self, up: str, down: str, product: str) -> None:
        self[up].environment.downstream.setdefault(product, set()).add(down)
        self[down].environment.upstream.setdefault(product, set()).add(up)

    def record_flow(self, up: str, down: str, product: str, delta: float) -> None:
        """Shift the flow ``up -> down`` of ``product`` by ``delta`` in both knowledge bases."""
        a, b = self[up], self[down]
        key_out, key_in = (down, product), (up, product)
        a.environment.outflow[key_out] = a.environment.outflow.get(key_out, 0.0) + delta
        b.environment.inflow[key_in] = b.environment.inflow.get(key_in, 0.0) + delta
        a.state.outflow[product] = a.state.outflow.get(product, 0.0) + delta
        b.state.inflow[product] = b.state.inflow.get(product, 0.0) + delta
        if a.environment.outflow[key_out] > 1e-12:
            self.link(up, down, product)


def init_agents(net: SupplyNetwork, plan: FlowPlan) -> AgentNetwork:
    """Build every agent's knowledge base from the network and a feasible plan."""
    if max_residual(net, plan) > 1e-6:
        raise ValueError("plan violates flow balance; agents need a feasible plan")
    agents = AgentNetwork()
    priority = {}
    for (_, k), rho in net.rho_d.items():
        priority[k] = max(priority.get(k, 0.0), rho)

    for v, kind in net.vertices.items():
        cap = CapabilityModel(priority=dict(priority))
        for k in net.producible(v):
            cap.produce.add(k)
            cap.production_cost[k] = net.e[(v, k)]
            cap.bom[k] = sorted(net.bom(k).items())
        for k in net.stockable(v):
            cap.hold.add(k)
            cap.holding_cost[k] = net.h[(v, k)]
        cap.production_capacity = net.capacity(v)
        cap.line_cost = net.phi.get(v, 0.0)
        for (i, j) in net.edges:
            if v not in (i, j) or not net.usable((i, j)):
                continue
            cap.transport_capacity[(i, j)] = net.q.get((i, j), 0.0)
            cap.transport_fixed[(i, j)] = net.f.get((i, j), 0.0)
            for k in net.edge_products(i, j):
                cap.transport_cost[((i, j), k)] = net.c[(i, j, k)]
                if i == v:
                    cap.transport.add(k)
        cap.demand = {k: dem for (vv, k), dem in net.d.items() if vv == v}
        state = StateModel(
            inventory={k: net.I0.get((v, k), 0.0) for k in net.stockable(v)},
            production={k: plan.p.get((v, k), 0.0) for k in net.producible(v)},
        )
        if kind is EntityKind.CUSTOMER:
            state.outflow = {k: plan.x.get((v, k), 0.0) for k in cap.demand}
        agents[v] = Agent(v, kind, cap, EnvironmentModel(), state)

    for (i, j) in net.edges:
        eid = edge_agent_id(i, j)
        ks = net.edge_products(i, j)
        cap = CapabilityModel(transport=set(ks) if net.usable((i, j)) else set())
        if net.usable((i, j)):
            cap.transport_capacity[(i, j)] = net.q.get((i, j), 0.0)
            cap.transport_fixed[(i, j)] = net.f.get((i, j), 0.0)
            for k in ks:
                cap.transport_cost[((i, j), k)] = net.c[(i, j, k)]
        agents[eid] = Agent(eid, TRANSPORTATION, cap)
        if not net.usable((i, j)):
            continue
        for k in ks:
            agents.link(i, j, k)
            agents[j].environment.transport.setdefault(k, set()).add(eid)
            flow = plan.y.get((i, j, k), 0.0)
            if flow:
                agents.record_flow(i, j, k, flow)

    _refresh_peers(agents)
    for a in agents.values():
        a.view = local_view(agents, a)
    return agents


def _refresh_peers(agents: AgentNetwork) -> None:
    holders: dict[Capability, set[str]] = {}
    for aid, a in agents.items():
        for cap in a.capability.capabilities():
            holders.setdefault(cap, set()).add(aid)
    for aid, a in agents.items():
        a.environment.peers = {cap: holders[cap] - {aid} for cap in a.capability.capabilities()}


def local_view(agents: AgentNetwork, agent: Agent) -> set[str]:
    """Agents referenced by U/D/T/S plus the edge agents joining ``agent`` to them."""
    refs = agent.environment.referenced()
    view = set(refs)
    for other in refs:
        for eid in (edge_agent_id(agent.id, other), edge_agent_id(other, agent.id)):
            if eid in agents:
                view.add(eid)
    view.discard(agent.id)
    return view


def step_state(agent: Agent, u: Mapping[str, float], z: Mapping[str, float],
               production: Mapping[str, float] | None = None, tol: float = 1e-9) -> dict[str, float]:
    """Advance inventory one period: ``I' = I + u - z + h(I, u)``.

    ``h`` is the production effect of ``production`` (defaults to the planned
    production): made products are added, bill-of-materials components
    are consumed.  The agent's inventory is updated and returned.
    """
    if agent.is_edge:
        raise TypeError("transportation agents hold no inventory")
    cap = agent.capability
    in_cap = sum(c for (i, j), c in cap.transport_capacity.items() if j == agent.id)
    out_cap = sum(c for (i, j), c in cap.transport_capacity.items() if i == agent.id)
    for name, flows, limit in (("inflow", u, in_cap), ("outflow", z, out_cap)):
        for k, val in flows.items():
            if val < -tol:
                raise CapacityViolation(k, f"negative {name} {val:g}")
        total = sum(flows.values())
        if total > limit + tol:
            k = max(sorted(flows), key=lambda kk: flows[kk])
            raise CapacityViolation(k, f"{name} {total:g} exceeds transport capacity {limit:g}")
    if production is not None:
        made = sum(production.values())
        if made > cap.production_capacity + tol:
            k = max(sorted(production), key=lambda kk: production[kk])
            raise CapacityViolation(k, f"production {made:g} exceeds capacity")
    effect = agent.production_effect(production)
    keys = sorted(set(agent.state.inventory) | set(u) | set(z) | set(effect))
    new = {}
    for k in keys:
        val = agent.state.inventory.get(k, 0.0) + u.get(k, 0.0) - z.get(k, 0.0) + effect.get(k, 0.0)
        if val < -tol:
            raise NegativeInventory(k, val)
        new[k] = max(val, 0.0)
    if sum(new.values()) > cap.inventory_capacity + tol:
        k = max(keys, key=lambda kk: new[kk])
        raise CapacityViolation(k, "inventory exceeds capacity")
    agent.state.inventory = new
    return dict(new)


def same_capability_peers(agent: Agent, capability: Capability) -> set[str]:
    if capability not in agent.environment.peers:
        raise KnowledgeError(f"{agent.id} has no capability {capability}")
    return set(agent.environment.peers[capability]) - {agent.id}


# -- knowledge updates ---------------------------------------------------------

@dataclass(frozen=True)
class AddCapability:
    kind: str
    product: str
    cost: float = 0.0
    bom: tuple[tuple[str, float], ...] = ()


@dataclass(frozen=True)
class RemoveCapability:
    kind: str
    product: str


@dataclass(frozen=True)
class UpdateCost:
    kind: str
    product: str
    cost: float


@dataclass(frozen=True)
class AddRelation:
    role: str  # upstream | downstream | transport | peer
    key: object  # product, or capability tuple for peers
    agent_id: str


@dataclass(frozen=True)
class RemoveRelation:
    role: str
    agent_id: str
    key: object = None  # None removes the agent under every key


@dataclass(frozen=True)
class FlowInfo:
    role: str  # upstream | downstream
    agent_id: str
    product: str
    units: float


KnowledgeChange = AddCapability | RemoveCapability | UpdateCost | AddRelation | RemoveRelation | FlowInfo

_ROLE_FIELD = {"upstream": "upstream", "downstream": "downstream", "transport": "transport",
               "peer": "peers"}


def _capset(cap: CapabilityModel, kind: str) -> set[str]:
    try:
        return {PRODUCTION: cap.produce, INVENTORY: cap.hold, TRANSPORT: cap.transport}[kind]
    except KeyError:
        raise KnowledgeError(f"unknown capability kind {kind!r}") from None


def update_knowledge(agent: Agent, change: KnowledgeChange) -> None:
    """Apply one change to ``agent``'s knowledge base, keeping mappings consistent."""
    cap, env = agent.capability, agent.environment
    if isinstance(change, AddCapability):
        _capset(cap, change.kind).add(change.product)
        if change.kind == PRODUCTION:
            cap.production_cost[change.product] = change.cost
            cap.bom[change.product] = list(change.bom)
        elif change.kind == INVENTORY:
            cap.holding_cost[change.product] = change.cost
        env.peers.setdefault((change.kind, change.product), set())
    elif isinstance(change, RemoveCapability):
        caps = _capset(cap, change.kind)
        if change.product not in caps:
            raise KnowledgeError(f"{agent.id} lacks {change.kind} of {change.product}")
        caps.discard(change.product)
        if change.kind == PRODUCTION:
            cap.production_cost.pop(change.product, None)
            cap.bom.pop(change.product, None)
            agent.state.production.pop(change.product, None)
        elif change.kind == INVENTORY:
            cap.holding_cost.pop(change.product, None)
        env.peers.pop((change.kind, change.product), None)
    elif isinstance(change, UpdateCost):
        if change.product not in _capset(cap, change.kind):
            raise KnowledgeError(f"{agent.id} lacks {change.kind} of {change.product}")
        if change.kind == PRODUCTION:
            cap.production_cost[change.product] = change.cost
        elif change.kind == INVENTORY:
            cap.holding_cost[change.product] = change.cost
        else:
            for key in [key for key in cap.transport_cost if key[1] == change.product]:
                cap.transport_cost[key] = change.cost
    elif isinstance(change, AddRelation):
        group = getattr(env, _ROLE_FIELD.get(change.role, "")) if change.role in _ROLE_FIELD else None
        if group is None:
            raise KnowledgeError(f"unknown relation role {change.role!r}")
        if change.role == "peer":
            if not cap.has(change.key):
                raise KnowledgeError(f"{agent.id} lacks capability {change.key}")
        elif change.key not in cap.known_products():
            raise KnowledgeError(f"{agent.id} knows nothing about product {change.key!r}")
        if change.agent_id == agent.id:
            raise KnowledgeError("an agent cannot relate to itself")
        group.setdefault(change.key, set()).add(change.agent_id)
        agent.view.add(change.agent_id)
    elif isinstance(change, RemoveRelation):
        if change.role not in _ROLE_FIELD:
            raise KnowledgeError(f"unknown relation role {change.role!r}")
        group = getattr(env, _ROLE_FIELD[change.role])
        keys = list(group) if change.key is None else [change.key]
        for key in keys:
            group.get(key, set()).discard(change.agent_id)
        if change.role in ("upstream", "downstream"):
            flows = env.inflow if change.role == "upstream" else env.outflow
            for key in [key for key in flows if key[0] == change.agent_id
                        and (change.key is None or key[1] == change.key)]:
                del flows[key]
        if change.agent_id not in env.referenced():
            agent.view.discard(change.agent_id)
    elif isinstance(change, FlowInfo):
        if change.product not in cap.known_products():
            raise KnowledgeError(f"{agent.id} has no flow of unknown product {change.product!r}")
        if change.units < 0:
            raise KnowledgeError("flow units must be nonnegative")
        if change.role == "upstream":
            env.inflow[(change.agent_id, change.product)] = change.units
        elif change.role == "downstream":
            env.outflow[(change.agent_id, change.product)] = change.units
        else:
            raise KnowledgeError(f"flow info needs role upstream/downstream, got {change.role!r}")
        getattr(env, change.role).setdefault(change.product, set()).add(change.agent_id)
        agent.view.add(change.agent_id)
    else:
        raise KnowledgeError(f"unsupported change {change!r}")


def consistency_violations(agents: AgentNetwork) -> list[str]:
    """Dangling ids and U/D asymmetries across the whole agent network."""
    out = []
    for aid, a in sorted(agents.items()):
        for ref in sorted(a.environment.referenced()):
            if ref not in agents:
                out.append(f"{aid} references unknown agent {ref}")
        for cap, ids in a.environment.peers.items():
            if aid in ids:
                out.append(f"{aid} lists itself as a peer for {cap}")
        for k, downs in a.environment.downstream.items():
            for j in downs:
                if j in agents and aid not in agents[j].environment.upstream.get(k, set()):
                    out.append(f"{aid} -> {j} ({k}) missing from {j}'s upstream")
        for k, ups in a.environment.upstream.items():
            for i in ups:
                if i in agents and aid not in agents[i].environment.downstream.get(k, set()):
                    out.append(f"{i} -> {aid} ({k}) missing from {i}'s downstream")
    return out


def dump_knowledge(agent: Agent) -> str:
    """Knowledge base as indented JSON, for inspection."""
    def sets(mapping):
        return {str(k if not isinstance(k, tuple) else ":".join(k)): sorted(v)
                for k, v in sorted(mapping.items(), key=lambda kv: str(kv[0]))}

    def flows(mapping):
        return {f"{a}:{k}": v for (a, k), v in sorted(mapping.items())}

    cap = agent.capability
    doc = {
        "id": agent.id,
        "kind": agent.kind.value if isinstance(agent.kind, EntityKind) else agent.kind,
        "capability": {
            "Pd": sorted(cap.produce), "Iv": sorted(cap.hold), "Tp": sorted(cap.transport),
            "production_cost": dict(sorted(cap.production_cost.items())),
            "bom": {k: [[c, r] for c, r in v] for k, v in sorted(cap.bom.items())},
            "holding_cost": dict(sorted(cap.holding_cost.items())),
            "production_capacity": cap.production_capacity,
            "inventory_capacity": None if math.isinf(cap.inventory_capacity) else cap.inventory_capacity,
            "transport_capacity": {f"{i}->{j}": v for (i, j), v in sorted(cap.transport_capacity.items())},
        },
        "environment": {
            "U": sets(agent.environment.upstream), "D": sets(agent.environment.downstream),
            "T": sets(agent.environment.transport), "S": sets(agent.environment.peers),
            "inflow": flows(agent.environment.inflow), "outflow": flows(agent.environment.outflow),
        },
        "state": {
            "inventory": dict(sorted(agent.state.inventory.items())),
            "inflow": dict(sorted(agent.state.inflow.items())),
            "outflow": dict(sorted(agent.state.outflow.items())),
            "production": dict(sorted(agent.state.production.items())),
        },
        "view": sorted(agent.view),
    }
    return json.dumps(doc, indent=2)


def forget_agent(agents: AgentNetwork, lost: str, products: Iterable[str] | None = None) -> None:
    """Every agent that knew ``lost`` drops it from U/D/T/S (used when an entity disappears)."""
    for aid, a in agents.items():
        if aid == lost:
            continue
        env = a.environment
        if lost in env.referenced() or any(key[0] == lost for key in list(env.inflow) + list(env.outflow)):
            for role in ("upstream", "downstream", "transport", "peer"):
                update_knowledge(a, RemoveRelation(role, lost))
