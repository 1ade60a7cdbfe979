"""Distributed recovery conversation: request, response, inform, propagation.

A disrupted agent broadcasts the flows it needs.  Every recipient answers with
the largest offer it can make from local knowledge.  The requester picks an
allocation that trades transport cost, unmet flow and deviation from prior
flows, informs the chosen responders, and each of them sources what it promised
(stock, production, or further requests upstream).  Whatever cannot be
covered is either accepted as shortfall or handed to the centralized planner.
"""
from __future__ import annotations

import copy
import enum
import json
import math
from dataclasses import dataclass, field, replace
from typing import Mapping

from .agents import (
    INVENTORY, PRODUCTION, Agent, AgentNetwork, RemoveCapability, RemoveRelation, edge_agent_id,
    forget_agent, init_agents, update_knowledge,
)
from .milp import GE, LE, EQ, ModelBuilder, SolverConfig, solve
from .network import (
    EdgeLoss, EntityKind, FlowPlan, NewDemand, SupplyNetwork, VertexLoss, apply_disruption,
    total_cost,
)
from .planner import ReplanPenalties, centralized_comm_effort, replan

TOL = 1e-9
# offers and allocations below this are solver noise, not flow
MIN_UNITS = 1e-6
Flows = dict[tuple[str, str], float]


def _clean(v: float, cap: float) -> float:
    """Snap LP round-off (e.g. 4.999999996) to the 1e-6 grid, clip to ``cap``, drop dust."""
    snapped = round(v, 6)
    if abs(v - snapped) < 1e-8:
        v = snapped
    v = min(v, cap)
    return v if v >= MIN_UNITS else 0.0


# -- messages ------------------------------------------------------------------

@dataclass(frozen=True)
class Request:
    seq: int
    sender: str
    recipient: str
    y_d: Mapping[tuple[str, str], float]
    requirements: Mapping[str, str] = field(default_factory=dict)


@dataclass(frozen=True)
class Response:
    seq: int
    sender: str
    recipient: str
    request_seq: int
    offer: Mapping[tuple[str, str], float]
    requested: Mapping[tuple[str, str], float]
    unit_cost: Mapping[tuple[str, str], float] = field(default_factory=dict)
    fixed_cost: Mapping[str, float] = field(default_factory=dict)
    new_edge: Mapping[str, bool] = field(default_factory=dict)
    prior: Mapping[tuple[str, str], float] = field(default_factory=dict)


@dataclass(frozen=True)
class Inform:
    seq: int
    sender: str
    recipient: str
    response_seq: int
    allocation: Mapping[tuple[str, str], float]


@dataclass(frozen=True)
class FallbackRequest:
    seq: int
    sender: str
    reason: str
    centralized_effort: int = 0


Message = Request | Response | Inform | FallbackRequest


def _flows_json(flows: Mapping[tuple[str, str], float]) -> dict[str, float]:
    return {f"{j}:{k}": round(v, 9) for (j, k), v in sorted(flows.items())}


class MessageLog:
    """Ordered transcript; sequence numbers are assigned on append."""

    def __init__(self):
        self.messages: list[Message] = []

    def __len__(self) -> int:
        return len(self.messages)

    def __iter__(self):
        return iter(self.messages)

    def append(self, msg: Message) -> Message:
        msg = replace(msg, seq=len(self.messages) + 1)
        self.messages.append(msg)
        return msg

    def participants(self) -> set[str]:
        out = set()
        for m in self.messages:
            out.add(m.sender)
            if not isinstance(m, FallbackRequest):
                out.add(m.recipient)
        return out

    def to_lines(self) -> str:
        lines = []
        for m in self.messages:
            if isinstance(m, Request):
                payload = {"y_d": _flows_json(m.y_d), "requirements": dict(sorted(m.requirements.items()))}
            elif isinstance(m, Response):
                payload = {"request": m.request_seq, "offer": _flows_json(m.offer),
                           "unit_cost": _flows_json(m.unit_cost),
                           "fixed_cost": dict(sorted(m.fixed_cost.items())),
                           "new_edge": dict(sorted(m.new_edge.items()))}
            elif isinstance(m, Inform):
                payload = {"response": m.response_seq, "allocation": _flows_json(m.allocation)}
            else:
                payload = {"reason": m.reason, "centralized_effort": m.centralized_effort}
            to = "" if isinstance(m, FallbackRequest) else m.recipient
            lines.append(json.dumps({"seq": m.seq, "type": type(m).__name__, "from": m.sender,
                                     "to": to, "payload": payload}, sort_keys=True))
        return "\n".join(lines) + ("\n" if lines else "")

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_lines())


def log_violations(log: MessageLog, tol: float = 1e-9) -> list[str]:
    """Conversation-validity problems: ordering, references, offer/allocation caps."""
    out = []
    requests, responses = {}, {}
    last = 0
    for m in log:
        if m.seq <= last:
            out.append(f"sequence not increasing at {m.seq}")
        last = m.seq
        if isinstance(m, Request):
            requests[m.seq] = m
        elif isinstance(m, Response):
            req = requests.get(m.request_seq)
            if req is None or req.recipient != m.sender or req.sender != m.recipient:
                out.append(f"response {m.seq} does not answer a prior request")
                continue
            for key, v in m.offer.items():
                if key not in req.y_d or v > req.y_d[key] + tol or v < -tol:
                    out.append(f"response {m.seq} offers {v} on {key}")
            responses[m.seq] = m
        elif isinstance(m, Inform):
            resp = responses.get(m.response_seq)
            if resp is None or resp.sender != m.recipient:
                out.append(f"inform {m.seq} does not follow a prior response")
                continue
            for key, v in m.allocation.items():
                if v > resp.offer.get(key, 0.0) + tol or v < -tol:
                    out.append(f"inform {m.seq} allocates {v} on {key}")
    return out


def comm_effort(log: MessageLog) -> int:
    """Requests (one per recipient) + responses + informs; a fallback adds 1 plus the planner's effort."""
    total = 0
    for m in log:
        if isinstance(m, FallbackRequest):
            total += 1 + m.centralized_effort
        else:
            total += 1
    return total


# -- configuration and outcome -------------------------------------------------

@dataclass(frozen=True)
class ProtocolConfig:
    shortfall_weight: float = 1000.0
    change_weight: float = 1.0
    fallback: bool = True
    local_edge_cap: int | None = None
    penalties: ReplanPenalties | None = None
    solver: SolverConfig = SolverConfig()

    def __post_init__(self):
        if self.shortfall_weight < 0 or self.change_weight < 0:
            raise ValueError("weights must be nonnegative")
        if self.local_edge_cap is not None and self.local_edge_cap < 0:
            raise ValueError("local_edge_cap must be >= 0")


class RecoveryStatus(str, enum.Enum):
    RECOVERED = "Recovered"
    PARTIALLY_RECOVERED = "PartiallyRecovered"
    FELL_BACK = "FellBackToCentralized"


@dataclass
class RecoveryOutcome:
    status: RecoveryStatus
    plan: FlowPlan
    log: MessageLog
    unrecovered: dict[str, float]
    agents: AgentNetwork
    centralized_effort: int = 0

    def __post_init__(self):
        if (self.status is RecoveryStatus.RECOVERED) != all(v <= 1e-6 for v in self.unrecovered.values()):
            raise ValueError("Recovered status must coincide with zero unrecovered flow")

    @property
    def C_e(self) -> int:
        return comm_effort(self.log)

    @property
    def distributed_effort(self) -> int:
        return self.C_e - (1 + self.centralized_effort if self.status is RecoveryStatus.FELL_BACK else 0)


@dataclass
class World:
    net: SupplyNetwork
    plan: FlowPlan
    agents: AgentNetwork

    @classmethod
    def build(cls, net: SupplyNetwork, plan: FlowPlan) -> "World":
        return cls(net, plan, init_agents(net, plan))


# -- agent-local decisions -------------------------------------------------------

def _products_needed(y_d) -> list[str]:
    return sorted({k for _, k in y_d})


def make_request(disrupted: Agent, event) -> tuple[Request, list[str]] | None:
    """Flows the disrupted agent needs replaced and who to ask; ``None`` when nothing was lost."""
    env, cap = disrupted.environment, disrupted.capability
    y_d: Flows = {}
    recipients: set[str] = set()
    if isinstance(event, VertexLoss):
        if event.vertex != disrupted.id:
            raise ValueError(f"{disrupted.id} is not the lost vertex {event.vertex}")
        for (j, k), units in env.outflow.items():
            if units > TOL and (k in cap.hold or k in cap.produce):
                y_d[(j, k)] = units
        for k in _products_needed(y_d):
            kind = PRODUCTION if k in cap.produce else INVENTORY
            recipients |= env.peers.get((kind, k), set())
        kind_name = "VertexLoss"
    elif isinstance(event, NewDemand):
        if event.vertex != disrupted.id:
            raise ValueError(f"{disrupted.id} did not receive the new demand")
        if event.units > TOL:
            y_d[(disrupted.id, event.product)] = float(event.units)
            recipients |= env.upstream.get(event.product, set())
        kind_name = "NewDemand"
    elif isinstance(event, EdgeLoss):
        cut = {i for (i, j) in event.edges if j == disrupted.id}
        for (i, k), units in env.inflow.items():
            if i in cut and units > TOL:
                y_d[(disrupted.id, k)] = y_d.get((disrupted.id, k), 0.0) + units
        for k in _products_needed(y_d):
            recipients |= env.upstream.get(k, set()) - cut
        kind_name = "EdgeLoss"
    else:
        raise TypeError(f"unsupported event {event!r}")
    if not y_d:
        return None
    recipients.discard(disrupted.id)
    req = Request(-1, disrupted.id, "", y_d, {"event": kind_name})
    return req, sorted(recipients)


def _priority_order(agent: Agent, products) -> list[str]:
    return sorted(products, key=lambda k: (-agent.capability.priority.get(k, 0.0), k))


def _supply_bounds(agent: Agent, products):
    """Local upper bounds on how much of each product the agent could source."""
    cap, env = agent.capability, agent.environment
    stock = {k: max(0.0, v) for k, v in agent.projected_inventory().items()}
    upstream = {}
    for k in products:
        upstream[k] = agent.in_residual(k) if env.upstream.get(k) and k not in cap.produce else 0.0
    comps = sorted({c for k in products if k in cap.produce for c, _ in cap.bom.get(k, [])})
    comp_avail = {c: stock.get(c, 0.0) + (agent.in_residual(c) if env.upstream.get(c) else 0.0)
                  for c in comps}
    return stock, upstream, comp_avail


def _lexicographic(mb: ModelBuilder, stages, solver: SolverConfig) -> dict[str, float]:
    """Maximize each stage objective in turn, holding earlier optima."""
    values: dict[str, float] = {}
    for obj in stages:
        if not obj:
            continue
        for name, w in obj.items():
            mb.add_cost(name, -w)
        sol = solve(mb.build(), solver)
        if not sol.optimal:
            return values
        values = sol.values
        best = sum(w * values[name] for name, w in obj.items())
        for name, w in obj.items():
            mb.add_cost(name, w)
        mb.add(dict(obj), GE, best - 1e-9)
    return values


def compute_response(agent: Agent, req: Request, solver: SolverConfig = SolverConfig()) -> Response:
    """Offer minimizing ``||offer - y_d||_1`` under residual transport/production/component limits.

    When capacity binds, products with the larger downstream shortfall
    penalty are served first (ties: product id).
    """
    cap, env = agent.capability, agent.environment
    keys = sorted(req.y_d)
    products = sorted({k for _, k in keys})
    stock, upstream, comp_avail = _supply_bounds(agent, products)
    mb = ModelBuilder()
    ybar = {}
    for (j, k) in keys:
        if ((agent.id, j), k) not in cap.transport_cost:
            continue
        if k not in cap.produce and stock.get(k, 0.0) <= TOL and upstream.get(k, 0.0) <= TOL:
            continue
        ybar[(j, k)] = mb.var(f"yb[{j},{k}]", upper=float(req.y_d[(j, k)]))
    offer: Flows = {key: 0.0 for key in keys}
    if ybar:
        for j in sorted({j for j, _ in ybar}):
            mb.add({ybar[key]: 1.0 for key in ybar if key[0] == j}, LE, agent.out_residual(j))
        made = {}
        for k in products:
            row = {ybar[key]: 1.0 for key in ybar if key[1] == k}
            if not row:
                continue
            if stock.get(k, 0.0) > TOL:
                row[mb.var(f"st[{k}]", upper=stock[k])] = -1.0
            if k in cap.produce:
                made[k] = mb.var(f"mk[{k}]")
                row[made[k]] = -1.0
            if upstream.get(k, 0.0) > TOL:
                row[mb.var(f"up[{k}]", upper=upstream[k])] = -1.0
            mb.add(row, LE, 0.0)
        if made:
            mb.add({v: 1.0 for v in made.values()}, LE, agent.production_residual())
            for c, avail in comp_avail.items():
                use = {made[k]: r for k in made for cc, r in cap.bom.get(k, []) if cc == c}
                if use:
                    mb.add(use, LE, avail)
        stages = [{v: 1.0 for v in ybar.values()}]
        for k in _priority_order(agent, products):
            stage = {ybar[key]: 1.0 for key in ybar if key[1] == k}
            stages.append(stage)
        values = _lexicographic(mb, stages, solver)
        for key, name in ybar.items():
            offer[key] = _clean(values.get(name, 0.0), req.y_d[key])
    unit_cost, fixed, new_edge, prior = {}, {}, {}, {}
    for (j, k) in keys:
        edge = (agent.id, j)
        if (edge, k) in cap.transport_cost:
            unit_cost[(j, k)] = cap.transport_cost[(edge, k)]
            fixed[j] = cap.transport_fixed.get(edge, 0.0)
            new_edge[j] = not any(units > TOL for (jj, _), units in env.outflow.items() if jj == j)
        prior[(j, k)] = env.outflow.get((j, k), 0.0)
    return Response(-1, agent.id, req.sender, req.seq, offer, dict(req.y_d), unit_cost, fixed,
                    new_edge, prior)


def select_allocation(disrupted: Agent, responses: list[Response],
                      y_0: Mapping[tuple[str, str, str], float] | None = None,
                      config: ProtocolConfig = ProtocolConfig()) -> dict[str, Flows]:
    """Choose how much to take from each responder.

    Minimizes transport cost (unit plus fixed cost of newly opened edges)
    + ``shortfall_weight`` x unmet requested flow + ``change_weight`` x
    ``|y - y_0|``, with ``y <= offer`` and the total per (j, k) at most the
    requested amount.  Cost ties go to the lower responder id.
    """
    if not responses:
        raise ValueError("select_allocation needs at least one response")
    y_d = dict(responses[0].requested)
    if y_0 is None:
        y_0 = {(r.sender, j, k): v for r in responses for (j, k), v in r.prior.items()}
    mb = ModelBuilder()
    y = {}
    rank = {rid: n for n, rid in enumerate(sorted({r.sender for r in responses}))}
    new_bins = []
    for resp in sorted(responses, key=lambda r: r.sender):
        i = resp.sender
        opened: dict[str, str] = {}
        for (j, k), offer in sorted(resp.offer.items()):
            if offer < MIN_UNITS:
                continue
            name = mb.var(f"y[{i},{j},{k}]", upper=float(offer),
                          cost=resp.unit_cost.get((j, k), 0.0))
            y[(i, j, k)] = name
            y0 = float(y_0.get((i, j, k), 0.0))
            if config.change_weight:
                t = mb.var(f"t[{i},{j},{k}]", cost=config.change_weight)
                mb.add({t: 1.0, name: -1.0}, GE, -y0)
                mb.add({t: 1.0, name: 1.0}, GE, y0)
            if resp.new_edge.get(j, False):
                if j not in opened:
                    opened[j] = mb.binary(f"b[{i},{j}]", cost=resp.fixed_cost.get(j, 0.0))
                    new_bins.append(opened[j])
                mb.add({name: 1.0, opened[j]: -float(offer)}, LE, 0.0)
    if not y:
        return {}
    for (j, k), need in sorted(y_d.items()):
        row = {name: 1.0 for (i, jj, kk), name in y.items() if (jj, kk) == (j, k)}
        if not row:
            continue
        s = mb.var(f"s[{j},{k}]", cost=config.shortfall_weight)
        mb.add({**row, s: 1.0}, EQ, float(need))
    if config.local_edge_cap is not None and new_bins:
        mb.add({b: 1.0 for b in new_bins}, LE, float(config.local_edge_cap))
    sol = solve(mb.build(), config.solver)
    if not sol.optimal:
        return {}
    values = sol.values
    # tie-break: among optimal allocations prefer lower responder ids
    if len(rank) > 1:
        opt = sol.objective
        problem = mb.build()
        mb.add(dict(problem.objective), LE, opt + 1e-9)
        for name in list(problem.objective):
            mb.add_cost(name, -problem.objective[name])
        for (i, j, k), name in y.items():
            mb.add_cost(name, float(rank[i] + 1))
        sol2 = solve(mb.build(), config.solver)
        if sol2.optimal:
            values = sol2.values
    offers = {(r.sender, j, k): v for r in responses for (j, k), v in r.offer.items()}
    out: dict[str, Flows] = {}
    for (i, j, k), name in y.items():
        v = _clean(values.get(name, 0.0), offers[(i, j, k)])
        if v > 0:
            out.setdefault(i, {})[(j, k)] = v
    # snapping can round several flows up past the request; trim from the back
    for key, need in y_d.items():
        takers = sorted((i for i in out if key in out[i]), key=rank.get, reverse=True)
        excess = sum(out[i][key] for i in takers) - need
        for i in takers:
            if excess <= 0:
                break
            cut = min(excess, out[i][key])
            excess -= cut
            left = out[i][key] - cut
            if left >= MIN_UNITS:
                out[i][key] = left
            else:
                del out[i][key]
                if not out[i]:
                    del out[i]
    return out


@dataclass
class _Sourcing:
    from_stock: dict[str, float]
    make: dict[str, float]
    component_stock: dict[str, float]
    upstream: dict[str, float]


def _sourcing_plan(agent: Agent, want: Mapping[str, float]) -> _Sourcing:
    cap, env = agent.capability, agent.environment
    slack = {k: max(0.0, v) for k, v in agent.projected_inventory().items()}
    residual = agent.production_residual()
    from_stock, make, upstream = {}, {}, {}
    comp_need: dict[str, float] = {}
    for k in _priority_order(agent, want):
        amount = want[k]
        s = min(amount, slack.get(k, 0.0))
        slack[k] = slack.get(k, 0.0) - s
        from_stock[k] = s
        rest = amount - s
        if rest <= TOL:
            continue
        if k in cap.produce:
            m = min(rest, residual)
            residual -= m
            make[k] = m
            for c, r in cap.bom.get(k, []):
                comp_need[c] = comp_need.get(c, 0.0) + r * m
        elif env.upstream.get(k):
            upstream[k] = upstream.get(k, 0.0) + rest
    component_stock = {}
    for c, need in sorted(comp_need.items()):
        take = min(need, slack.get(c, 0.0))
        slack[c] = slack.get(c, 0.0) - take
        component_stock[c] = take
        if need - take > TOL and env.upstream.get(c):
            upstream[c] = upstream.get(c, 0.0) + need - take
    return _Sourcing(from_stock, make, component_stock, upstream)


def propagate(selected: Agent, allocation: Mapping[tuple[str, str], float]) -> list[tuple[Request, list[str]]]:
    """Upstream requests needed to honor ``allocation`` beyond local stock."""
    want: dict[str, float] = {}
    for (_, k), units in allocation.items():
        want[k] = want.get(k, 0.0) + units
    plan = _sourcing_plan(selected, want)
    out = []
    for k in sorted(plan.upstream):
        units = plan.upstream[k]
        recipients = sorted(selected.environment.upstream.get(k, set()))
        if units > TOL and recipients:
            out.append((Request(-1, selected.id, "", {(selected.id, k): units},
                                {"event": "Propagation"}), recipients))
    return out


# -- orchestration -----------------------------------------------------------------

class _Recovery:
    def __init__(self, net: SupplyNetwork, baseline: FlowPlan, agents: AgentNetwork,
                 config: ProtocolConfig):
        self.net = net
        self.baseline = baseline
        self.agents = agents
        self.cfg = config
        self.y = {key: v for key, v in baseline.y.items() if v > TOL}
        self.p = {key: v for key, v in baseline.p.items() if v > TOL}
        self.log = MessageLog()
        self.max_depth = len(net.vertices) + 1

    # physical bookkeeping, mirrored into both endpoints' knowledge
    def _flow(self, i, j, k, delta):
        self.y[(i, j, k)] = self.y.get((i, j, k), 0.0) + delta
        self.agents.record_flow(i, j, k, delta)

    def _produce(self, i, k, delta):
        self.p[(i, k)] = self.p.get((i, k), 0.0) + delta
        st = self.agents[i].state.production
        st[k] = st.get(k, 0.0) + delta

    def _stock(self, i, k):
        return self.agents[i].projected_inventory().get(k, 0.0)

    def _absorb(self, i, k, amount):
        """``i`` no longer needs to ship ``amount`` of ``k``: make less, order less, or keep it."""
        if amount <= TOL:
            return
        a = self.agents[i]
        if k in a.capability.produce and self.p.get((i, k), 0.0) > TOL:
            cut = min(self.p[(i, k)], amount)
            self._produce(i, k, -cut)
            amount -= cut
            for c, r in a.capability.bom.get(k, []):
                self._absorb(i, c, r * cut)
        if amount > TOL:
            for (u, kk), units in sorted(a.environment.inflow.items()):
                if kk != k or units <= TOL:
                    continue
                red = min(units, amount)
                self._flow(u, i, k, -red)
                self._absorb(u, k, red)
                amount -= red
                if amount <= TOL:
                    break

    def _shed(self, j, k):
        """``j`` is short of ``k``: ship less downstream, then make less of what needs it."""
        a = self.agents[j]
        if a.kind is EntityKind.CUSTOMER:
            return
        deficit = -self._stock(j, k)
        if deficit <= TOL:
            return
        for (m, kk), units in sorted(a.environment.outflow.items()):
            if kk != k or units <= TOL:
                continue
            red = min(units, deficit)
            self._flow(j, m, k, -red)
            self._shed(m, k)
            deficit -= red
            if deficit <= TOL:
                return
        for kp in sorted(a.capability.produce):
            rate = dict(a.capability.bom.get(kp, [])).get(k)
            made = self.p.get((j, kp), 0.0)
            if not rate or made <= TOL:
                continue
            cut = min(made, deficit / rate)
            self._produce(j, kp, -cut)
            deficit -= rate * cut
            for c, r in a.capability.bom.get(kp, []):
                if c != k:
                    self._absorb(j, c, r * cut)
            self._shed(j, kp)
            if deficit <= TOL:
                return

    def _secure(self, i, want, depth):
        """Source ``want`` at ``i`` from stock, production and upstream; returns what was secured."""
        agent = self.agents[i]
        plan = _sourcing_plan(agent, want)
        received: dict[str, float] = {}
        for req, recipients in propagate(agent, {(i, k): v for k, v in want.items()}):
            got = self._converse(i, req, recipients, depth + 1)
            for (_, k), units in got.items():
                received[k] = received.get(k, 0.0) + units
        avail = {c: plan.component_stock.get(c, 0.0) + received.get(c, 0.0)
                 for c in set(plan.component_stock) | set(received)}
        consumed: dict[str, float] = {}
        got = {}
        for k in _priority_order(agent, want):
            g = plan.from_stock.get(k, 0.0)
            m = plan.make.get(k, 0.0)
            if m > TOL:
                for c, r in agent.capability.bom.get(k, []):
                    m = min(m, max(0.0, avail.get(c, 0.0) - consumed.get(c, 0.0)) / r)
                if m > TOL:
                    for c, r in agent.capability.bom.get(k, []):
                        consumed[c] = consumed.get(c, 0.0) + r * m
                    self._produce(i, k, m)
                    g += m
            if k not in agent.capability.produce:
                g += received.get(k, 0.0)
            got[k] = g
        for c, units in sorted(received.items()):
            if c in want and c not in agent.capability.produce:
                continue
            used = max(0.0, consumed.get(c, 0.0) - plan.component_stock.get(c, 0.0))
            self._absorb(i, c, units - used)
        return got

    def _fulfill(self, i, allocation, depth):
        want: dict[str, float] = {}
        for (_, k), units in allocation.items():
            want[k] = want.get(k, 0.0) + units
        got = self._secure(i, want, depth)
        delivered: Flows = {}
        for (j, k), units in sorted(allocation.items()):
            take = min(units, got.get(k, 0.0))
            if take > TOL:
                got[k] -= take
                self._flow(i, j, k, take)
                delivered[(j, k)] = take
        return delivered

    def _converse(self, requester, template: Request, recipients, depth=0) -> Flows:
        if depth > self.max_depth or not recipients:
            return {}
        responses = []
        for r in recipients:
            req = self.log.append(replace(template, recipient=r))
            resp = compute_response(self.agents[r], req, self.cfg.solver)
            responses.append(self.log.append(resp))
        allocation = select_allocation(self.agents[requester], responses, None, self.cfg)
        by_sender = {r.sender: r for r in responses}
        for rid in sorted(allocation):
            self.log.append(Inform(-1, requester, rid, by_sender[rid].seq, allocation[rid]))
        delivered: Flows = {}
        for rid in sorted(allocation):
            for key, units in self._fulfill(rid, allocation[rid], depth).items():
                delivered[key] = delivered.get(key, 0.0) + units
        return delivered

    # disruption handling
    def _drop_edge(self, i, j):
        for k in self.net.edge_products(i, j):
            units = self.y.get((i, j, k), 0.0)
            if units > TOL:
                self._flow(i, j, k, -units)
        eid = edge_agent_id(i, j)
        if eid in self.agents:
            edge_agent = self.agents[eid]
            for k in sorted(edge_agent.capability.transport):
                update_knowledge(edge_agent, RemoveCapability("transport", k))
            edge_agent.capability.transport_capacity.clear()
            for v in (i, j):
                update_knowledge(self.agents[v], RemoveRelation("transport", eid))
        for k in self.net.edge_products(i, j):
            update_knowledge(self.agents[i], RemoveRelation("downstream", j, k))
            update_knowledge(self.agents[j], RemoveRelation("upstream", i, k))
        for v in (i, j):
            self.agents[v].capability.transport_capacity.pop((i, j), None)

    def run(self, event) -> tuple[Flows, Flows]:
        """Returns (needed, delivered) per (j, k)."""
        needed: Flows = {}
        delivered: Flows = {}

        def talk(requester, spec):
            if spec is None:
                return
            req, recipients = spec
            for key, v in req.y_d.items():
                needed[key] = needed.get(key, 0.0) + v
            for key, v in self._converse(requester, req, recipients).items():
                delivered[key] = delivered.get(key, 0.0) + v

        if isinstance(event, VertexLoss):
            d = event.vertex
            spec = make_request(self.agents[d], event)
            lost = [(i, j) for (i, j) in self.net.edges if d in (i, j)]
            for (i, j) in lost:
                flows = {k: self.y.get((i, j, k), 0.0) for k in self.net.edge_products(i, j)}
                self._drop_edge(i, j)
                if j == d:
                    for k, units in flows.items():
                        self._absorb(i, k, units)
            for k in list(self.agents[d].state.production):
                self._produce(d, k, -self.p.get((d, k), 0.0))
            self.agents[d].state.inventory = {}
            forget_agent(self.agents, d)
            talk(d, spec)
            self._pending_shed = sorted({j for (j, _) in needed})
        elif isinstance(event, NewDemand):
            c = self.agents[event.vertex]
            c.capability.demand[event.product] = c.capability.demand.get(event.product, 0.0) + event.units
            talk(event.vertex, make_request(c, event))
            self._pending_shed = []
        elif isinstance(event, EdgeLoss):
            cut = sorted(event.edges)
            specs = {j: make_request(self.agents[j], event) for j in sorted({j for _, j in cut})}
            for (i, j) in cut:
                flows = {k: self.y.get((i, j, k), 0.0) for k in self.net.edge_products(i, j)}
                self._drop_edge(i, j)
                for k, units in flows.items():
                    self._absorb(i, k, units)
            for j, spec in specs.items():
                talk(j, spec)
            self._pending_shed = sorted(specs)
        else:
            raise TypeError(f"unsupported event {event!r}")
        return needed, delivered

    def shed_remaining(self):
        for j in self._pending_shed:
            for k in sorted({k for (_, k) in self.agents[j].environment.inflow} | set(self.net.product_ids)):
                self._shed(j, k)

    def plan(self) -> FlowPlan:
        net = self.net
        y = {key: (self.y.get(key, 0.0) if self.y.get(key, 0.0) > TOL else 0.0) for key in net.c}
        p = {key: (self.p.get(key, 0.0) if self.p.get(key, 0.0) > TOL else 0.0) for key in net.e}
        beta = {e: int(any(y.get((e[0], e[1], k), 0.0) > TOL for k in net.edge_products(*e)))
                for e in net.edges}
        zeta = {v: int(any(p.get((v, k), 0.0) > TOL for k in net.producible(v)))
                for v in net.vertices if net.producible(v)}
        inflow: dict[tuple[str, str], float] = {}
        outflow: dict[tuple[str, str], float] = {}
        for (i, j, k), v in y.items():
            inflow[(j, k)] = inflow.get((j, k), 0.0) + v
            outflow[(i, k)] = outflow.get((i, k), 0.0) + v
        x = {key: min(dem, inflow.get(key, 0.0)) for key, dem in net.d.items()}
        inv = {}
        for (v, k) in net.h:
            val = (net.I0.get((v, k), 0.0) + inflow.get((v, k), 0.0) - outflow.get((v, k), 0.0)
                   + p.get((v, k), 0.0) - x.get((v, k), 0.0)
                   - sum(r * p.get((v, kp), 0.0) for (c, kp), r in net.r.items() if c == k))
            inv[(v, k)] = val if abs(val) > TOL else 0.0
        short = {key: max(0.0, net.d[key] - x[key]) for key in net.d}
        short = {key: (s if s > 1e-9 else 0.0) for key, s in short.items()}
        plan = FlowPlan(y, beta, x, p, zeta, inv, short)
        return replace(plan, cost=total_cost(net, plan, self.baseline))


def run_recovery(world: World, event, config: ProtocolConfig = ProtocolConfig()) -> RecoveryOutcome:
    """Detect, request, respond, inform, propagate; then merge the result into a plan.

    ``world`` is not modified.  With ``config.fallback`` any flow the agents
    could not cover triggers a centralized re-plan.
    """
    net = apply_disruption(world.net, event)
    agents = copy.deepcopy(world.agents)
    rec = _Recovery(net, world.plan, agents, config)
    needed, delivered = rec.run(event)
    unrecovered: dict[str, float] = {}
    for (j, k), units in needed.items():
        gap = units - delivered.get((j, k), 0.0)
        if gap > 1e-6:
            unrecovered[k] = unrecovered.get(k, 0.0) + gap
    if not unrecovered:
        rec.shed_remaining()
        return RecoveryOutcome(RecoveryStatus.RECOVERED, rec.plan(), rec.log, {}, agents)
    if config.fallback:
        pen = config.penalties or ReplanPenalties.from_network(net)
        new, delta = replan(net, world.plan, pen, config.solver)
        effort = centralized_comm_effort(net, delta)
        requester = event.vertex if isinstance(event, (VertexLoss, NewDemand)) else \
            sorted(event.edges)[0][1]
        rec.log.append(FallbackRequest(-1, requester, "unrecovered flow", effort))
        return RecoveryOutcome(RecoveryStatus.FELL_BACK, new, rec.log, unrecovered,
                               init_agents(net, new), effort)
    rec.shed_remaining()
    return RecoveryOutcome(RecoveryStatus.PARTIALLY_RECOVERED, rec.plan(), rec.log, unrecovered, agents)
