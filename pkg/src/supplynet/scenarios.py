"""Scenario harness: baseline, disruption, both recovery methods, reports.

A run plans the undisrupted network centrally, applies one disruption, then
re-plans with the centralized model and/or the agent protocol.  Each method
gets a :class:`MetricsRow` and a per-edge flow diff; reports are written as
CSV, an aligned text table, or DOT graphs.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .casestudy import build_case_study_network
from .io import load_event, load_network, network_from_dict
from .milp import SolverConfig
from .network import (
    DisruptionEvent, EdgeLoss, FlowPlan, NewDemand, PlanDelta, SupplyNetwork, VertexLoss,
    apply_disruption, plan_delta,
)
from .planner import PlanningError, ReplanPenalties, centralized_comm_effort, plan, replan
from .protocol import MessageLog, ProtocolConfig, RecoveryOutcome, World, run_recovery

REFERENCE_SEED = 0
SCENARIOS: dict[str, DisruptionEvent] = {
    "C5": NewDemand("C5", "BP", 5.0),
    "T4": VertexLoss("T4"),
    "O1": VertexLoss("O1"),
}
METHODS = ("centralized", "distributed")
CSV_COLUMNS = ("scenario", "method", "C_f", "C_p", "E_a", "F_c", "C_e", "status")
ANNOTATIONS = ("unchanged", "changed", "added", "removed")


class ScenarioError(RuntimeError):
    """A scenario could not be run; the message names the scenario and method."""


def reference_network() -> SupplyNetwork:
    """The checked-in case-study network the acceptance scenarios run on."""
    import json
    text = resources.files("supplynet.data").joinpath("reference_network.json").read_text()
    return network_from_dict(json.loads(text))


@dataclass(frozen=True)
class ScenarioConfig:
    """What to run.

    ``network`` is ``"reference"``, ``"case-study"`` (generated from ``seed``)
    or a path to a network file.  ``event`` is a preset name from
    :data:`SCENARIOS`, a path to an event file, or an event object.
    """

    network: str = "reference"
    event: str | DisruptionEvent = "T4"
    method: str = "both"
    ea_cap: int | None = None
    rho_e_scale: float = 1.0
    seed: int = REFERENCE_SEED
    solver: SolverConfig = SolverConfig()

    def __post_init__(self):
        if self.method not in METHODS + ("both",):
            raise ValueError(f"method must be one of {METHODS + ('both',)}, got {self.method!r}")
        if not self.rho_e_scale > 0:
            raise ValueError("rho_e_scale must be > 0")
        if self.ea_cap is not None and self.ea_cap < 0:
            raise ValueError("ea_cap must be >= 0")
        if self.network not in ("reference", "case-study") and not Path(self.network).is_file():
            raise FileNotFoundError(f"network file not found: {self.network}")
        if isinstance(self.event, str) and self.event not in SCENARIOS \
                and not Path(self.event).is_file():
            raise FileNotFoundError(f"unknown scenario {self.event!r} (not a preset or a file)")

    @property
    def methods(self) -> tuple[str, ...]:
        return METHODS if self.method == "both" else (self.method,)

    @property
    def name(self) -> str:
        if isinstance(self.event, str):
            return self.event if self.event in SCENARIOS else Path(self.event).stem
        return describe_event(self.event)

    def load_event(self) -> DisruptionEvent:
        if not isinstance(self.event, str):
            return self.event
        return SCENARIOS[self.event] if self.event in SCENARIOS else load_event(self.event)

    def load_network(self) -> SupplyNetwork:
        if self.network == "reference":
            net = reference_network()
        elif self.network == "case-study":
            net = build_case_study_network(self.seed)
        else:
            net = load_network(self.network)
        if self.rho_e_scale != 1.0:
            net = replace(net, rho_E={e: v * self.rho_e_scale for e, v in net.rho_E.items()})
        return net


def describe_event(event: DisruptionEvent) -> str:
    if isinstance(event, VertexLoss):
        return f"lose-{event.vertex}"
    if isinstance(event, NewDemand):
        return f"demand-{event.vertex}-{event.product}"
    return "lose-" + "+".join(f"{i}-{j}" for i, j in sorted(event.edges))


def _money(v: float) -> float:
    # six decimals survive a CSV round trip exactly; + 0.0 folds -0.0
    return round(float(v), 6) + 0.0


@dataclass(frozen=True)
class MetricsRow:
    scenario: str
    method: str
    C_f: float
    C_p: float
    E_a: int
    F_c: int
    C_e: int
    status: str

    def __post_init__(self):
        if min(self.E_a, self.F_c, self.C_e) < 0:
            raise ValueError("counts must be nonnegative")
        object.__setattr__(self, "C_f", _money(self.C_f))
        object.__setattr__(self, "C_p", _money(self.C_p))

    def as_csv_row(self) -> list[str]:
        return [self.scenario, self.method, f"{self.C_f:.6f}", f"{self.C_p:.6f}",
                str(self.E_a), str(self.F_c), str(self.C_e), self.status]


@dataclass(frozen=True)
class EdgeDiff:
    edge: tuple[str, str]
    before: dict[str, float]
    after: dict[str, float]
    annotation: str


@dataclass(frozen=True)
class BaselineSummary:
    total_cost: float
    flow_cost: float
    production_cost: float
    used_edges: int
    open_vertices: int
    unmet_demand: float


@dataclass
class RunReport:
    scenario: str
    event: DisruptionEvent
    network: SupplyNetwork
    disrupted: SupplyNetwork
    baseline: FlowPlan
    baseline_summary: BaselineSummary
    rows: dict[str, MetricsRow] = field(default_factory=dict)
    plans: dict[str, FlowPlan] = field(default_factory=dict)
    deltas: dict[str, PlanDelta] = field(default_factory=dict)
    diffs: dict[str, list[EdgeDiff]] = field(default_factory=dict)
    log: MessageLog | None = None
    outcome: RecoveryOutcome | None = None

    def total_cost(self, method: str) -> float:
        return self.plans[method].cost.total


def summarize(net: SupplyNetwork, p: FlowPlan) -> BaselineSummary:
    return BaselineSummary(p.cost.total, p.cost.flow_cost, p.cost.production_cost,
                           sum(1 for e in net.edges if p.used(e)),
                           sum(1 for v in net.vertices if p.is_open(v)), p.unmet_demand)


def flow_diff(net: SupplyNetwork, baseline: FlowPlan, new: FlowPlan, delta: PlanDelta) -> list[EdgeDiff]:
    """Every edge of ``net`` with its before/after product vectors."""
    label = {e: "added" for e in delta.added_edges}
    label.update({e: "changed" for e in delta.changed_edges})
    label.update({e: "removed" for e in delta.removed_edges})
    out = []
    for e in net.edges:
        ks = net.edge_products(*e)
        out.append(EdgeDiff(e, baseline.edge_flow(*e, ks), new.edge_flow(*e, ks),
                            label.get(e, "unchanged")))
    return out


def run_scenario(cfg: ScenarioConfig, baseline: FlowPlan | None = None) -> RunReport:
    """Plan, disrupt, recover with the configured method(s), and measure.

    ``baseline`` may be passed to skip re-solving the undisrupted network;
    it must be the optimal plan of ``cfg.load_network()``.
    """
    name = cfg.name
    net = cfg.load_network()
    event = cfg.load_event()
    try:
        if baseline is None:
            baseline = plan(net, cfg.solver)
    except PlanningError as exc:
        raise ScenarioError(f"{name}: baseline planning failed: {exc}") from exc
    disrupted = apply_disruption(net, event)
    pen = ReplanPenalties.from_network(disrupted, cfg.ea_cap)
    report = RunReport(name, event, net, disrupted, baseline, summarize(net, baseline))

    for method in cfg.methods:
        try:
            if method == "centralized":
                new, delta = replan(disrupted, baseline, pen, cfg.solver)
                status = "UnmetDemand" if new.unmet_demand > 1e-6 else "Optimal"
                effort = centralized_comm_effort(disrupted, delta)
            else:
                config = ProtocolConfig(local_edge_cap=cfg.ea_cap, penalties=pen, solver=cfg.solver)
                outcome = run_recovery(World.build(net, baseline), event, config)
                new = outcome.plan
                delta = plan_delta(baseline, new, disrupted)
                status = outcome.status.value
                effort = outcome.C_e
                report.log, report.outcome = outcome.log, outcome
        except PlanningError as exc:
            raise ScenarioError(f"{name}/{method}: {exc}") from exc
        report.plans[method] = new
        report.deltas[method] = delta
        report.diffs[method] = flow_diff(disrupted, baseline, new, delta)
        report.rows[method] = MetricsRow(name, method, delta.C_f, delta.C_p, delta.E_a,
                                         delta.F_c, effort, status)
    return report


# -- report export -------------------------------------------------------------

def _rows(reports) -> list[MetricsRow]:
    if isinstance(reports, RunReport):
        reports = [reports]
    return [r.rows[m] for r in reports for m in METHODS if m in r.rows]


def report_csv(reports: RunReport | Iterable[RunReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in _rows(reports):
        w.writerow(row.as_csv_row())
    return buf.getvalue()


def report_text(reports: RunReport | Iterable[RunReport]) -> str:
    header = ["Scenario", "Method", "C_f", "C_p", "E_a", "F_c", "C_e", "Status"]
    body = [r.as_csv_row() for r in _rows(reports)]
    for line in body:
        line[2], line[3] = f"{float(line[2]):.2f}", f"{float(line[3]):.2f}"
    widths = [max(len(x) for x in col) for col in zip(header, *body)]
    numeric = {2, 3, 4, 5, 6}

    def fmt(cells):
        return "  ".join(c.rjust(w) if i in numeric else c.ljust(w)
                         for i, (c, w) in enumerate(zip(cells, widths))).rstrip()

    rule = "  ".join("-" * w for w in widths)
    return "\n".join([fmt(header), rule] + [fmt(b) for b in body]) + "\n"


def parse_report_csv(text: str) -> list[MetricsRow]:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    return [MetricsRow(s, m, float(cf), float(cp), int(ea), int(fc), int(ce), st)
            for s, m, cf, cp, ea, fc, ce, st in reader]


def export_report(reports: RunReport | Sequence[RunReport], path: str | Path,
                  fmt: str = "csv") -> Path:
    if fmt == "csv":
        text = report_csv(reports)
    elif fmt == "text":
        text = report_text(reports)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    path = Path(path)
    path.write_text(text)
    return path


# -- flow diff graphs ----------------------------------------------------------

_STYLE = {
    "unchanged": 'color="gray60"',
    "changed": 'color="orange", penwidth=2',
    "added": 'color="forestgreen", penwidth=2',
    "removed": 'color="red", style="dashed"',
}


def _vector(flows: dict[str, float]) -> str:
    return ",".join(f"{k}={v:g}" for k, v in flows.items() if abs(v) > 1e-9) or "0"


def flow_diff_dot(report: RunReport, method: str) -> str:
    if method not in report.diffs:
        raise KeyError(f"method {method!r} was not run for scenario {report.scenario}")
    net = report.disrupted
    lines = [f'digraph "{report.scenario}_{method}" {{',
             f'  graph [rankdir=LR, label="{report.scenario} {method}"];',
             "  node [shape=box];"]
    by_kind: dict[str, list[str]] = {}
    for v, kind in net.vertices.items():
        by_kind.setdefault(kind.value, []).append(v)
    for kind, vs in by_kind.items():
        lines.append(f"  subgraph {kind.lower()} {{ rank=same; " +
                     " ".join(f'"{v}";' for v in vs) + " }")
    for v in sorted(net.lost_vertices):
        lines.append(f'  "{v}" [color="red", style="dashed"];')
    for d in report.diffs[method]:
        if d.annotation == "unchanged" and not any(d.before.values()) and not any(d.after.values()):
            attrs = 'color="gray85", style="dotted"'
            label = ""
        else:
            attrs = _STYLE[d.annotation]
            label = f'{_vector(d.before)} -> {_vector(d.after)}'
        i, j = d.edge
        lines.append(f'  "{i}" -> "{j}" [class="{d.annotation}", {attrs}, label="{label}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def export_flow_diff(report: RunReport, method: str, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(flow_diff_dot(report, method))
    return path


def annotation_counts(report: RunReport, method: str) -> dict[str, int]:
    counts = {a: 0 for a in ANNOTATIONS}
    for d in report.diffs[method]:
        counts[d.annotation] += 1
    return counts
