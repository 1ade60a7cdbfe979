"""Command line: ``supplynet {plan,disrupt,compare,export}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .io import event_to_dict, network_to_dict, plan_to_dict, save_network
from .milp import NodeLimitExceeded
from .network import max_residual
from .planner import PlanningError, plan
from .scenarios import (
    METHODS, SCENARIOS, ScenarioConfig, ScenarioError, export_flow_diff, export_report,
    report_text, run_scenario,
)

log = logging.getLogger("supplynet")


def _add_common(p: argparse.ArgumentParser, scenario: bool = True) -> None:
    p.add_argument("--network", default="reference",
                   help='"reference", "case-study" (generated from --seed) or a network JSON file')
    p.add_argument("--seed", type=int, default=0, help="parameter seed for --network case-study")
    p.add_argument("--rho-e-scale", type=float, default=1.0, help="multiply every rho_E by this")
    p.add_argument("--out", type=Path, help="output file or directory")
    if scenario:
        p.add_argument("--scenario", default="T4",
                       help=f"preset ({', '.join(SCENARIOS)}), 'all', or an event JSON file")
        p.add_argument("--ea-cap", type=int, default=None, help="cap on newly used edges")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="supplynet", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="solve the undisrupted network and print a summary")
    _add_common(p, scenario=False)

    p = sub.add_parser("disrupt", help="apply a disruption and recover with one method")
    _add_common(p)
    p.add_argument("--method", choices=METHODS, default="distributed")

    p = sub.add_parser("compare", help="run both methods and write the report, diffs and log")
    _add_common(p)
    p.add_argument("--method", choices=METHODS + ("both",), default="both")

    p = sub.add_parser("export", help="write the network (and optionally a scenario) as JSON")
    _add_common(p)
    return parser


def _configs(args) -> list[ScenarioConfig]:
    names = list(SCENARIOS) if args.scenario == "all" else [args.scenario]
    method = getattr(args, "method", "both")
    return [ScenarioConfig(network=args.network, event=name, method=method, ea_cap=args.ea_cap,
                           rho_e_scale=args.rho_e_scale, seed=args.seed) for name in names]


def _run(configs):
    reports, baseline = [], None
    for cfg in configs:
        log.info("running %s (%s)", cfg.name, cfg.method)
        rep = run_scenario(cfg, baseline)
        baseline = rep.baseline
        reports.append(rep)
    return reports


def cmd_plan(args) -> int:
    cfg = ScenarioConfig(network=args.network, seed=args.seed, rho_e_scale=args.rho_e_scale)
    net = cfg.load_network()
    p = plan(net, cfg.solver)
    used = sorted(e for e in net.edges if p.used(e))
    print(f"vertices {len(net.vertices)}  edges {len(net.edges)}  used edges {len(used)}")
    print(f"total cost {p.cost.total:.2f}  (flow {p.cost.flow_cost:.2f}, "
          f"production {p.cost.production_cost:.2f})")
    print(f"unmet demand {p.unmet_demand:g}  max balance residual {max_residual(net, p):.2e}")
    if args.out:
        args.out.write_text(json.dumps(plan_to_dict(p), indent=1) + "\n")
        print(f"wrote {args.out}")
    return 0


def _write_outputs(reports, out: Path) -> None:
    out.mkdir(parents=True, exist_ok=True)
    export_report(reports, out / "report.csv", "csv")
    export_report(reports, out / "report.txt", "text")
    for rep in reports:
        for method in rep.rows:
            export_flow_diff(rep, method, out / f"{rep.scenario}_{method}.dot")
        if rep.log is not None:
            rep.log.write(out / f"{rep.scenario}_messages.jsonl")


def cmd_disrupt(args) -> int:
    reports = _run(_configs(args))
    print(report_text(reports), end="")
    for rep in reports:
        for method, p in rep.plans.items():
            print(f"{rep.scenario} {method}: total cost {p.cost.total:.2f}, "
                  f"unmet demand {p.unmet_demand:g}")
    if args.out:
        _write_outputs(reports, args.out)
    return 0


def cmd_compare(args) -> int:
    reports = _run(_configs(args))
    print(report_text(reports), end="")
    for rep in reports:
        costs = ", ".join(f"{m} {rep.total_cost(m):.2f}" for m in rep.plans)
        print(f"{rep.scenario} total cost: {costs}")
    if args.out:
        _write_outputs(reports, args.out)
        print(f"wrote {args.out}/")
    return 0


def cmd_export(args) -> int:
    cfg = ScenarioConfig(network=args.network, seed=args.seed, rho_e_scale=args.rho_e_scale)
    net = cfg.load_network()
    if args.out is None:
        json.dump(network_to_dict(net), sys.stdout, indent=1)
        print()
        return 0
    if args.out.suffix == ".json":
        save_network(net, args.out)
        return 0
    args.out.mkdir(parents=True, exist_ok=True)
    save_network(net, args.out / "network.json")
    names = list(SCENARIOS) if args.scenario == "all" else [args.scenario]
    for name in names:
        event = ScenarioConfig(event=name).load_event()
        (args.out / f"{ScenarioConfig(event=name).name}.json").write_text(
            json.dumps(event_to_dict(event), indent=1) + "\n")
    return 0


COMMANDS = {"plan": cmd_plan, "disrupt": cmd_disrupt, "compare": cmd_compare, "export": cmd_export}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ScenarioError, PlanningError, NodeLimitExceeded, FileNotFoundError, ValueError) as exc:
        print(f"supplynet: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
