"""JSON files for networks, disruption events and plans.

Layout (see ``data/network.schema.json`` for the full schema)::

    {
      "products": [{"id": "BP", "name": "BeefPatty"}, ...],
      "vertices": [{"id": "O1", "kind": "OEM"}, ...],
      "edges":    [{"from": "T1", "to": "O1"}, ...],
      "bom":      [{"component": "RB", "product": "BP", "r": 1.0}, ...],
      "params": {
        "d":     [{"vertex": "C1", "product": "BP", "value": 30}],
        "f":     [{"from": "T1", "to": "O1", "value": 40}],
        "c":     [{"from": "T1", "to": "O1", "product": "RB", "value": 2.5}],
        "q":  ...   "p_bar": ...   "e": ...   "phi": ...   "I0": ...
        "h":  ...   "rho_d": ...   "rho_E": ...   "rho_V": ...
      },
      "lost": {"edges": [...], "vertices": [...]}          (optional)
    }
"""
from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

import jsonschema

from .network import (
    DisruptionEvent, EdgeLoss, EntityKind, FlowPlan, NewDemand, ProductType, SupplyNetwork,
    VertexLoss,
)

_EDGE_KEYED = ("f", "q", "rho_E")
_VERTEX_KEYED = ("p_bar", "phi", "rho_V")
_VP_KEYED = ("d", "e", "I0", "h", "rho_d")


def schema() -> dict:
    text = resources.files("supplynet.data").joinpath("network.schema.json").read_text()
    return json.loads(text)


def network_from_dict(doc: dict) -> SupplyNetwork:
    jsonschema.validate(doc, schema())
    params = doc.get("params", {})
    kw = {}
    for name in _EDGE_KEYED:
        kw[name] = {(row["from"], row["to"]): float(row["value"]) for row in params.get(name, [])}
    for name in _VERTEX_KEYED:
        kw[name] = {row["vertex"]: float(row["value"]) for row in params.get(name, [])}
    for name in _VP_KEYED:
        kw[name] = {(row["vertex"], row["product"]): float(row["value"])
                    for row in params.get(name, [])}
    kw["c"] = {(row["from"], row["to"], row["product"]): float(row["value"])
               for row in params.get("c", [])}
    kw["r"] = {(row["component"], row["product"]): float(row["r"]) for row in doc.get("bom", [])}
    lost = doc.get("lost", {})
    return SupplyNetwork(
        products=tuple(ProductType(p["id"], p.get("name", "")) for p in doc["products"]),
        vertices={v["id"]: EntityKind(v["kind"]) for v in doc["vertices"]},
        edges=tuple((e["from"], e["to"]) for e in doc["edges"]),
        lost_edges=frozenset((e["from"], e["to"]) for e in lost.get("edges", [])),
        lost_vertices=frozenset(lost.get("vertices", [])),
        **kw,
    )


def network_to_dict(net: SupplyNetwork) -> dict:
    params: dict[str, list] = {}
    for name in _EDGE_KEYED:
        params[name] = [{"from": i, "to": j, "value": v} for (i, j), v in getattr(net, name).items()]
    for name in _VERTEX_KEYED:
        params[name] = [{"vertex": i, "value": v} for i, v in getattr(net, name).items()]
    for name in _VP_KEYED:
        params[name] = [{"vertex": i, "product": k, "value": v}
                        for (i, k), v in getattr(net, name).items()]
    params["c"] = [{"from": i, "to": j, "product": k, "value": v} for (i, j, k), v in net.c.items()]
    doc = {
        "products": [{"id": p.id, "name": p.name} for p in net.products],
        "vertices": [{"id": v, "kind": kind.value} for v, kind in net.vertices.items()],
        "edges": [{"from": i, "to": j} for i, j in net.edges],
        "bom": [{"component": k, "product": kp, "r": v} for (k, kp), v in net.r.items()],
        "params": params,
    }
    if net.lost_edges or net.lost_vertices:
        doc["lost"] = {"edges": [{"from": i, "to": j} for i, j in sorted(net.lost_edges)],
                       "vertices": sorted(net.lost_vertices)}
    return doc


def load_network(path: str | Path) -> SupplyNetwork:
    with open(path) as fh:
        return network_from_dict(json.load(fh))


def save_network(net: SupplyNetwork, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(network_to_dict(net), fh, indent=1)
        fh.write("\n")


# -- disruption events -------------------------------------------------------
#
#   {"type": "vertex_loss", "vertex": "T4"}
#   {"type": "edge_loss", "edges": [{"from": "T1", "to": "O1"}]}
#   {"type": "new_demand", "vertex": "C5", "product": "BP", "units": 5}

def event_to_dict(event: DisruptionEvent) -> dict:
    if isinstance(event, VertexLoss):
        return {"type": "vertex_loss", "vertex": event.vertex}
    if isinstance(event, EdgeLoss):
        return {"type": "edge_loss", "edges": [{"from": i, "to": j} for i, j in sorted(event.edges)]}
    if isinstance(event, NewDemand):
        return {"type": "new_demand", "vertex": event.vertex, "product": event.product,
                "units": event.units}
    raise TypeError(f"unsupported event {event!r}")


def event_from_dict(doc: dict) -> DisruptionEvent:
    kind = doc.get("type")
    try:
        if kind == "vertex_loss":
            return VertexLoss(str(doc["vertex"]))
        if kind == "edge_loss":
            return EdgeLoss((e["from"], e["to"]) for e in doc["edges"])
        if kind == "new_demand":
            return NewDemand(str(doc["vertex"]), str(doc["product"]), float(doc["units"]))
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed {kind} event: {exc}") from exc
    raise ValueError(f"unknown event type {kind!r}")


def load_event(path: str | Path) -> DisruptionEvent:
    with open(path) as fh:
        return event_from_dict(json.load(fh))


# -- plans -------------------------------------------------------------------

def plan_to_dict(plan: FlowPlan) -> dict:
    """Nonzero entries only, in a stable order."""
    def rows(mapping, names):
        return [dict(zip(names, key), value=val) for key, val in sorted(mapping.items()) if val]

    doc = {
        "y": rows(plan.y, ("from", "to", "product")),
        "beta": [{"from": i, "to": j} for (i, j), b in sorted(plan.beta.items()) if b],
        "x": rows(plan.x, ("vertex", "product")),
        "p": rows(plan.p, ("vertex", "product")),
        "zeta": sorted(v for v, z in plan.zeta.items() if z),
        "I": rows(plan.I, ("vertex", "product")),
        "shortfall": rows(plan.shortfall, ("vertex", "product")),
    }
    if plan.cost is not None:
        doc["cost"] = {name: getattr(plan.cost, name) for name in plan.cost.__dataclass_fields__}
        doc["cost"]["total"] = plan.cost.total
    return doc


def plan_from_dict(doc: dict) -> FlowPlan:
    def vp(name):
        return {(r["vertex"], r["product"]): float(r["value"]) for r in doc.get(name, [])}

    return FlowPlan(
        y={(r["from"], r["to"], r["product"]): float(r["value"]) for r in doc.get("y", [])},
        beta={(r["from"], r["to"]): 1 for r in doc.get("beta", [])},
        x=vp("x"), p=vp("p"), zeta={v: 1 for v in doc.get("zeta", [])}, I=vp("I"),
        shortfall=vp("shortfall"),
    )
