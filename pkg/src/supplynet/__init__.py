"""Supply network planning and disruption recovery.

Centralized MILP planning, a multi-agent recovery protocol, and a scenario
harness that compares the two on a reconstructed beef supply chain.
"""
from .network import (
    EdgeLoss, EntityKind, FlowPlan, NewDemand, ProductType, SupplyNetwork, VertexLoss,
    apply_disruption, plan_delta, total_cost,
)
from .planner import ReplanPenalties, plan, replan
from .protocol import ProtocolConfig, RecoveryStatus, World, run_recovery
from .scenarios import SCENARIOS, ScenarioConfig, reference_network, run_scenario

__all__ = [
    "EdgeLoss", "EntityKind", "FlowPlan", "NewDemand", "ProductType", "SupplyNetwork",
    "VertexLoss", "apply_disruption", "plan_delta", "total_cost", "ReplanPenalties", "plan",
    "replan", "ProtocolConfig", "RecoveryStatus", "World", "run_recovery", "SCENARIOS",
    "ScenarioConfig", "reference_network", "run_scenario",
]
__version__ = "0.1.0"
