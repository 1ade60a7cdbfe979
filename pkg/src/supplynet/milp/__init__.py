"""Self-contained MILP toolkit: model builder, bounded simplex, branch-and-bound."""
from .branch import brute_force_solve, solve, solve_lp_relaxation
from .model import (
    BINARY, CONTINUOUS, EQ, GE, LE, Constraint, MilpProblem, MilpSolution, ModelBuilder,
    ModelError, NodeLimitExceeded, SolverConfig, Status, TooManyBinaries, Variable, build,
)

__all__ = [
    "BINARY", "CONTINUOUS", "EQ", "GE", "LE", "Constraint", "MilpProblem", "MilpSolution",
    "ModelBuilder", "ModelError", "NodeLimitExceeded", "SolverConfig", "Status",
    "TooManyBinaries", "Variable", "brute_force_solve", "build", "solve", "solve_lp_relaxation",
]
