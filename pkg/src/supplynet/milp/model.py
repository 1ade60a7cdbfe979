"""Problem representation for small mixed-integer linear programs.

A problem is a list of named variables (continuous with optional upper bound,
or binary), a list of linear constraints and a linear objective that is always
minimized.  Everything is validated once in :func:`build`; the solvers work on
the dense arrays returned by :meth:`MilpProblem.arrays`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

CONTINUOUS = "continuous"
BINARY = "binary"

LE, EQ, GE = "<=", "==", ">="
_SENSES = (LE, EQ, GE)


class ModelError(ValueError):
    """Raised for malformed problems (undeclared variables, NaN coefficients...)."""


class NodeLimitExceeded(RuntimeError):
    """Branch-and-bound explored more nodes than the configured limit."""


class TooManyBinaries(ValueError):
    """Brute-force enumeration refused: too many binary variables."""


class Status(str, Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str = CONTINUOUS
    upper: float | None = None

    @property
    def is_binary(self) -> bool:
        return self.kind == BINARY


@dataclass(frozen=True)
class Constraint:
    coeffs: Mapping[str, float]
    sense: str
    rhs: float
    name: str = ""


@dataclass(frozen=True)
class MilpProblem:
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: Mapping[str, float]
    index: Mapping[str, int] = field(repr=False, compare=False, default_factory=dict)

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    @property
    def binaries(self) -> list[int]:
        return [i for i, v in enumerate(self.variables) if v.is_binary]

    def arrays(self):
        """Dense (c, A, senses, b, upper, is_binary) view of the problem.

        ``upper`` holds ``inf`` for unbounded continuous variables and 1 for
        binaries.  Built lazily and cached on the instance.
        """
        cached = self.__dict__.get("_arrays")
        if cached is not None:
            return cached
        n, m = self.n_vars, len(self.constraints)
        c = np.zeros(n)
        for name, coef in self.objective.items():
            c[self.index[name]] += coef
        A = np.zeros((m, n))
        b = np.zeros(m)
        senses = []
        for r, con in enumerate(self.constraints):
            for name, coef in con.coeffs.items():
                A[r, self.index[name]] += coef
            b[r] = con.rhs
            senses.append(con.sense)
        upper = np.array([
            1.0 if v.is_binary else (math.inf if v.upper is None else float(v.upper))
            for v in self.variables
        ])
        is_bin = np.array([v.is_binary for v in self.variables], dtype=bool)
        out = (c, A, tuple(senses), b, upper, is_bin)
        object.__setattr__(self, "_arrays", out)
        return out

    def to_lp(self) -> str:
        """Human readable dump in a small LP-text dialect (min / s.t. / bounds / binary)."""
        def expr(coeffs: Mapping[str, float]) -> str:
            terms = []
            for name, coef in coeffs.items():
                if coef == 0:
                    continue
                sign = "-" if coef < 0 else "+"
                mag = abs(coef)
                body = name if mag == 1 else f"{mag:g} {name}"
                terms.append(f"{sign} {body}")
            if not terms:
                return "0"
            text = " ".join(terms)
            return text[2:] if text.startswith("+ ") else text

        lines = ["min:", f"  obj: {expr(self.objective)}", "s.t."]
        for r, con in enumerate(self.constraints):
            label = con.name or f"c{r}"
            lines.append(f"  {label}: {expr(con.coeffs)} {con.sense} {con.rhs:g}")
        lines.append("bounds")
        for v in self.variables:
            if v.is_binary:
                continue
            hi = "inf" if v.upper is None else f"{v.upper:g}"
            lines.append(f"  0 <= {v.name} <= {hi}")
        bins = [v.name for v in self.variables if v.is_binary]
        if bins:
            lines.append("binary")
            lines.append("  " + " ".join(bins))
        lines.append("end")
        return "\n".join(lines) + "\n"


@dataclass
class MilpSolution:
    status: Status
    values: dict[str, float] = field(default_factory=dict)
    objective: float = math.nan
    nodes: int = 0

    def __getitem__(self, name: str) -> float:
        return self.values[name]

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


@dataclass(frozen=True)
class SolverConfig:
    feasibility_tol: float = 1e-9
    integrality_tol: float = 1e-6
    node_limit: int = 200_000
    branching: str = "most_fractional"
    pivot_rule: str = "dantzig"

    def __post_init__(self):
        if self.feasibility_tol <= 0 or self.integrality_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.node_limit < 1:
            raise ValueError("node_limit must be >= 1")
        if self.branching not in ("most_fractional", "first_fractional"):
            raise ValueError(f"unknown branching rule {self.branching!r}")
        if self.pivot_rule not in ("dantzig", "bland"):
            raise ValueError(f"unknown pivot rule {self.pivot_rule!r}")


def _finite(x: float, what: str) -> float:
    x = float(x)
    if not math.isfinite(x):
        raise ModelError(f"non-finite coefficient in {what}: {x}")
    return x


def build(
    variables: Iterable[Variable],
    constraints: Iterable[Constraint],
    objective: Mapping[str, float],
) -> MilpProblem:
    """Validate declarations and return an immutable :class:`MilpProblem`."""
    variables = tuple(variables)
    index: dict[str, int] = {}
    for v in variables:
        if v.name in index:
            raise ModelError(f"duplicate variable {v.name!r}")
        if v.kind not in (CONTINUOUS, BINARY):
            raise ModelError(f"unknown domain {v.kind!r} for {v.name!r}")
        if v.upper is not None:
            up = float(v.upper)
            if math.isnan(up) or up < 0:
                raise ModelError(f"bad upper bound for {v.name!r}: {v.upper}")
        index[v.name] = len(index)

    def check(coeffs: Mapping[str, float], what: str) -> dict[str, float]:
        out = {}
        for name, coef in coeffs.items():
            if name not in index:
                raise ModelError(f"undeclared variable {name!r} in {what}")
            out[name] = _finite(coef, what)
        return out

    cons = []
    for r, con in enumerate(constraints):
        if con.sense not in _SENSES:
            raise ModelError(f"unknown relation {con.sense!r}")
        label = con.name or f"c{r}"
        cons.append(Constraint(check(con.coeffs, label), con.sense, _finite(con.rhs, label), con.name))
    obj = check(objective, "objective")
    return MilpProblem(variables, tuple(cons), obj, index)


class ModelBuilder:
    """Incremental helper around :func:`build` used by the planners."""

    def __init__(self):
        self._vars: list[Variable] = []
        self._names: set[str] = set()
        self._cons: list[Constraint] = []
        self._obj: dict[str, float] = {}

    def __contains__(self, name: str) -> bool:
        return name in self._names

    def var(self, name: str, kind: str = CONTINUOUS, upper: float | None = None,
            cost: float = 0.0) -> str:
        if name in self._names:
            raise ModelError(f"duplicate variable {name!r}")
        self._vars.append(Variable(name, kind, upper))
        self._names.add(name)
        if cost:
            self._obj[name] = self._obj.get(name, 0.0) + cost
        return name

    def binary(self, name: str, cost: float = 0.0) -> str:
        return self.var(name, BINARY, cost=cost)

    def add_cost(self, name: str, cost: float) -> None:
        if cost:
            self._obj[name] = self._obj.get(name, 0.0) + cost

    def add(self, coeffs: Mapping[str, float], sense: str, rhs: float, name: str = "") -> None:
        self._cons.append(Constraint(dict(coeffs), sense, rhs, name))

    def build(self) -> MilpProblem:
        return build(self._vars, self._cons, self._obj)
