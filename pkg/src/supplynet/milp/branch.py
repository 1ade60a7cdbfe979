"""Branch-and-bound over binary variables, plus a brute-force oracle."""
from __future__ import annotations

import heapq
import itertools
import math

import numpy as np

from .model import (
    GE, LE, MilpProblem, MilpSolution, NodeLimitExceeded, SolverConfig, Status,
    TooManyBinaries,
)
from .simplex import Basis, LpResult, solve_lp_basis


def _lp_with_fixed(problem: MilpProblem, fixed: dict[int, float], relax_upper, cfg,
                   start: Basis | None = None) -> LpResult:
    """LP relaxation with some binaries pinned through their bounds."""
    c, A, senses, b, upper, _ = problem.arrays()
    lower = np.zeros(c.size)
    up = np.array(relax_upper, dtype=float)
    for j, val in fixed.items():
        lower[j] = up[j] = val
    return solve_lp_basis(c, A, senses, b, up, lower=lower, start=start,
                          pivot_rule=cfg.pivot_rule, tol=cfg.feasibility_tol)


def _solution(problem: MilpProblem, status: Status, x=None, obj=math.nan, nodes=0) -> MilpSolution:
    if x is None:
        return MilpSolution(status, {}, obj if status is Status.OPTIMAL else math.nan, nodes)
    values = {v.name: float(x[i]) for i, v in enumerate(problem.variables)}
    return MilpSolution(status, values, float(obj), nodes)


def solve_lp_relaxation(problem: MilpProblem, cfg: SolverConfig = SolverConfig()) -> MilpSolution:
    """LP relaxation: binaries become continuous in [0, 1]."""
    upper = problem.arrays()[4]
    res = _lp_with_fixed(problem, {}, upper, cfg)
    return _solution(problem, res.status, res.x, res.objective)


class _Feasibility:
    """Incremental row-activity checks used by the rounding heuristic."""

    def __init__(self, problem: MilpProblem, tol: float):
        c, A, senses, b, upper, _ = problem.arrays()
        self.A, self.b = A, b
        self.le = np.array([s == LE for s in senses], dtype=bool)
        self.ge = np.array([s == GE for s in senses], dtype=bool)
        self.eq = ~(self.le | self.ge)
        self.slack = tol * (1.0 + np.abs(b))

    def ok(self, act, rows=slice(None)):
        b, s = self.b[rows], self.slack[rows]
        a = act[rows]
        bad = (self.le[rows] & (a > b + s)) | (self.ge[rows] & (a < b - s)) \
            | (self.eq[rows] & (np.abs(a - b) > s))
        return not bad.any()


def _round_up(problem, x, bins, fixed, feas: _Feasibility, int_tol):
    """Ceil every binary, then greedily drop costly ones while rows stay satisfied."""
    c, A = problem.arrays()[0], feas.A
    xr = x.copy()
    xr[bins] = np.ceil(x[bins] - int_tol)
    act = A @ xr
    if not feas.ok(act):
        return None
    order = sorted((j for j in bins if xr[j] == 1.0 and c[j] > 0 and j not in fixed),
                   key=lambda j: (-c[j], j))
    for j in order:
        col = A[:, j]
        rows = np.flatnonzero(col)
        trial = act[rows] - col[rows]
        probe = act.copy()
        probe[rows] = trial
        if feas.ok(probe, rows):
            act = probe
            xr[j] = 0.0
    return xr


def solve(problem: MilpProblem, cfg: SolverConfig = SolverConfig()) -> MilpSolution:
    """Exact best-bound branch-and-bound on the binary variables.

    Branches on the most fractional binary (ties: lowest variable index).
    Raises :class:`NodeLimitExceeded` when ``cfg.node_limit`` nodes have been
    solved without closing the tree.
    """
    c, A, senses, b, upper, is_bin = problem.arrays()
    bins = [int(j) for j in np.flatnonzero(is_bin)]
    bin_arr = np.array(bins, dtype=int)
    feas = _Feasibility(problem, 1e-9)
    int_tol = cfg.integrality_tol

    best_x, best_obj = None, math.inf
    counter = itertools.count()
    heap: list = [(-math.inf, next(counter), {}, None)]
    nodes = 0

    def polish(fixed_all, start):
        res = _lp_with_fixed(problem, fixed_all, upper, cfg, start)
        return (res.x, res.objective) if res.status is Status.OPTIMAL else (None, math.inf)

    while heap:
        bound, _, fixed, start = heapq.heappop(heap)
        if bound >= best_obj - 1e-9 * max(1.0, abs(best_obj)):
            continue
        nodes += 1
        if nodes > cfg.node_limit:
            raise NodeLimitExceeded(f"more than {cfg.node_limit} branch-and-bound nodes")
        res = _lp_with_fixed(problem, fixed, upper, cfg, start)
        status, x, obj = res.status, res.x, res.objective
        if status is Status.INFEASIBLE:
            continue
        if status is Status.UNBOUNDED:
            free = [j for j in bins if j not in fixed]
            if not free:
                return _solution(problem, Status.UNBOUNDED, nodes=nodes)
            j = free[0]
            for val in (0.0, 1.0):
                heapq.heappush(heap, (-math.inf, next(counter), {**fixed, j: val}, None))
            continue
        if obj >= best_obj - 1e-9 * max(1.0, abs(best_obj)):
            continue
        if bins:
            vals = x[bin_arr]
            frac = np.minimum(vals - np.floor(vals), np.ceil(vals) - vals)
            fractional = [(bins[t], frac[t]) for t in np.flatnonzero(frac > int_tol)]
        else:
            fractional = []
        if not fractional:
            fixed_all = {j: float(round(x[j])) for j in bins}
            px, pobj = polish(fixed_all, res.basis) if bins else (x, obj)
            if px is not None and pobj < best_obj:
                best_x, best_obj = px, pobj
            continue
        cand = _round_up(problem, x, bins, fixed, feas, int_tol)
        if cand is not None and float(c @ cand) < best_obj - 1e-9:
            px, pobj = polish({j: float(cand[j]) for j in bins}, res.basis)
            if px is not None and pobj < best_obj:
                best_x, best_obj = px, pobj
        if cfg.branching == "most_fractional":
            j = min(fractional, key=lambda t: (-round(t[1], 12), t[0]))[0]
        else:
            j = fractional[0][0]
        for val in (0.0, 1.0):
            heapq.heappush(heap, (obj, next(counter), {**fixed, j: val}, res.basis))

    if best_x is None:
        return _solution(problem, Status.INFEASIBLE, nodes=nodes)
    return _solution(problem, Status.OPTIMAL, best_x, best_obj, nodes)


def brute_force_solve(problem: MilpProblem, cfg: SolverConfig = SolverConfig(),
                      max_binaries: int = 20) -> MilpSolution:
    """Enumerate every binary assignment and solve the remaining LP."""
    upper = problem.arrays()[4]
    bins = problem.binaries
    if len(bins) > max_binaries:
        raise TooManyBinaries(f"{len(bins)} binaries > {max_binaries}")
    best_x, best_obj = None, math.inf
    # every assignment only tightens bounds, so the root basis is a valid dual start
    root = _lp_with_fixed(problem, {}, upper, cfg).basis if bins else None
    for assignment in itertools.product((0.0, 1.0), repeat=len(bins)):
        res = _lp_with_fixed(problem, dict(zip(bins, assignment)), upper, cfg, root)
        status, x, obj = res.status, res.x, res.objective
        if status is Status.UNBOUNDED:
            return _solution(problem, Status.UNBOUNDED)
        if status is Status.OPTIMAL and obj < best_obj:
            best_x, best_obj = x, obj
    if best_x is None:
        return _solution(problem, Status.INFEASIBLE)
    return _solution(problem, Status.OPTIMAL, best_x, best_obj)
