"""Dense bounded-variable simplex: two-phase primal plus a warm-started dual.

Works on ``min c.x  s.t.  A x (<=,==,>=) b,  l <= x <= u``.  Bounds are
handled implicitly (nonbasic variables sit at either bound, after shifting by
``l``), so binaries relaxed to [0, 1] cost no extra rows.

Pivoting is deterministic.  The primal default is Dantzig's largest reduced
cost; after a run of degenerate pivots it switches to Bland's smallest-index
rule until the objective strictly improves again, which rules out cycling.
``pivot_rule="bland"`` uses Bland's rule throughout.

A solve returns a :class:`Basis` that a later solve of the same rows with
tightened bounds can start from.  That reuse runs the dual simplex and falls
back to a cold start whenever the saved basis is unusable.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import GE, LE, Status

_DEGENERATE_STREAK = 30


@dataclass(frozen=True)
class Basis:
    basis: np.ndarray
    at_upper: np.ndarray
    art_sign: np.ndarray


@dataclass(frozen=True)
class LpResult:
    status: Status
    x: np.ndarray | None
    objective: float
    basis: Basis | None = None
    warm: bool = False


class _Tableau:
    def __init__(self, T, x_b, upper, basis, at_upper, tol):
        self.T = T
        self.x_b = x_b
        self.upper = upper
        self.basis = basis
        self.is_basic = np.zeros(T.shape[1], dtype=bool)
        self.is_basic[basis] = True
        self.at_upper = at_upper
        self.tol = tol

    def reduced_costs(self, cost):
        return cost - cost[self.basis] @ self.T

    def _pivot(self, r, q, d):
        T = self.T
        T[r] /= T[r, q]
        col = T[:, q].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        if nz.size:
            T[nz] -= col[nz, None] * T[r]
        d -= d[q] * T[r]

    def run(self, cost, allowed, bland_only, max_iter):
        """Primal simplex on ``cost`` from the current basic feasible solution.

        Returns "optimal" or "unbounded".
        """
        T, tol = self.T, self.tol
        d = self.reduced_costs(cost)
        dtol = tol * max(1.0, float(np.abs(cost).max(initial=0.0)))
        streak = 0
        bland = bland_only
        for _ in range(max_iter):
            elig = allowed & ~self.is_basic & (
                (~self.at_upper & (d < -dtol)) | (self.at_upper & (d > dtol)))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return "optimal"
            if bland:
                q = int(cand[0])
            else:
                q = int(cand[np.argmax(np.abs(d[cand]))])
            sigma = -1.0 if self.at_upper[q] else 1.0
            alpha = T[:, q]
            s = sigma * alpha
            theta = math.inf
            rows = np.empty(0, dtype=int)
            ub = self.upper[self.basis]
            ratios = np.full(s.shape, math.inf)
            dec = s > tol
            ratios[dec] = self.x_b[dec] / s[dec]
            inc = (s < -tol) & np.isfinite(ub)
            ratios[inc] = (ub[inc] - self.x_b[inc]) / (-s[inc])
            if ratios.size:
                np.maximum(ratios, 0.0, out=ratios)
                theta = float(ratios.min())
                if math.isfinite(theta):
                    rows = np.flatnonzero(ratios <= theta + tol)
            flip = self.upper[q]
            if not math.isfinite(theta) and not math.isfinite(flip):
                return "unbounded"
            if flip <= theta:
                self.x_b -= sigma * flip * alpha
                self.at_upper[q] = not self.at_upper[q]
                streak = 0
                bland = bland_only
                continue
            if bland:
                r = int(rows[np.argmin(self.basis[rows])])
            else:
                r = int(rows[np.argmax(np.abs(alpha[rows]))])
            to_upper = bool(s[r] < 0)
            self.x_b -= sigma * theta * alpha
            entering_value = theta if sigma > 0 else self.upper[q] - theta
            leave = self.basis[r]
            self.is_basic[leave] = False
            self.at_upper[leave] = to_upper
            self.basis[r] = q
            self.is_basic[q] = True
            self.at_upper[q] = False
            self.x_b[r] = entering_value
            self._pivot(r, q, d)
            if theta <= tol:
                streak += 1
                if streak >= _DEGENERATE_STREAK:
                    bland = True
            else:
                streak = 0
                bland = bland_only
            np.maximum(self.x_b, 0.0, out=self.x_b, where=self.x_b > -tol)
        raise RuntimeError("simplex iteration limit reached")

    def dual_run(self, cost, allowed, max_iter):
        """Dual simplex from a dual-feasible basis.

        Returns "optimal", "infeasible", or "fail" (basis not dual feasible or
        no progress; the caller then cold-starts).
        """
        T, tol = self.T, self.tol
        d = self.reduced_costs(cost)
        dtol = 1e-7 * max(1.0, float(np.abs(cost).max(initial=0.0)))
        movable = allowed & (self.upper > tol)
        nb = movable & ~self.is_basic
        if np.any(nb & ((~self.at_upper & (d < -dtol)) | (self.at_upper & (d > dtol)))):
            return "fail"
        ptol = 1e-9 * max(1.0, float(np.abs(self.x_b).max(initial=0.0)))
        for _ in range(max_iter):
            ub = self.upper[self.basis]
            infeas = np.maximum(-self.x_b, self.x_b - ub)
            r = int(np.argmax(infeas))
            if infeas[r] <= ptol:
                return "optimal"
            row = T[r]
            nb = movable & ~self.is_basic
            below = self.x_b[r] < 0
            if below:
                elig = nb & ((~self.at_upper & (row < -tol)) | (self.at_upper & (row > tol)))
            else:
                elig = nb & ((~self.at_upper & (row > tol)) | (self.at_upper & (row < -tol)))
            cand = np.flatnonzero(elig)
            if cand.size == 0:
                return "infeasible"
            ratios = np.abs(d[cand]) / np.abs(row[cand])
            best = ratios.min()
            ties = cand[ratios <= best + dtol]
            q = int(ties[np.argmax(np.abs(row[ties]))])
            target = 0.0 if below else ub[r]
            delta = (self.x_b[r] - target) / row[q]
            self.x_b -= delta * T[:, q]
            leave = self.basis[r]
            entering_value = (self.upper[q] if self.at_upper[q] else 0.0) + delta
            self.is_basic[leave] = False
            self.at_upper[leave] = not below
            self.basis[r] = q
            self.is_basic[q] = True
            self.at_upper[q] = False
            self.x_b[r] = entering_value
            self._pivot(r, q, d)
        return "fail"

    def values(self):
        x = np.where(self.at_upper, self.upper, 0.0)
        x[self.basis] = self.x_b
        return x


class _Form:
    """``[A | slacks | artificials]`` with bounds shifted so every lower bound is 0."""

    def __init__(self, c, A, senses, b, lower, upper):
        m, n = A.shape
        self.m, self.n = m, n
        slack_sign = np.array([1.0 if s == LE else (-1.0 if s == GE else 0.0) for s in senses])
        slack_rows = np.flatnonzero(slack_sign != 0)
        self.n_slack = slack_rows.size
        S = np.zeros((m, self.n_slack))
        S[slack_rows, np.arange(self.n_slack)] = slack_sign[slack_rows]
        self.AS = np.hstack([A, S])
        self.slack_coef = np.zeros(m)
        self.slack_col = np.full(m, -1)
        self.slack_coef[slack_rows] = slack_sign[slack_rows]
        self.slack_col[slack_rows] = n + np.arange(self.n_slack)
        self.b = b - A @ lower
        self.N = n + self.n_slack + m
        self.up = np.concatenate([upper - lower, np.full(self.n_slack, math.inf), np.zeros(m)])
        self.cost = np.zeros(self.N)
        self.cost[:n] = c

    def matrix(self, art_sign):
        return np.hstack([self.AS, np.diag(art_sign)])


def _finish(form: _Form, tab: _Tableau, M, lower, upper, c, warm):
    x = tab.values()
    # recompute basic values from the original columns to shed pivot drift
    nonbasic = ~tab.is_basic
    rhs = form.b - M[:, nonbasic] @ x[nonbasic]
    try:
        xb = np.linalg.solve(M[:, tab.basis], rhs)
        if np.all(np.isfinite(xb)) and np.allclose(xb, x[tab.basis], atol=1e-6, rtol=1e-6):
            x[tab.basis] = xb
    except np.linalg.LinAlgError:
        pass
    art_sign = np.diag(M[:, form.n + form.n_slack:]).copy()
    basis = Basis(tab.basis.copy(), tab.at_upper.copy(), art_sign)
    x = np.clip(x[:form.n] + lower, lower, upper)
    return LpResult(Status.OPTIMAL, x, float(c @ x), basis, warm)


def _cold(form: _Form, lower, upper, c, bland, tol):
    m, n, ns = form.m, form.n, form.n_slack
    b = form.b
    basis = np.empty(m, dtype=int)
    coef = np.empty(m)
    art_sign = np.where(b < 0, -1.0, 1.0)
    up = form.up.copy()
    needs_art = np.zeros(m, dtype=bool)
    for r in range(m):
        if form.slack_col[r] >= 0 and form.slack_coef[r] * b[r] >= 0:
            basis[r] = form.slack_col[r]
            coef[r] = form.slack_coef[r]
        else:
            basis[r] = n + ns + r
            coef[r] = art_sign[r]
            needs_art[r] = True
    up[n + ns:] = np.where(needs_art, math.inf, 0.0)
    M = form.matrix(art_sign)
    T = M / coef[:, None]
    tab = _Tableau(T, b / coef, up, basis, np.zeros(form.N, dtype=bool), tol)
    max_iter = 50 * (m + form.N) + 1000
    allowed = np.ones(form.N, dtype=bool)
    allowed[n + ns:] = needs_art
    if needs_art.any():
        phase1 = np.zeros(form.N)
        phase1[n + ns:] = needs_art.astype(float)
        tab.run(phase1, allowed, bland, max_iter)
        infeas = float(phase1 @ tab.values())
        if infeas > tol * max(1.0, float(np.abs(b).max())) * 10:
            return LpResult(Status.INFEASIBLE, None, math.nan)
        # artificials may stay basic on redundant rows but are pinned at zero
        tab.upper[n + ns:] = 0.0
        allowed[n + ns:] = False
    if tab.run(form.cost, allowed, bland, max_iter) == "unbounded":
        return LpResult(Status.UNBOUNDED, None, math.nan)
    return _finish(form, tab, M, lower, upper, c, False)


def _warm(form: _Form, start: Basis, lower, upper, c, bland, tol):
    M = form.matrix(start.art_sign)
    basis = start.basis.copy()
    B = M[:, basis]
    at_upper = start.at_upper.copy() & np.isfinite(form.up)
    at_upper[basis] = False
    x_n = np.where(at_upper, form.up, 0.0)
    try:
        T = np.linalg.solve(B, M)
        x_b = np.linalg.solve(B, form.b - M @ x_n)
    except np.linalg.LinAlgError:
        return None
    tab = _Tableau(T, x_b, form.up.copy(), basis, at_upper, tol)
    allowed = np.ones(form.N, dtype=bool)
    allowed[form.n + form.n_slack:] = False
    max_iter = 50 * (form.m + form.N) + 1000
    outcome = tab.dual_run(form.cost, allowed, max_iter)
    if outcome == "infeasible":
        return LpResult(Status.INFEASIBLE, None, math.nan, warm=True)
    if outcome != "optimal":
        return None
    # tidy up any dual infeasibility left by round-off
    if tab.run(form.cost, allowed, bland, max_iter) == "unbounded":
        return LpResult(Status.UNBOUNDED, None, math.nan, warm=True)
    if np.any(tab.x_b < -1e-7) or np.any(tab.x_b > tab.upper[tab.basis] + 1e-7):
        return None
    return _finish(form, tab, M, lower, upper, c, True)


def solve_lp_basis(c, A, senses, b, upper, *, lower=None, start: Basis | None = None,
                   pivot_rule="dantzig", tol=1e-9) -> LpResult:
    """Solve an LP and also return its optimal basis.

    ``start`` is a basis from an earlier solve of the same rows; the dual
    simplex continues from it after bounds were tightened.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    upper = np.asarray(upper, dtype=float)
    m, n = A.shape
    lower = np.zeros(n) if lower is None else np.asarray(lower, dtype=float)
    if np.any(lower > upper + tol):
        return LpResult(Status.INFEASIBLE, None, math.nan)
    if m == 0:
        if np.any((c < -tol) & ~np.isfinite(upper)):
            return LpResult(Status.UNBOUNDED, None, math.nan)
        x = np.where(c < 0, upper, lower)
        return LpResult(Status.OPTIMAL, x, float(c @ x))
    form = _Form(c, A, senses, b, lower, upper)
    bland = pivot_rule == "bland"
    if start is not None and start.basis.size == m:
        res = _warm(form, start, lower, upper, c, bland, tol)
        if res is not None:
            return res
    return _cold(form, lower, upper, c, bland, tol)


def solve_lp(c, A, senses, b, upper, *, lower=None, pivot_rule="dantzig", tol=1e-9):
    """Solve an LP given as dense arrays.

    Returns ``(status, x, objective)``; ``x`` is ``None`` unless optimal.
    """
    res = solve_lp_basis(c, A, senses, b, upper, lower=lower, pivot_rule=pivot_rule, tol=tol)
    return res.status, res.x, res.objective
