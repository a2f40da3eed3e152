"""Dense linear programming: sum bounds, feasibility oracle, tolerance radius."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ProblemInstance

FEAS_TOL = 1e-8


class LpError(Exception):
    pass


class InfeasibleError(LpError):
    pass


class UnboundedError(LpError):
    pass


@dataclass(frozen=True)
class LpResult:
    status: str  # optimal | infeasible | unbounded
    x: np.ndarray | None
    objective: float


@dataclass(frozen=True)
class SumBounds:
    s1: float
    s2: float


def _simplex(c, a, b):
    """min c.x  s.t.  a x = b, x >= 0, via the two-phase tableau method.

    Bland's rule throughout: the lowest-index candidate enters, and ties in
    the ratio test are broken by the lowest row basis index, so the solve is
    deterministic and cannot cycle. Returns (status, x, objective).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float).copy()
    c = np.asarray(c, dtype=float)
    n_rows, n_cols = a.shape

    neg = b < 0
    a = a.copy()
    a[neg] *= -1.0
    b[neg] *= -1.0

    # phase 1: artificial basis
    tab = np.zeros((n_rows + 1, n_cols + n_rows + 1))
    tab[:n_rows, :n_cols] = a
    tab[:n_rows, n_cols:n_cols + n_rows] = np.eye(n_rows)
    tab[:n_rows, -1] = b
    basis = list(range(n_cols, n_cols + n_rows))
    tab[-1, :] = -tab[:n_rows, :].sum(axis=0)
    tab[-1, n_cols:n_cols + n_rows] = 0.0

    scale = 1.0 + float(np.max(np.abs(b))) if n_rows else 1.0

    def pivot(row, col):
        tab[row, :] /= tab[row, col]
        for r in range(n_rows + 1):
            if r != row and tab[r, col] != 0.0:
                tab[r, :] -= tab[r, col] * tab[row, :]
        basis[row] = col

    def run_phase(active_cols):
        while True:
            enter = -1
            for j in active_cols:
                if tab[-1, j] < -1e-11 * scale:
                    enter = j
                    break
            if enter < 0:
                return "optimal"
            best_ratio, leave = None, -1
            for r in range(n_rows):
                if tab[r, enter] > 1e-11:
                    ratio = tab[r, -1] / tab[r, enter]
                    if best_ratio is None or ratio < best_ratio - 1e-13 or (
                            abs(ratio - best_ratio) <= 1e-13 and basis[r] < basis[leave]):
                        best_ratio, leave = ratio, r
            if leave < 0:
                return "unbounded"
            pivot(leave, enter)

    status = run_phase(range(n_cols))
    if status != "optimal" or tab[-1, -1] < -FEAS_TOL * scale:
        raise InfeasibleError("phase-1 optimum is positive: no feasible point")

    # drive any artificial variables out of the basis
    for r in range(n_rows):
        if basis[r] >= n_cols:
            for j in range(n_cols):
                if abs(tab[r, j]) > 1e-9:
                    pivot(r, j)
                    break

    # phase 2
    tab[-1, :] = 0.0
    tab[-1, :n_cols] = c
    for r in range(n_rows):
        if basis[r] < n_cols and tab[-1, basis[r]] != 0.0:
            tab[-1, :] -= tab[-1, basis[r]] * tab[r, :]
    tab[:, n_cols:n_cols + n_rows] = 0.0  # artificials retired

    status = run_phase(range(n_cols))
    x = np.zeros(n_cols)
    for r in range(n_rows):
        if basis[r] < n_cols:
            x[basis[r]] = tab[r, -1]
    if status == "unbounded":
        raise UnboundedError("objective unbounded below")
    return x, float(c @ x)


def _standard_form(p: ProblemInstance, extra_ub=None):
    """Equality standard form: slacks appended for the inequality rows."""
    n_slack = p.n_ineq
    a = np.zeros((p.n_eq + p.n_ineq, p.m + n_slack))
    b = np.concatenate([p.b_eq, p.b_ineq])
    if p.n_eq:
        a[:p.n_eq, :p.m] = p.a_eq
    if p.n_ineq:
        a[p.n_eq:, :p.m] = p.a_ineq
        a[p.n_eq:, p.m:] = np.eye(n_slack)
    return a, b


def solve_lp(objective, sense: str, p: ProblemInstance) -> LpResult:
    """Optimize a linear objective over the problem polytope (x >= 0 imposed).

    Infeasibility and unboundedness are reported in the status, not raised.
    """
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    obj = np.asarray(objective, dtype=float)
    if obj.shape != (p.m,):
        raise ValueError(f"objective has shape {obj.shape}, expected ({p.m},)")
    a, b = _standard_form(p)
    c = np.zeros(a.shape[1])
    c[:p.m] = obj if sense == "min" else -obj
    try:
        x_full, val = _simplex(c, a, b)
    except InfeasibleError:
        return LpResult("infeasible", None, np.nan)
    except UnboundedError:
        return LpResult("unbounded", None, np.nan)
    x = x_full[:p.m]
    return LpResult("optimal", x, float(obj @ x))


def sum_bounds(p: ProblemInstance) -> SumBounds:
    """The two LPs bounding sum(x) over the polytope."""
    ones = np.ones(p.m)
    lo = solve_lp(ones, "min", p)
    if lo.status == "infeasible":
        raise InfeasibleError("constraint system is infeasible")
    if lo.status == "unbounded":  # cannot happen with x >= 0, kept for symmetry
        raise UnboundedError("sum of variables unbounded below")
    hi = solve_lp(ones, "max", p)
    if hi.status == "unbounded":
        raise UnboundedError("problem admits arbitrarily large solutions")
    if hi.status == "infeasible":
        raise InfeasibleError("constraint system is infeasible")
    return SumBounds(s1=lo.objective, s2=hi.objective)


def analytic_sum_bounds(p: ProblemInstance) -> tuple[float | None, float | None]:
    """Closed-form lower bound on s1 and, when applicable, upper bound on s2.

    The s1 bound needs at least one equality row. The s2 bound needs all
    coefficients and data non-negative and every variable covered by some
    row; otherwise None is returned for that part.
    """
    s1_lb = None
    if p.n_eq:
        col_norm = np.abs(p.a_eq).sum(axis=0).max()
        if col_norm > 0:
            s1_lb = float(np.abs(p.b_eq).sum() / col_norm)

    s2_ub = None
    all_nonneg = (np.all(p.a_eq >= 0) and np.all(p.a_ineq >= 0)
                  and np.all(p.b_eq >= 0) and np.all(p.b_ineq >= 0))
    covered = np.zeros(p.m, dtype=bool)
    if p.n_eq:
        covered |= np.any(p.a_eq != 0, axis=0)
    if p.n_ineq:
        covered |= np.any(p.a_ineq != 0, axis=0)
    if all_nonneg and covered.all() and (p.n_eq + p.n_ineq) > 0:
        total = 0.0
        for a, b in ((p.a_eq, p.b_eq), (p.a_ineq, p.b_ineq)):
            for row, rhs in zip(a, b):
                nz = np.abs(row[row != 0])
                if nz.size == 0:
                    continue
                alpha = nz.min() if nz.min() < 1.0 else 1.0
                total += rhs / alpha
        s2_ub = float(total)
    return s1_lb, s2_ub


def theta_infinity(p: ProblemInstance) -> float:
    """Tolerance radius: any point within delta*theta_inf (l-inf) of a
    feasible point satisfies the delta-widened constraints."""
    parts = []
    if p.n_eq:
        norm = np.abs(p.a_eq).sum(axis=1).max()
        if norm > 0:
            parts.append(p.beta_eq.min() / norm)
    if p.n_ineq:
        norm = np.abs(p.a_ineq).sum(axis=1).max()
        if norm > 0:
            parts.append(p.beta_ineq.min() / norm)
    return float(min(parts)) if parts else float("inf")
