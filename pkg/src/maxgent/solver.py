"""Maximization of the generalized entropy over the constraint polytope.

Pipeline: Frank-Wolfe with away steps (the LP module is the linear oracle)
to locate the optimum and its binding set, elimination of coordinates forced
to zero, then a Newton polish of the reduced KKT system down to kkt_tol.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import lsq_linear

from . import lp
from .entropy import gen_entropy
from .model import ProblemInstance

GRAD_FLOOR = 1e-18


class SolverError(Exception):
    pass


class KktInconsistencyError(SolverError):
    """A supposedly binding inequality carries a negative multiplier."""

    def __init__(self, message, row: int | None = None):
        super().__init__(message)
        self.row = row


@dataclass(frozen=True)
class SolverOptions:
    kkt_tol: float = 1e-8
    fw_gap_tol: float = 1e-10
    fw_max_iter: int = 100_000
    # the Newton polish only needs a warm start; once the duality gap is
    # below this (relative) level further FW iterations are wasted
    fw_warmstart_gap: float = 1e-6
    fw_warmstart_iter: int = 800
    binding_tol: float = 1e-7
    zero_tol: float = 1e-9
    newton_max_iter: int = 100


@dataclass(frozen=True)
class Solution:
    """Optimum of G over the polytope, on the zero-eliminated coordinates."""

    x_star: np.ndarray            # strictly positive, length m' <= m
    kept_indices: np.ndarray      # map from reduced to original coordinates
    orig_m: int                   # dimension of the problem as posed
    s_star: float
    chi_star: np.ndarray
    g_star: float
    lambda_eq: np.ndarray
    lambda_bind: np.ndarray
    binding_rows: np.ndarray      # inequality indices binding at x*
    lambda_star_bound: float
    kkt_residual: float
    problem: ProblemInstance      # reduced problem the fields refer to

    @property
    def m(self) -> int:
        return self.x_star.size

    def embed(self, values=None) -> np.ndarray:
        """Expand a reduced-space vector (default x*) to original coordinates."""
        v = self.x_star if values is None else np.asarray(values, dtype=float)
        out = np.zeros(self.orig_m)
        out[self.kept_indices] = v
        return out


def _safe_grad(x):
    x = np.maximum(x, GRAD_FLOOR)
    return np.log(x.sum() / x)


def _line_search(x, d, gmax):
    """Maximize G along x + g*d for g in [0, gmax]; G is concave there."""
    def slope(g):
        pt = np.maximum(x + g * d, 0.0)
        return float(_safe_grad(pt) @ d)

    if slope(gmax) >= 0.0:
        return gmax
    lo, hi = 0.0, gmax
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _interior_start(p: ProblemInstance):
    """Feasible point maximizing the smallest slack/coordinate margin."""
    # variables (x, t): maximize t  s.t.  A_eq x = b_eq, A_in x + t <= b_in,
    # -x_j + t <= 0; a cap row keeps t bounded when there are no inequalities.
    m = p.m
    cap = 1.0 + float(np.abs(p.b_eq).sum() + np.abs(p.b_ineq).sum())
    a_eq = np.hstack([p.a_eq, np.zeros((p.n_eq, 1))]) if p.n_eq else np.zeros((0, m + 1))
    rows, rhs = [], []
    for row, b in zip(p.a_ineq, p.b_ineq):
        rows.append(np.concatenate([row, [1.0]]))
        rhs.append(b)
    for j in range(m):
        r = np.zeros(m + 1)
        r[j] = -1.0
        r[m] = 1.0
        rows.append(r)
        rhs.append(0.0)
    r = np.zeros(m + 1)
    r[m] = 1.0
    rows.append(r)
    rhs.append(cap)
    aug = ProblemInstance(m=m + 1, a_eq=a_eq, b_eq=p.b_eq,
                          a_ineq=np.array(rows), b_ineq=np.array(rhs))
    obj = np.zeros(m + 1)
    obj[m] = 1.0
    res = lp.solve_lp(obj, "max", aug)
    if res.status != "optimal":
        raise SolverError(f"feasibility LP returned {res.status}")
    return res.x[:m]


def _frank_wolfe(p: ProblemInstance, opts: SolverOptions, x0=None):
    """Away-step Frank-Wolfe; returns the final iterate."""
    x = _interior_start(p) if x0 is None else np.asarray(x0, dtype=float)
    active: dict[tuple, float] = {}

    for it in range(opts.fw_max_iter):
        g = _safe_grad(x)
        res = lp.solve_lp(g, "max", p)
        if res.status != "optimal":
            raise SolverError(f"linear oracle returned {res.status}")
        v = res.x
        gap = float(g @ (v - x))
        scale = max(1.0, abs(gen_entropy(x)))
        if gap <= opts.fw_gap_tol * scale:
            break
        if gap <= opts.fw_warmstart_gap * scale and it >= 10:
            break
        if it >= opts.fw_warmstart_iter:
            break

        away_key = None
        if active:
            away_key = min(active, key=lambda k: float(g @ np.array(k)))
        use_away = False
        if away_key is not None and active[away_key] < 1.0 - 1e-12:
            a = np.array(away_key)
            use_away = float(g @ (v - x)) < float(g @ (x - a))
        if use_away:
            a = np.array(away_key)
            w = active[away_key]
            step = _line_search(x, x - a, w / (1.0 - w))
            factor = 1.0 + step
            for k in list(active):
                active[k] *= factor
            active[away_key] -= step
            if active[away_key] <= 1e-14:
                del active[away_key]
            x = np.maximum(x + step * (x - a), 0.0)
        else:
            step = _line_search(x, v - x, 1.0)
            key = tuple(v)
            if step >= 1.0 - 1e-14:
                active = {key: 1.0}
            else:
                for k in list(active):
                    active[k] *= 1.0 - step
                active[key] = active.get(key, 0.0) + step
            x = np.maximum(x + step * (v - x), 0.0)
    return x


def _binding_set(p: ProblemInstance, x, binding_tol):
    if p.n_ineq == 0:
        return np.array([], dtype=int)
    resid = p.b_ineq - p.a_ineq @ x
    tol = binding_tol * (1.0 + np.abs(p.b_ineq))
    return np.nonzero(resid <= tol)[0]


def _newton_polish(p: ProblemInstance, x, binding, opts: SolverOptions):
    """Safeguarded Newton iteration on the KKT system with the given rows
    pinned active.

    Unknowns are x and one multiplier per pinned row; steps are damped to
    keep x strictly positive and backtracked on the KKT residual so a bad
    active-set guess degrades gracefully instead of diverging.
    """
    rows = [p.a_eq[i] for i in range(p.n_eq)] + [p.a_ineq[i] for i in binding]
    rhs = [p.b_eq[i] for i in range(p.n_eq)] + [p.b_ineq[i] for i in binding]
    a = np.array(rows) if rows else np.zeros((0, p.m))
    b = np.array(rhs)
    k = a.shape[0]
    m = p.m

    x = np.maximum(np.asarray(x, dtype=float), 1e-10 * max(1.0, float(np.sum(x))))
    lam = np.linalg.lstsq(a.T, np.log(x.sum() / x), rcond=None)[0] if k else np.zeros(0)

    def residuals(xv, lv):
        s = xv.sum()
        f1 = np.log(s / xv) - (a.T @ lv if k else 0.0)
        f2 = a @ xv - b if k else np.zeros(0)
        return f1, f2

    def merit(f1, f2):
        return max(np.abs(f1).max(initial=0.0), np.abs(f2).max(initial=0.0))

    scale = 1.0 + float(np.abs(b).max(initial=0.0))
    f1, f2 = residuals(x, lam)
    res = merit(f1, f2)
    for _ in range(opts.newton_max_iter):
        if res <= 1e-13 * scale:
            break
        s = x.sum()
        hess = np.full((m, m), 1.0 / s)
        hess[np.diag_indices(m)] -= 1.0 / x
        kkt = np.zeros((m + k, m + k))
        kkt[:m, :m] = hess
        if k:
            kkt[:m, m:] = -a.T
            kkt[m:, :m] = a
        rhs_vec = np.concatenate([-f1, -f2])
        try:
            delta = np.linalg.solve(kkt, rhs_vec)
        except np.linalg.LinAlgError:
            delta = np.linalg.lstsq(kkt, rhs_vec, rcond=None)[0]
        if not np.all(np.isfinite(delta)):
            delta = np.linalg.lstsq(kkt, rhs_vec, rcond=None)[0]
            if not np.all(np.isfinite(delta)):
                break
        dx, dlam = delta[:m], delta[m:]
        alpha = 1.0
        neg = dx < 0
        if np.any(neg):
            alpha = min(1.0, 0.95 * float(np.min(-x[neg] / dx[neg])))
        improved = False
        for _ in range(40):
            x_new = x + alpha * dx
            lam_new = lam + alpha * dlam
            if np.all(x_new > 0):
                f1n, f2n = residuals(x_new, lam_new)
                res_new = merit(f1n, f2n)
                if np.isfinite(res_new) and res_new < res * (1.0 - 1e-4 * alpha):
                    x, lam, f1, f2, res = x_new, lam_new, f1n, f2n, res_new
                    improved = True
                    break
            alpha *= 0.5
        if not improved:
            break
    return x, lam


def recover_multipliers(p: ProblemInstance, x_star, binding_tol: float = 1e-7):
    """Multipliers solving  [a_eq; a_binding]^T lam = ln(s*/x*_j)  with the
    binding-inequality block constrained non-negative.

    Returns (lambda_eq, lambda_bind, binding_rows, kkt_residual). Raises
    KktInconsistencyError when the unconstrained least-squares solution puts
    a clearly negative multiplier on a binding inequality, which signals a
    wrong binding set.
    """
    x_star = np.asarray(x_star, dtype=float)
    if np.any(x_star <= 0):
        raise ValueError("multiplier recovery requires strictly positive x*")
    binding = _binding_set(p, x_star, binding_tol)
    g = np.log(x_star.sum() / x_star)
    rows = [p.a_eq[i] for i in range(p.n_eq)] + [p.a_ineq[i] for i in binding]
    if not rows:
        if np.abs(g).max(initial=0.0) > 1e-6:
            raise KktInconsistencyError("no constraints but gradient nonzero")
        return np.zeros(0), np.zeros(0), binding, 0.0
    mat = np.array(rows).T  # m x k
    k_eq = p.n_eq
    free = np.linalg.lstsq(mat, g, rcond=None)[0]
    lam_scale = 1.0 + float(np.abs(free).max(initial=0.0))
    if np.any(free[k_eq:] < -1e-6 * lam_scale):
        worst = int(binding[int(np.argmin(free[k_eq:]))])
        raise KktInconsistencyError(
            f"negative multiplier on binding inequality row {worst}", row=worst)
    lo = np.concatenate([np.full(k_eq, -np.inf), np.zeros(free.size - k_eq)])
    res = lsq_linear(mat, g, bounds=(lo, np.full(free.size, np.inf)),
                     method="bvls", tol=1e-14)
    lam = res.x
    kkt_residual = float(np.abs(mat @ lam - g).max(initial=0.0))
    return lam[:k_eq], lam[k_eq:], binding, kkt_residual


def lambda_star(lambda_eq, b_eq, lambda_bind, b_bind) -> float:
    """|lam_eq| . |b_eq| + lam_bind . |b_bind|; always >= G*."""
    total = float(np.abs(np.asarray(lambda_eq)) @ np.abs(np.asarray(b_eq))) \
        if np.size(lambda_eq) else 0.0
    if np.size(lambda_bind):
        total += float(np.asarray(lambda_bind) @ np.abs(np.asarray(b_bind)))
    return total


def eliminate_zeros(p: ProblemInstance, x_draft, zero_tol: float = 1e-9):
    """Pin near-zero draft coordinates to 0, drop them, and drop rows that
    become vacuous. Returns (reduced problem, kept original indices)."""
    x = np.asarray(x_draft, dtype=float)
    keep = np.nonzero(x > zero_tol * max(float(x.sum()), 1e-300))[0]
    if keep.size == 0:
        raise SolverError("all variables forced to zero")
    if keep.size == p.m:
        return p, np.arange(p.m)

    a_eq = p.a_eq[:, keep]
    a_in = p.a_ineq[:, keep]
    keep_eq, keep_in = [], []
    for i in range(p.n_eq):
        if np.any(a_eq[i] != 0):
            keep_eq.append(i)
        elif abs(p.b_eq[i]) > 1e-9:
            raise SolverError(f"equality row {i} infeasible after zero elimination")
    for i in range(p.n_ineq):
        if np.any(a_in[i] != 0):
            keep_in.append(i)
        elif p.b_ineq[i] < -1e-9:
            raise SolverError(f"inequality row {i} infeasible after zero elimination")
    reduced = ProblemInstance(
        m=keep.size,
        a_eq=a_eq[keep_eq].reshape(len(keep_eq), keep.size),
        b_eq=p.b_eq[keep_eq],
        a_ineq=a_in[keep_in].reshape(len(keep_in), keep.size),
        b_ineq=p.b_ineq[keep_in],
        beta_substitute=p.beta_substitute,
    )
    return reduced, keep


def maximize_g(p: ProblemInstance, opts: SolverOptions | None = None,
               x0=None) -> Solution:
    """Solve the generalized-entropy maximization problem over the polytope.

    Returns the unique optimum with multipliers recovered and forced zeros
    eliminated (kept_indices records the embedding into the original space).
    x0 optionally overrides the interior starting point (it must be feasible).
    """
    opts = opts or SolverOptions()
    lp.sum_bounds(p)  # raises on infeasible / unbounded input

    reduced = p
    kept = np.arange(p.m)
    x = _frank_wolfe(reduced, opts, x0=x0)
    for _ in range(p.m):
        reduced2, keep2 = eliminate_zeros(reduced, x, opts.zero_tol)
        if reduced2 is reduced:
            break
        kept = kept[keep2]
        reduced = reduced2
        x = _frank_wolfe(reduced, opts)

    binding = _binding_set(reduced, x, max(opts.binding_tol, 1e-4))
    lam_eq = lam_bind = binding_out = kkt_residual = None
    for _ in range(4 * reduced.m + 2 * reduced.n_ineq + 8):
        if binding.size == 0 and reduced.n_eq == 0 and reduced.m > 1:
            # an interior maximum of G does not exist, so some inequality
            # must anchor the KKT system: start from the tightest one
            slack = (reduced.b_ineq - reduced.a_ineq @ x) / (1 + np.abs(reduced.b_ineq))
            binding = np.array([int(np.argmin(slack))])
        x, _ = _newton_polish(reduced, x, binding, opts)
        if reduced.n_ineq:
            viol = reduced.a_ineq @ x - reduced.b_ineq
            bad = np.nonzero(viol > opts.binding_tol * (1 + np.abs(reduced.b_ineq)))[0]
            bad = np.setdiff1d(bad, binding)
            if bad.size:
                binding = np.unique(np.concatenate([binding, bad]))
                continue
        try:
            lam_eq, lam_bind, binding_out, kkt_residual = recover_multipliers(
                reduced, x, opts.binding_tol)
        except KktInconsistencyError as exc:
            if exc.row is None:
                slack = (reduced.b_ineq - reduced.a_ineq @ x) / (1 + np.abs(reduced.b_ineq))
                binding = np.array([int(np.argmin(slack))])
                continue
            if exc.row in binding:
                binding = binding[binding != exc.row]
                continue
            raise
        extra = np.setdiff1d(binding_out, binding)
        if extra.size:
            binding = np.unique(np.concatenate([binding, extra]))
            continue
        break
    else:
        raise SolverError("binding-set resolution did not converge")

    s = float(x.sum())
    g_star = gen_entropy(x)
    lam_star = lambda_star(lam_eq, reduced.b_eq, lam_bind, reduced.b_ineq[binding_out])
    return Solution(
        x_star=x,
        kept_indices=kept,
        orig_m=p.m,
        s_star=s,
        chi_star=x / s,
        g_star=g_star,
        lambda_eq=lam_eq,
        lambda_bind=lam_bind,
        binding_rows=binding_out,
        lambda_star_bound=lam_star,
        kkt_residual=kkt_residual,
        problem=reduced,
    )


@dataclass(frozen=True)
class ScalingReport:
    c: float
    x_rel_dev: float
    g_rel_dev: float
    multiplier_dev: float


def verify_scaling(sol: Solution, p: ProblemInstance, c: float,
                   opts: SolverOptions | None = None) -> ScalingReport:
    """Re-solve the c-scaled problem and compare with the direct scaling of
    the given solution; multipliers must be scale-invariant."""
    from .model import scale_problem

    scaled = maximize_g(scale_problem(p, c), opts)
    x_dev = float(np.abs(scaled.embed() - c * sol.embed()).max() / (c * sol.s_star))
    g_dev = abs(scaled.g_star - c * sol.g_star) / (c * abs(sol.g_star)) \
        if sol.g_star else abs(scaled.g_star)
    lam_a = np.concatenate([sol.lambda_eq, sol.lambda_bind])
    lam_b = np.concatenate([scaled.lambda_eq, scaled.lambda_bind])
    if lam_a.size == lam_b.size:
        mdev = float(np.abs(lam_a - lam_b).max(initial=0.0))
    else:
        mdev = float("inf")
    return ScalingReport(c=c, x_rel_dev=x_dev, g_rel_dev=g_dev, multiplier_dev=mdev)
