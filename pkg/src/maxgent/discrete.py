"""Integer side of the pipeline: sum range, the optimal count vector,
and tolerance-set membership."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lp import SumBounds
from .model import ProblemInstance
from .solver import Solution

# floating slack absorbed by the non-strict membership comparisons
MEMBERSHIP_SLACK = 1e-12
# products like c * s_star land on integers in exact arithmetic; snap before
# taking ceilings or classifying rounding directions
INT_SNAP = 1e-6


@dataclass(frozen=True)
class IntegerRange:
    n1: int
    n2: int
    n_star: int


def _iceil(v: float) -> int:
    r = round(v)
    if abs(v - r) <= INT_SNAP * max(1.0, abs(v)):
        return int(r)
    return int(math.ceil(v))


def integer_range(bounds: SumBounds, s_star: float) -> IntegerRange:
    """n1 = ceil(s1), n2 = ceil(s2), n* = ceil(s*)."""
    if not (bounds.s1 - 1e-9 <= s_star <= bounds.s2 + 1e-9):
        raise ValueError(f"s* = {s_star} outside [s1, s2] = [{bounds.s1}, {bounds.s2}]")
    return IntegerRange(n1=_iceil(bounds.s1), n2=_iceil(bounds.s2), n_star=_iceil(s_star))


def round_half_up(z) -> np.ndarray:
    z = np.asarray(z, dtype=float)
    snap = np.abs(z - np.round(z)) <= INT_SNAP * np.maximum(1.0, np.abs(z))
    z = np.where(snap, np.round(z), z)
    return np.floor(z + 0.5).astype(np.int64)


def optimal_count_vector(sol: Solution) -> np.ndarray:
    """Integral approximation of x* summing to n* = ceil(s*).

    Round n* chi* per coordinate, then repair the sum defect d by adjusting
    |d| eligible entries (rounded down when d < 0, rounded up when d > 0).
    Among the eligible entries the largest ones are adjusted first, ties
    broken by lowest index; relative to the entry the perturbation is then
    smallest. Guarantees ||nu* - x*||_inf <= 1 and sum == n*.
    """
    n_star = _iceil(sol.s_star)
    z = n_star * sol.chi_star
    x = sol.x_star
    snap = np.abs(z - np.round(z)) <= INT_SNAP * np.maximum(1.0, np.abs(z))
    z = np.where(snap, np.round(z), z)
    nu = np.floor(z + 0.5).astype(np.int64)
    d = int(nu.sum()) - n_star
    if d != 0:
        if d < 0:
            eligible = [i for i in range(nu.size) if nu[i] <= z[i]]
            delta = 1
        else:
            eligible = [i for i in range(nu.size) if nu[i] > z[i]]
            delta = -1
        # prefer entries where the adjusted value still lands within 1 of
        # x*, which preserves the max-norm guarantee
        safe = [i for i in eligible if abs(nu[i] + delta - x[i]) <= 1.0 + 1e-9]
        pool = safe if len(safe) >= abs(d) else eligible
        pool.sort(key=lambda i: (-z[i], i))
        if len(pool) < abs(d):
            raise RuntimeError("sum repair needs more eligible entries than exist")
        for i in pool[:abs(d)]:
            nu[i] += delta
    return nu


def membership(v, p: ProblemInstance, delta: float = 0.0) -> bool:
    """Whether v satisfies the delta-widened constraints (non-strict).

    Equalities become two-sided bands of half-width delta*beta; inequalities
    are relaxed upward by delta*beta.
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (p.m,):
        raise ValueError(f"vector has shape {v.shape}, expected ({p.m},)")
    if delta < 0:
        raise ValueError("delta must be >= 0")
    if p.n_eq:
        r = p.a_eq @ v - p.b_eq
        if np.any(np.abs(r) > delta * p.beta_eq + MEMBERSHIP_SLACK):
            return False
    if p.n_ineq:
        r = p.a_ineq @ v - p.b_ineq
        if np.any(r > delta * p.beta_ineq + MEMBERSHIP_SLACK):
            return False
    return True


def min_delta(v, p: ProblemInstance) -> float:
    """Smallest delta >= 0 for which v lies in the widened constraint set:
    the largest constraint residual measured relative to its beta."""
    v = np.asarray(v, dtype=float)
    if v.shape != (p.m,):
        raise ValueError(f"vector has shape {v.shape}, expected ({p.m},)")
    worst = 0.0
    if p.n_eq:
        worst = max(worst, float(np.max(np.abs(p.a_eq @ v - p.b_eq) / p.beta_eq)))
    if p.n_ineq:
        excess = np.maximum(p.a_ineq @ v - p.b_ineq, 0.0)
        worst = max(worst, float(np.max(excess / p.beta_ineq)))
    return worst
