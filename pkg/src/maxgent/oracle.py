"""Exhaustive ground truth at desk scale: enumerate the count vectors
admitted by the widened constraints, with exact realization counts, and
check the ratio bounds against them."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import concentration, discrete, entropy
from .discrete import IntegerRange, MEMBERSHIP_SLACK
from .lp import SumBounds
from .model import ProblemInstance
from .solver import Solution


class BudgetExceededError(Exception):
    def __init__(self, visited, found):
        super().__init__(f"enumeration budget exhausted after {visited} nodes "
                         f"({found} vectors found)")
        self.visited = visited
        self.found = found


@dataclass(frozen=True)
class EnumerationResult:
    vectors: tuple[tuple[int, ...], ...]
    counts: tuple[int, ...]          # exact realizations per vector
    delta: float

    @property
    def cardinality(self) -> int:
        return len(self.vectors)

    @property
    def total_realizations(self) -> int:
        return sum(self.counts)

    @property
    def total_log_realizations(self) -> float:
        total = self.total_realizations
        return math.log(total) if total > 0 else -math.inf


def _row_system(p: ProblemInstance, delta: float, rng: IntegerRange):
    """Rows as (coeffs, lower, upper); includes the all-ones sum row."""
    rows, lows, highs = [], [], []
    for a, b, beta in zip(p.a_eq, p.b_eq, p.beta_eq):
        rows.append(a)
        lows.append(b - delta * beta - MEMBERSHIP_SLACK)
        highs.append(b + delta * beta + MEMBERSHIP_SLACK)
    for a, b, beta in zip(p.a_ineq, p.b_ineq, p.beta_ineq):
        rows.append(a)
        lows.append(-math.inf)
        highs.append(b + delta * beta + MEMBERSHIP_SLACK)
    rows.append(np.ones(p.m))
    lows.append(float(rng.n1) - 0.5)
    highs.append(float(rng.n2) + 0.5)
    return np.array(rows), np.array(lows), np.array(highs)


def _variable_boxes(a, lo, hi, m):
    """Per-variable integer upper bounds via interval propagation sweeps."""
    ub = np.full(m, np.inf)
    neg = np.where(a < 0, a, 0.0)
    for _ in range(4):
        ub_f = np.minimum(ub, 1e18)
        for r in range(a.shape[0]):
            if not math.isfinite(hi[r]):
                continue
            row = a[r]
            row_min = float(neg[r] @ ub_f)  # least possible row value
            for j in range(m):
                if row[j] > 0:
                    other_min = row_min  # x_j >= 0 contributes nothing to row_min
                    cand = (hi[r] - other_min) / row[j]
                    if cand < ub[j]:
                        ub[j] = max(cand, 0.0)
    return np.floor(np.minimum(ub, 1e18) + 1e-9).astype(np.int64)


def enumerate_feasible(p: ProblemInstance, delta: float, rng: IntegerRange,
                       budget: int = 100_000_000) -> EnumerationResult:
    """All non-negative integer vectors with sum in [n1, n2] satisfying the
    delta-widened constraints. Depth-first with per-row interval pruning;
    the budget counts visited search nodes, not emitted vectors."""
    a, lo, hi = _row_system(p, delta, rng)
    m = p.m
    ub = _variable_boxes(a, lo, hi, m)
    n_rows = a.shape[0]

    vectors: list[tuple[int, ...]] = []
    counts: list[int] = []
    visited = 0

    # suffix bounds: for rows, the min/max contribution of variables j..m-1
    suf_min = np.zeros((m + 1, n_rows))
    suf_max = np.zeros((m + 1, n_rows))
    for j in range(m - 1, -1, -1):
        col = a[:, j]
        contrib_hi = np.where(col > 0, col * ub[j], 0.0)
        contrib_lo = np.where(col < 0, col * ub[j], 0.0)
        suf_min[j] = suf_min[j + 1] + contrib_lo
        suf_max[j] = suf_max[j + 1] + contrib_hi

    partial = np.zeros(n_rows)
    value = np.zeros(m, dtype=np.int64)

    def dfs(j):
        nonlocal visited, partial
        visited += 1
        if visited > budget:
            raise BudgetExceededError(visited, len(vectors))
        if j == m:
            if np.all(partial >= lo - 1e-9) and np.all(partial <= hi + 1e-9):
                vectors.append(tuple(int(v) for v in value))
                counts.append(entropy.log_realizations(value)[0])
            return
        col = a[:, j]
        lo_j, hi_j = 0, int(ub[j])
        for r in range(n_rows):
            c = col[r]
            if c == 0:
                continue
            rem_lo = suf_min[j + 1][r]
            rem_hi = suf_max[j + 1][r]
            # need lo[r] <= partial + c*v + rem <= hi[r] for some rem in range
            if c > 0:
                if math.isfinite(hi[r]):
                    hi_j = min(hi_j, int(math.floor((hi[r] - partial[r] - rem_lo) / c + 1e-9)))
                if math.isfinite(lo[r]):
                    lo_j = max(lo_j, int(math.ceil((lo[r] - partial[r] - rem_hi) / c - 1e-9)))
            else:
                if math.isfinite(hi[r]):
                    lo_j = max(lo_j, int(math.ceil((hi[r] - partial[r] - rem_lo) / c - 1e-9)))
                if math.isfinite(lo[r]):
                    hi_j = min(hi_j, int(math.floor((lo[r] - partial[r] - rem_hi) / c + 1e-9)))
        for v in range(lo_j, hi_j + 1):
            value[j] = v
            partial += col * v
            dfs(j + 1)
            partial -= col * v
        value[j] = 0

    dfs(0)
    return EnumerationResult(tuple(vectors), tuple(counts), delta)


def _subset(enum: EnumerationResult, mask) -> tuple[EnumerationResult, EnumerationResult]:
    in_v, in_c, out_v, out_c = [], [], [], []
    for vec, cnt, keep in zip(enum.vectors, enum.counts, mask):
        if keep:
            in_v.append(vec)
            in_c.append(cnt)
        else:
            out_v.append(vec)
            out_c.append(cnt)
    return (EnumerationResult(tuple(in_v), tuple(in_c), enum.delta),
            EnumerationResult(tuple(out_v), tuple(out_c), enum.delta))


def partition_entropy(enum: EnumerationResult, sol: Solution, eta: float):
    """(A, B): vectors with G(nu) >= (1-eta) G* and the complement."""
    cut = (1.0 - eta) * sol.g_star
    mask = [entropy.gen_entropy(np.array(v, dtype=float)) >= cut - 1e-12
            for v in enum.vectors]
    return _subset(enum, mask)


def partition_distance(enum: EnumerationResult, sol: Solution, theta: float):
    """(A, B): vectors l1-close to x* in the sum-compensated sense, and the rest."""
    x = sol.x_star
    if enum.vectors and len(enum.vectors[0]) != x.size:
        raise ValueError("enumeration dimension does not match the solution")
    s = sol.s_star
    mask = []
    for v in enum.vectors:
        arr = np.array(v, dtype=float)
        n = arr.sum()
        mask.append(float(np.abs(arr - x).sum())
                    <= abs(n - s) + min(n, s) * theta + 1e-9)
    return _subset(enum, mask)


def exact_ratio(nu_star, b_set: EnumerationResult) -> float:
    """ln(#nu* / total realizations of the far set); +inf when it is empty."""
    count = entropy.log_realizations(nu_star)[0]
    total = b_set.total_realizations
    if total == 0:
        return math.inf
    return math.log(count) - math.log(total)


@dataclass(frozen=True)
class SoundnessEntry:
    kind: str          # "entropy" | "distance"
    delta: float
    tol: float         # eta or theta
    exact_log_ratio: float
    bound_log: float

    @property
    def margin(self) -> float:
        return self.exact_log_ratio - self.bound_log


@dataclass(frozen=True)
class SoundnessReport:
    entries: tuple[SoundnessEntry, ...]
    skipped: tuple[str, ...]
    implication_checks: int

    @property
    def ok(self) -> bool:
        return all(e.margin >= 0 for e in self.entries)


def verify_soundness(p: ProblemInstance, sol: Solution, bounds: SumBounds,
                     deltas=(0.05, 0.2), etas=(0.05, 0.2), thetas=(0.15, 0.4),
                     epsilon: float = 1e-3, budget: int = 100_000_000,
                     _bound_offset: float = 0.0) -> SoundnessReport:
    """Exact-enumeration check that the ratio bounds hold at every grid point.

    The internal _bound_offset shifts the theorem bounds and exists so the
    negative-path test hook can force a visible failure.
    """
    rng = discrete.integer_range(bounds, sol.s_star)
    nu_star = discrete.optimal_count_vector(sol)
    entries = []
    skipped = []
    implications = 0
    for delta in deltas:
        try:
            enum = enumerate_feasible(p, delta, rng, budget)
        except BudgetExceededError as exc:
            skipped.append(f"delta={delta:g}: {exc}")
            continue
        for eta in etas:
            a_set, b_set = partition_entropy(enum, sol, eta)
            exact = exact_ratio(nu_star, b_set)
            bound = concentration.ratio_bound_entropy(sol, bounds, eta) + _bound_offset
            entries.append(SoundnessEntry("entropy", delta, eta, exact, bound))
            total = enum.total_realizations
            if exact >= -math.log(epsilon) and total > 0:
                # nu* dominating the far set must make the near set dominate
                # the whole admissible family
                share = a_set.total_realizations / total
                entries.append(SoundnessEntry(
                    "implication", delta, eta,
                    math.log(share) if share > 0 else -math.inf,
                    math.log(1.0 / (1.0 + epsilon))))
                implications += 1
        for theta in thetas:
            _, b_set = partition_distance(enum, sol, theta)
            exact = exact_ratio(nu_star, b_set)
            bound, _ = concentration.ratio_bound_distance(sol, bounds, delta, theta)
            entries.append(SoundnessEntry("distance", delta, theta, exact,
                                          bound + _bound_offset))
    return SoundnessReport(tuple(entries), tuple(skipped), implications)


def dump_vectors_csv(enum: EnumerationResult, fh):
    """CSV rows: nu_1..nu_m, n, exact count, G(nu)."""
    if not enum.vectors:
        return
    m = len(enum.vectors[0])
    fh.write(",".join([f"nu_{i + 1}" for i in range(m)] + ["n", "count", "G"]) + "\n")
    for vec, cnt in zip(enum.vectors, enum.counts):
        g = entropy.gen_entropy(np.array(vec, dtype=float))
        fh.write(",".join(str(v) for v in vec)
                 + f",{sum(vec)},{cnt},{g:.12g}\n")
