import io
import math

import numpy as np
import pytest

from maxgent import discrete, entropy, lp, model, oracle, solver
from conftest import random_bounded_problem

# the full admissible family of the three-bin problem: nu_r + nu_g = 4,
# nu_g + nu_b <= 6, listed with exact realization counts
THREE_BIN_TABLE = {
    (0, 4, 0): 1, (1, 3, 0): 4, (2, 2, 0): 6, (3, 1, 0): 4, (4, 0, 0): 1,
    (0, 4, 1): 5, (1, 3, 1): 20, (2, 2, 1): 30, (3, 1, 1): 20, (4, 0, 1): 5,
    (0, 4, 2): 15, (1, 3, 2): 60, (2, 2, 2): 90, (3, 1, 2): 60, (4, 0, 2): 15,
    (1, 3, 3): 140, (2, 2, 3): 210, (3, 1, 3): 140, (4, 0, 3): 35,
    (2, 2, 4): 420, (3, 1, 4): 280, (4, 0, 4): 70,
    (3, 1, 5): 504, (4, 0, 5): 126,
    (4, 0, 6): 210,
}


@pytest.fixture(scope="module")
def three_bin_enum(three_bin, three_bin_solution):
    bounds = lp.sum_bounds(three_bin)
    rng = discrete.integer_range(bounds, three_bin_solution.s_star)
    return oracle.enumerate_feasible(three_bin, 0.0, rng)


def test_enumeration_matches_table(three_bin_enum):
    got = dict(zip(three_bin_enum.vectors, three_bin_enum.counts))
    assert got == THREE_BIN_TABLE
    assert three_bin_enum.cardinality == 25


def test_enumeration_block_totals(three_bin_enum):
    by_n = {}
    for vec, cnt in zip(three_bin_enum.vectors, three_bin_enum.counts):
        by_n.setdefault(sum(vec), []).append(cnt)
    assert sum(by_n[4]) == 16
    assert sum(by_n[7]) == 525
    assert sum(by_n[10]) == 210


def test_enumeration_with_fixed_sum(three_bin):
    p7 = model.ProblemInstance(
        m=3, a_eq=np.vstack([three_bin.a_eq, np.ones((1, 3))]),
        b_eq=np.concatenate([three_bin.b_eq, [7.0]]),
        a_ineq=three_bin.a_ineq, b_ineq=three_bin.b_ineq)
    rng = discrete.IntegerRange(7, 7, 7)
    enum = oracle.enumerate_feasible(p7, 0.0, rng)
    assert set(enum.vectors) == {(1, 3, 3), (2, 2, 3), (3, 1, 3), (4, 0, 3)}


def test_enumeration_infeasible_empty():
    p = model.ProblemInstance(m=2, a_eq=[[1, 0], [1, 0]], b_eq=[1.2, 3.8],
                              a_ineq=np.zeros((0, 2)), b_ineq=[])
    enum = oracle.enumerate_feasible(p, 0.0, discrete.IntegerRange(1, 5, 3))
    assert enum.cardinality == 0
    assert enum.total_log_realizations == -math.inf


def test_enumeration_matches_naive_grid(three_bin):
    rng = discrete.IntegerRange(4, 10, 9)
    enum = oracle.enumerate_feasible(three_bin, 0.1, rng)
    naive = set()
    for a in range(11):
        for b in range(11):
            for c in range(11):
                v = np.array([a, b, c])
                if 4 <= v.sum() <= 10 and discrete.membership(v, three_bin, 0.1):
                    naive.add((a, b, c))
    assert set(enum.vectors) == naive


def test_enumeration_budget():
    p = model.ProblemInstance(m=4, a_eq=np.zeros((0, 4)), b_eq=[],
                              a_ineq=[[1, 1, 1, 1]], b_ineq=[60])
    with pytest.raises(oracle.BudgetExceededError):
        oracle.enumerate_feasible(p, 0.0, discrete.IntegerRange(0, 60, 30),
                                  budget=1000)


def test_enumeration_every_vector_is_member(three_bin):
    rng = discrete.IntegerRange(4, 10, 9)
    enum = oracle.enumerate_feasible(three_bin, 0.15, rng)
    for v in enum.vectors:
        assert discrete.membership(np.array(v), three_bin, 0.15)
        assert 4 <= sum(v) <= 10


def test_partition_entropy(three_bin_enum, three_bin_solution):
    sol = three_bin_solution
    a, b = oracle.partition_entropy(three_bin_enum, sol, 0.1)
    assert a.cardinality + b.cardinality == 25
    assert a.total_realizations + b.total_realizations == \
        three_bin_enum.total_realizations
    cut = 0.9 * sol.g_star
    for v in a.vectors:
        assert entropy.gen_entropy(np.array(v, float)) >= cut - 1e-9
    for v in b.vectors:
        assert entropy.gen_entropy(np.array(v, float)) < cut


def test_partition_entropy_extremes(three_bin_enum, three_bin_solution):
    a, b = oracle.partition_entropy(three_bin_enum, three_bin_solution, 1.0)
    assert b.cardinality == 0  # G >= 0 always
    a0, b0 = oracle.partition_entropy(three_bin_enum, three_bin_solution, 1e-12)
    # nothing in the exact-constraint family reaches G* itself
    assert a0.cardinality == 0


def test_partition_distance(three_bin_enum, three_bin_solution):
    sol = three_bin_solution
    a, b = oracle.partition_distance(three_bin_enum, sol, 0.1)
    assert a.cardinality + b.cardinality == 25
    ahuge, bhuge = oracle.partition_distance(three_bin_enum, sol, 50.0)
    assert bhuge.cardinality == 0


def test_partition_distance_contains_nu_star(three_bin_enum, three_bin_solution):
    sol = three_bin_solution
    nu = discrete.optimal_count_vector(sol)
    theta = (0.75 * sol.m + 1) / sol.s_star
    a, _ = oracle.partition_distance(three_bin_enum, sol, theta)
    assert tuple(nu) in a.vectors


def test_exact_ratio_three_bin(three_bin_enum):
    total = sum(THREE_BIN_TABLE.values())
    rest = total - 504
    b_set = oracle.EnumerationResult(
        tuple(v for v in three_bin_enum.vectors if v != (3, 1, 5)),
        tuple(c for v, c in zip(three_bin_enum.vectors, three_bin_enum.counts)
              if v != (3, 1, 5)), 0.0)
    ratio = oracle.exact_ratio(np.array([3, 1, 5]), b_set)
    assert ratio == pytest.approx(math.log(504) - math.log(rest), rel=1e-12)


def test_exact_ratio_empty_set():
    empty = oracle.EnumerationResult((), (), 0.0)
    assert oracle.exact_ratio(np.array([3, 1, 5]), empty) == math.inf


def test_soundness_three_bin_scaled(three_bin):
    for c in (3.0, 5.0):
        scaled = model.scale_problem(three_bin, c)
        sol = solver.maximize_g(scaled)
        bounds = lp.sum_bounds(scaled)
        rep = oracle.verify_soundness(scaled, sol, bounds,
                                      deltas=(0.05, 0.2), etas=(0.05, 0.2),
                                      thetas=(0.15, 0.4))
        assert rep.ok
        assert not rep.skipped
        assert all(e.margin >= 0 for e in rep.entries)


def test_soundness_negative_hook(three_bin):
    scaled = model.scale_problem(three_bin, 3.0)
    sol = solver.maximize_g(scaled)
    bounds = lp.sum_bounds(scaled)
    rep = oracle.verify_soundness(scaled, sol, bounds, _bound_offset=1e9)
    assert not rep.ok


def test_soundness_budget_skip(three_bin):
    scaled = model.scale_problem(three_bin, 5.0)
    sol = solver.maximize_g(scaled)
    bounds = lp.sum_bounds(scaled)
    rep = oracle.verify_soundness(scaled, sol, bounds, budget=10)
    assert rep.skipped


def test_soundness_random_problems():
    rng = np.random.default_rng(31)
    done = 0
    while done < 6:
        p = random_bounded_problem(rng, m=3, width_max=4.0)
        sol = solver.maximize_g(p)
        bounds = lp.sum_bounds(p)
        if bounds.s2 > 40 or np.any(sol.x_star <= 1.0):
            continue
        rep = oracle.verify_soundness(p, sol, bounds)
        assert rep.ok, rep
        done += 1


def test_csv_dump(three_bin_enum):
    buf = io.StringIO()
    oracle.dump_vectors_csv(three_bin_enum, buf)
    lines = buf.getvalue().strip().split("\n")
    assert lines[0] == "nu_1,nu_2,nu_3,n,count,G"
    assert len(lines) == 26
    row = dict(zip(lines[0].split(","), lines[1].split(",")))
    assert int(row["count"]) == THREE_BIN_TABLE[
        (int(row["nu_1"]), int(row["nu_2"]), int(row["nu_3"]))]
