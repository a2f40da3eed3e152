import numpy as np
import pytest

from maxgent import discrete, lp, model, solver
from conftest import random_bounded_problem


def scaled_solution(sol, c):
    """Direct scaling of a solution (data scaled by c scales everything by c
    except the normalized vector and the multipliers)."""
    return solver.Solution(
        x_star=c * sol.x_star, kept_indices=sol.kept_indices, orig_m=sol.orig_m,
        s_star=c * sol.s_star, chi_star=sol.chi_star, g_star=c * sol.g_star,
        lambda_eq=sol.lambda_eq, lambda_bind=sol.lambda_bind,
        binding_rows=sol.binding_rows,
        lambda_star_bound=c * sol.lambda_star_bound,
        kkt_residual=sol.kkt_residual, problem=sol.problem)


def test_integer_range_basic():
    rng = discrete.integer_range(lp.SumBounds(21.5, 37.5), 31.34)
    assert (rng.n1, rng.n2, rng.n_star) == (22, 38, 32)
    rng2 = discrete.integer_range(lp.SumBounds(4.0, 10.0), 8.6056)
    assert (rng2.n1, rng2.n2, rng2.n_star) == (4, 10, 9)


def test_integer_range_network(network_solution, network):
    b = lp.sum_bounds(network)
    rng = discrete.integer_range(b, network_solution.s_star)
    assert rng.n_star == 32
    assert rng.n1 == 26 and rng.n2 == 38


def test_integer_range_ordering():
    rng = np.random.default_rng(3)
    for _ in range(200):
        s1 = rng.uniform(0, 50)
        s2 = s1 + rng.uniform(0, 30)
        s = rng.uniform(s1, s2)
        r = discrete.integer_range(lp.SumBounds(s1, s2), s)
        assert r.n1 <= r.n_star <= r.n2


def test_optimal_count_vector_three_bin(three_bin_solution):
    nu = discrete.optimal_count_vector(three_bin_solution)
    assert list(nu) == [3, 1, 5]
    assert nu.sum() == 9


def test_optimal_count_vector_network(network_solution):
    nu = discrete.optimal_count_vector(network_solution)
    assert list(nu) == [7, 5, 14, 1, 2, 3]
    assert nu.sum() == 32


@pytest.mark.parametrize("c, expected", [
    (1000.0 / 29.0, (227, 184, 457, 39, 78, 96)),
    (91.2678, (602, 486, 1210, 102, 206, 255)),
    (191.9182, (1265, 1022, 2545, 215, 433, 535)),
    (40.2537, (266, 214, 534, 45, 91, 112)),
    (106.7927, (703, 569, 1416, 120, 241, 298)),
    (222.8726, (1469, 1187, 2955, 250, 502, 622)),
])
def test_optimal_count_vector_scaled_network(network_solution, c, expected):
    nu = discrete.optimal_count_vector(scaled_solution(network_solution, c))
    assert tuple(nu) == expected


def test_optimal_count_vector_four_city(four_city_solution):
    nu = discrete.optimal_count_vector(scaled_solution(four_city_solution, 1167.0))
    assert tuple(nu) == (38900, 38900, 38900, 46681, 46680, 46680,
                         32401, 30479, 30479, 36452, 34289, 34289)
    assert nu.sum() == 455130


def test_optimal_count_vector_norm_bounds(network_solution):
    rng = np.random.default_rng(5)
    for _ in range(60):
        c = rng.uniform(1.0, 400.0)
        scaled = scaled_solution(network_solution, c)
        nu = discrete.optimal_count_vector(scaled)
        m = scaled.m
        n_star = nu.sum()
        assert np.abs(nu - scaled.x_star).max() <= 1.0 + 1e-9
        assert np.abs(nu - scaled.x_star).sum() <= 0.75 * m + 1.0 + 1e-9
        f = nu / n_star
        assert np.abs(f - scaled.chi_star).sum() <= 0.75 * m / n_star + 1e-9


def test_optimal_count_vector_norm_bounds_random():
    rng = np.random.default_rng(6)
    for _ in range(40):
        p = random_bounded_problem(rng)
        sol = solver.maximize_g(p)
        for c in (1.0, 7.7, 33.3):
            scaled = scaled_solution(sol, c)
            nu = discrete.optimal_count_vector(scaled)
            assert nu.sum() == discrete._iceil(scaled.s_star)
            assert np.abs(nu - scaled.x_star).max() <= 1.0 + 1e-9
            assert np.abs(nu - scaled.x_star).sum() <= 0.75 * sol.m + 1.0 + 1e-9


def test_optimal_count_vector_permutation_invariance(network):
    perm = np.array([3, 0, 5, 1, 4, 2])
    permuted = model.ProblemInstance(
        m=6, a_eq=network.a_eq[:, perm], b_eq=network.b_eq,
        a_ineq=network.a_ineq[:, perm], b_ineq=network.b_ineq)
    nu_base = discrete.optimal_count_vector(solver.maximize_g(network))
    nu_perm = discrete.optimal_count_vector(solver.maximize_g(permuted))
    assert np.array_equal(nu_perm, nu_base[perm])


def test_membership_basic(network):
    x_rounded = np.array([7, 5, 13, 1, 2, 3])
    # largest relative residual is 0.7/8.7
    assert discrete.membership(x_rounded, network, 0.0805)
    assert not discrete.membership(x_rounded, network, 0.08)
    assert not discrete.membership(x_rounded, network, 0.0)


def test_membership_feasible_at_zero(network, network_solution):
    assert discrete.membership(network_solution.x_star, network, 0.0)


def test_membership_dimension_check(network):
    with pytest.raises(ValueError):
        discrete.membership(np.ones(4), network, 0.1)


def test_min_delta_network(network):
    x_rounded = np.array([7, 5, 13, 1, 2, 3])
    assert discrete.min_delta(x_rounded, network) == pytest.approx(0.7 / 8.7, rel=1e-12)


def test_min_delta_zero_on_feasible(network, network_solution):
    assert discrete.min_delta(network_solution.x_star, network) < 1e-9


def test_min_delta_scaled_nu_star(network_solution, network):
    """At the first scaling row the count vector satisfies the equalities
    with relative tolerance 0.0033 and the inequalities exactly."""
    c = 1000.0 / 29.0
    scaled_p = model.scale_problem(network, c)
    nu = discrete.optimal_count_vector(scaled_solution(network_solution, c))
    resid = np.abs(scaled_p.a_eq @ nu - scaled_p.b_eq)
    assert resid.max() / np.abs(scaled_p.b_eq).min() == pytest.approx(0.0033, abs=2e-4)
    assert np.all(scaled_p.a_ineq @ nu <= scaled_p.b_ineq)
    assert discrete.min_delta(nu, scaled_p) == pytest.approx(0.0033, abs=2e-4)


def test_min_delta_membership_consistency(network):
    rng = np.random.default_rng(7)
    for _ in range(100):
        nu = rng.integers(0, 15, size=6)
        d = discrete.min_delta(nu, network)
        assert discrete.membership(nu, network, d)
        if d > 1e-6:
            assert not discrete.membership(nu, network, d - 1e-6 * (1 + d))


def test_rounding_membership_guarantee(network):
    """Rounding any feasible point stays within delta >= 1/(2 theta_inf)."""
    rng = np.random.default_rng(8)
    ti = lp.theta_infinity(network)
    delta = 1.0 / (2.0 * ti)
    for _ in range(50):
        res = lp.solve_lp(rng.normal(size=6), "max", network)
        w = rng.uniform(0, 1)
        - res.x  # vertices only would be too special; mix two of them
        res2 = lp.solve_lp(rng.normal(size=6), "max", network)
        x = w * res.x + (1 - w) * res2.x
        rounded = discrete.round_half_up(x)
        assert discrete.membership(rounded, network, delta)


def test_round_half_up():
    assert list(discrete.round_half_up([0.5, 1.49, 2.5, -0.0, 3.51])) == [1, 1, 3, 0, 4]
