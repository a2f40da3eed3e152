import numpy as np
import pytest

from maxgent import model


@pytest.fixture(scope="session")
def three_bin():
    """x1 + x2 = 4, x2 + x3 <= 6: the enumerable three-bin problem."""
    return model.ProblemInstance(m=3, a_eq=[[1, 1, 0]], b_eq=[4],
                                 a_ineq=[[0, 1, 1]], b_ineq=[6])


@pytest.fixture(scope="session")
def network():
    """Six-link measurement network: three path sums, three link caps."""
    return model.ProblemInstance(
        m=6,
        a_eq=[[1, 0, 0, 1, 0, 1],
              [0, 0, 1, 0, 1, 1],
              [0, 1, 0, 1, 1, 0]],
        b_eq=[10.5, 18.3, 8.7],
        a_ineq=[[0, 0, 0, 1, 0, 0],
                [0, 0, 0, 0, 1, 0],
                [0, 0, 0, 0, 0, 1]],
        b_ineq=[4.0, 4.0, 4.0])


def four_city_instance():
    """Four-city trip matrix: 16 vars v_ij, zero diagonal, row-sum caps,
    and three lower bounds on observed segment flows."""
    m = 16

    def idx(i, j):
        return 4 * i + j

    a_eq, b_eq = [], []
    for i in range(4):
        row = [0.0] * m
        row[idx(i, i)] = 1.0
        a_eq.append(row)
        b_eq.append(0.0)
    a_in, b_in = [], []
    for i, cap in enumerate([100.0, 120.0, 80.0, 90.0]):
        row = [0.0] * m
        for j in range(4):
            if j != i:
                row[idx(i, j)] = 1.0
        a_in.append(row)
        b_in.append(cap)
    for pairs, lo in ([[(1, 2), (1, 3)], 80.0],
                      [[(2, 0), (3, 0)], 59.0],
                      [[(0, 3), (1, 3), (2, 3)], 70.0]):
        row = [0.0] * m
        for i, j in pairs:
            row[idx(i, j)] = -1.0
        a_in.append(row)
        b_in.append(-lo)
    return model.ProblemInstance(m=m, a_eq=a_eq, b_eq=b_eq,
                                 a_ineq=a_in, b_ineq=b_in)


@pytest.fixture(scope="session")
def four_city():
    return four_city_instance()


@pytest.fixture(scope="session")
def network_solution(network):
    from maxgent import solver
    return solver.maximize_g(network)


@pytest.fixture(scope="session")
def three_bin_solution(three_bin):
    from maxgent import solver
    return solver.maximize_g(three_bin)


@pytest.fixture(scope="session")
def four_city_solution(four_city):
    from maxgent import solver
    return solver.maximize_g(four_city)


def random_bounded_problem(rng: np.random.Generator, m=None,
                           lo_min=1.3, width_max=8.0):
    """Random feasible box-with-couplings problem with x* > 1 guaranteed
    (every coordinate has a lower bound above 1)."""
    m = m or int(rng.integers(2, 5))
    lo = lo_min + rng.uniform(0.0, 2.0, size=m)
    hi = lo + rng.uniform(1.0, width_max, size=m)
    a_in, b_in = [], []
    for j in range(m):
        row = np.zeros(m)
        row[j] = 1.0
        a_in.append(row)
        b_in.append(hi[j])
        a_in.append(-row)
        b_in.append(-lo[j])
    if rng.random() < 0.5:
        # one random coupling row keeps things from being a plain box
        w = rng.uniform(0.5, 1.5, size=m)
        mid = float(w @ (lo + hi) / 2)
        a_in.append(w)
        b_in.append(mid)
    return model.ProblemInstance(m=m, a_eq=np.zeros((0, m)), b_eq=[],
                                 a_ineq=a_in, b_ineq=b_in)
