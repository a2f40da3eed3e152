"""The generalized entropy G, its calculus, and exact realization counts.

G(x) = -sum_i x_i ln x_i + (sum_i x_i) ln(sum_i x_i), with 0 ln 0 = 0.
For a count vector nu, e^{G(nu)} approximates the multinomial coefficient
counting the sequences that realize nu; the sandwich bounds below make the
approximation two-sided.
"""
from __future__ import annotations

import math

import numpy as np

# entries below this are treated as exact zeros to avoid log underflow
ZERO_FLOOR = 1e-300

EXACT_COUNT_LIMIT = 10_000


def _as_nonneg(x, name="x"):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError(f"{name} must be non-negative")
    return x


def ext_entropy(x) -> float:
    """-sum x_i ln x_i extended to arbitrary non-negative vectors."""
    x = _as_nonneg(x)
    mask = x > ZERO_FLOOR
    return float(-np.sum(x[mask] * np.log(x[mask])))


def gen_entropy(x) -> float:
    """G(x) = H(x) + s ln s with s = sum(x); equals s * H(x/s)."""
    x = _as_nonneg(x)
    s = float(x.sum())
    if s <= ZERO_FLOOR:
        return 0.0
    mask = x > ZERO_FLOOR
    # sum of x_i ln(s/x_i) is the numerically stable form
    return float(np.sum(x[mask] * np.log(s / x[mask])))


def grad_g(x) -> np.ndarray:
    """Gradient of G: entry i is ln(s/x_i). Requires x strictly positive."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ValueError("gradient of G requires strictly positive entries")
    return np.log(x.sum() / x)


def hessian_quadform(x, y) -> float:
    """y^T (Hessian of G at x) y = (sum y)^2 / s - sum y_i^2 / x_i; always <= 0."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0):
        raise ValueError("Hessian of G requires strictly positive entries")
    return float(y.sum() ** 2 / x.sum() - np.sum(y * y / x))


def log_realizations(nu) -> tuple[int | None, float]:
    """(exact count, natural log of the count) for the multinomial n!/(prod nu_i!).

    The exact big integer is computed for n <= 10_000; above that only the
    log-gamma value is returned.
    """
    nu_arr = np.asarray(nu)
    if np.any(nu_arr < 0) or np.any(nu_arr != np.floor(nu_arr)):
        raise ValueError("count vector entries must be non-negative integers")
    counts = [int(v) for v in nu_arr]
    n = sum(counts)
    log_val = math.lgamma(n + 1) - sum(math.lgamma(v + 1) for v in counts)
    if n > EXACT_COUNT_LIMIT:
        return None, log_val
    exact = 1
    partial = 0
    for v in counts:
        partial += v
        exact *= math.comb(partial, v)
    if exact > 0:
        log_val = math.log(exact)
    return exact, log_val


def stirling_factor(nu) -> float:
    """S(nu) = sqrt(n) / (2 pi)^{(k-1)/2} / sqrt(prod of the k nonzero entries)."""
    nu = np.asarray(nu, dtype=float)
    nz = nu[nu > 0]
    if nz.size == 0:
        raise ValueError("stirling factor undefined for the zero vector")
    n = nu.sum()
    k = nz.size
    log_s = 0.5 * math.log(n) - 0.5 * (k - 1) * math.log(2 * math.pi) \
        - 0.5 * float(np.sum(np.log(nz)))
    return math.exp(log_s)


def realization_sandwich(nu) -> tuple[float, float]:
    """Log-domain bounds (lower, upper) with lower <= ln #nu <= upper.

    lower = -k/12 + ln S(nu) + G(nu), upper = ln S(nu) + G(nu), where k is
    the number of nonzero entries. Valid for any nonzero count vector.
    """
    nu = np.asarray(nu, dtype=float)
    k = int(np.count_nonzero(nu))
    base = math.log(stirling_factor(nu)) + gen_entropy(nu)
    return base - k / 12.0, base


def entropy_drop_bound(x, zeta: float) -> float:
    """Lower bound on G(y) over all y >= 0 with ||y - x||_inf <= zeta.

    Requires x > zeta element-wise. The quadratic coefficient vanishes
    exactly when all entries of x are equal.
    """
    x = np.asarray(x, dtype=float)
    if zeta < 0:
        raise ValueError("zeta must be non-negative")
    if np.any(x <= zeta):
        raise ValueError("entropy_drop_bound requires x > zeta element-wise")
    s = x.sum()
    m = x.size
    lin = float(np.sum(np.log(s / x)))
    quad = float(np.sum(1.0 / (x - zeta)) - m / (s / m - zeta))
    return gen_entropy(x) - lin * zeta - 0.5 * quad * zeta * zeta


def divergence(p, q) -> float:
    """Relative entropy D(p || q) between density vectors."""
    p = _as_nonneg(np.asarray(p, dtype=float), "p")
    q = _as_nonneg(np.asarray(q, dtype=float), "q")
    if abs(p.sum() - 1.0) > 1e-12 or abs(q.sum() - 1.0) > 1e-12:
        raise ValueError("divergence arguments must sum to 1")
    mask = p > ZERO_FLOOR
    if np.any(q[mask] <= ZERO_FLOOR):
        raise ValueError("support of p must be contained in support of q")
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def sequence_log_prob(p, nu) -> float:
    """ln Pr_p(sigma) = sum nu_i ln p_i for any sequence sigma with counts nu.

    Equals -(G(nu) + n D(f || p)) with f = nu / n, which is how the bound
    machinery consumes it.
    """
    p = _as_nonneg(np.asarray(p, dtype=float), "p")
    nu = np.asarray(nu, dtype=float)
    if abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("p must sum to 1")
    mask = nu > 0
    if np.any(p[mask] <= ZERO_FLOOR):
        raise ValueError("sequence has positive count outside the support of p")
    return float(np.sum(nu[mask] * np.log(p[mask])))
