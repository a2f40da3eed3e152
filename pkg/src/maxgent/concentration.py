"""Concentration machinery: divergence constants, realization-ratio lower
bounds, and the three families of concentration thresholds.

All ratio bounds are computed and compared in the log domain; the raw
bounds overflow double precision long before the problems become
interesting.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .lp import SumBounds
from .solver import Solution

BETA_EXHAUSTIVE_LIMIT = 24


class PreScaleRequiredError(ValueError):
    """x* has entries <= 1; the bound family needs a pre-scaled problem."""


class ConditionError(ValueError):
    """A theorem applicability condition fails for the given tolerances."""


def _require_x_above_one(x):
    if np.any(np.asarray(x) <= 1.0):
        worst = float(np.min(x))
        raise PreScaleRequiredError(
            f"smallest x* entry is {worst:.6g} <= 1; scale the problem data "
            f"by at least {1.05 / worst:.4g} first")


# ---------------------------------------------------------------------------
# balance coefficient and divergence constant

def balance_beta_star(chi) -> tuple[float, bool]:
    """(beta*, exact) where beta* is the best even split of the density chi.

    beta* = max over index subsets I of min(sum_I chi, 1 - sum_I chi),
    i.e. the achievable subset sum closest to 1/2 from below. Exact via
    meet-in-the-middle for m <= 24; beyond that the certified lower bound
    (1 - chi_max)/2 is returned with exact=False.
    """
    chi = np.asarray(chi, dtype=float)
    if np.any(chi < -1e-12) or abs(chi.sum() - 1.0) > 1e-9:
        raise ValueError("balance coefficient needs a density vector")
    m = chi.size
    if m > BETA_EXHAUSTIVE_LIMIT:
        return float((1.0 - chi.max()) / 2.0), False

    half = m // 2
    first, second = chi[:half], chi[half:]

    def subset_sums(v):
        sums = np.zeros(1)
        for val in v:
            sums = np.concatenate([sums, sums + val])
        return np.unique(sums)

    sa = subset_sums(first)
    sb = subset_sums(second)
    best = 0.0
    # for each a, the partner is the largest b with a + b <= 1/2
    idx = np.searchsorted(sb, 0.5 + 1e-12 - sa, side="right") - 1
    ok = idx >= 0
    if np.any(ok):
        best = float(np.max(sa[ok] + sb[idx[ok]]))
    return min(best, 0.5), True


def pinsker_gamma_star(beta_star: float) -> float:
    """Divergence constant gamma(beta) = ln((1-b)/b) / (4(1-2b)), >= 1/2.

    Used in D(p||q) >= gamma * ||p - q||_1^2; equals exactly 1/2 at
    beta = 1/2 (continuous limit).
    """
    if not 0.0 <= beta_star <= 0.5 + 1e-12:
        raise ValueError(f"beta* must lie in [0, 1/2], got {beta_star}")
    if beta_star >= 0.5 - 1e-12:
        return 0.5
    if beta_star == 0.0:
        return math.inf
    return math.log((1.0 - beta_star) / beta_star) / (4.0 * (1.0 - 2.0 * beta_star))


def gamma_for_solution(sol: Solution) -> tuple[float, float, bool]:
    """(gamma*, beta*, exact); gamma* clamped to the universal 1/2 when the
    balance coefficient is only known by its lower bound."""
    bstar, exact = balance_beta_star(sol.chi_star)
    if exact:
        return pinsker_gamma_star(bstar), bstar, True
    return 0.5, bstar, False


# ---------------------------------------------------------------------------
# constants shared by the bound families

def _log_c2(x, s):
    return 0.5 * math.log(s) + float(np.sum(np.log(x / s) - 0.5 * np.log(x + 1.0)))


def _c4_exponent_full(x, s, m):
    return -0.5 * (float(np.sum(1.0 / (x - 1.0))) - m / (s / m - 1.0))


def _c4_exponent_scale_free(x):
    return -0.5 * float(np.sum(1.0 / (x - 1.0)))


def _log_c3(m, s1, s2):
    hi = (m + 1) * math.log(math.sqrt(m) + math.sqrt(s2 + 2.0))
    lo = (m + 1) * math.log(math.sqrt(m) + math.sqrt(s1))
    # stable log of difference of two exponentials
    return hi + math.log1p(-math.exp(lo - hi))

def _log_c3_prime(m, s1, s2, s_star, gamma, theta):
    t1 = (m + 1) * math.log(math.sqrt(s2 + 2.0) + math.sqrt(m)) \
        - gamma * theta * theta * (s_star + 1.0)
    t2 = (m + 1) * math.log(math.sqrt(s_star + 2.0) + math.sqrt(m)) \
        - gamma * theta * theta * s1
    return np.logaddexp(t1, t2)


def _log_c3_dprime(m, s1, s2, s_star, gamma, theta):
    t1 = (m + 1) * math.log(math.sqrt(s2 + 2.0) + math.sqrt(m)) \
        - gamma * theta * theta * (1.0 + s_star - s1)
    t2 = (m + 1) * math.log(math.sqrt(s_star + 2.0) + math.sqrt(m))
    return float(np.logaddexp(t1, t2))


def _log_prefactor(m, pooled_two_pi: bool):
    """(m+1) Gamma(m/2) e^{-m/12} over (2 pi)^{m/2} or 2 pi^{m/2}.

    The pooled form is the weaker constant; the threshold machinery for the
    entropy-deviation family is calibrated to it, the distance family to
    the other.
    """
    denom = 0.5 * m * math.log(2 * math.pi) if pooled_two_pi \
        else math.log(2.0) + 0.5 * m * math.log(math.pi)
    return math.log(m + 1.0) + math.lgamma(m / 2.0) - m / 12.0 - denom


def log_b_entropy(sol: Solution, bounds: SumBounds) -> float:
    """ln B for the entropy-deviation threshold equation."""
    x, s, m = sol.x_star, sol.s_star, sol.m
    _require_x_above_one(x)
    return _log_prefactor(m, pooled_two_pi=True) + _log_c2(x, s) \
        + _c4_exponent_scale_free(x) - _log_c3(m, bounds.s1, bounds.s2)


def log_b_prime(sol: Solution) -> float:
    """ln B' for the distance threshold equations."""
    x, s, m = sol.x_star, sol.s_star, sol.m
    _require_x_above_one(x)
    return _log_prefactor(m, pooled_two_pi=False) + _log_c2(x, s) \
        + _c4_exponent_scale_free(x)


# ---------------------------------------------------------------------------
# root finding

def solve_exp_linear(a: float, m: int, rhs: float) -> float:
    """Largest root c of  a*c - m*ln(c) = rhs, clamped to >= 1.

    The left side decreases until c = m/a then increases; when rhs is below
    the minimum the inequality a*c - m*ln(c) >= rhs holds everywhere and 1
    is returned.
    """
    if not a > 0:
        raise ValueError(f"coefficient a must be positive, got {a}")
    if m < 0:
        raise ValueError("m must be non-negative")
    if m == 0:
        return max(1.0, rhs / a)

    def f(c):
        return a * c - m * math.log(c)

    c_stat = m / a
    if f(c_stat) >= rhs:
        return 1.0
    lo = c_stat
    hi = 2.0 * c_stat
    while f(hi) < rhs:
        hi *= 2.0
        if hi > 1e300:
            raise ArithmeticError("root bracketing diverged")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < rhs:
            lo = mid
        else:
            hi = mid
    return max(1.0, 0.5 * (lo + hi))


def _bisect_decreasing(f, lo, hi, target, iters=300):
    """Root of decreasing f on [lo, hi] with f(lo) > target >= f(hi)."""
    for _ in range(iters):
        mid = math.sqrt(lo * hi)  # geometric: the domain spans many decades
        if f(mid) > target:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


# ---------------------------------------------------------------------------
# ratio lower bounds (log domain)

def ratio_bound_entropy(sol: Solution, bounds: SumBounds, eta: float) -> float:
    """ln of the guaranteed lower bound on (#nu*) / (#far-entropy set)."""
    if not eta > 0:
        raise ValueError("eta must be positive")
    x, s, m = sol.x_star, sol.s_star, sol.m
    _require_x_above_one(x)
    return _log_prefactor(m, pooled_two_pi=False) + _log_c2(x, s) \
        + _c4_exponent_full(x, s, m) - _log_c3(m, bounds.s1, bounds.s2) \
        + eta * sol.g_star


def ratio_bound_distance(sol: Solution, bounds: SumBounds, delta: float,
                         theta: float) -> tuple[float, bool]:
    """(ln bound, useful) for (#nu*) / (#far-distance set).

    useful is False when the exponent gamma* theta^2 s1 - Lambda* delta is
    not positive, in which case the bound cannot grow under scaling.
    """
    if not theta > 0 or delta < 0:
        raise ValueError("need theta > 0 and delta >= 0")
    x, s, m = sol.x_star, sol.s_star, sol.m
    _require_x_above_one(x)
    gamma, _, _ = gamma_for_solution(sol)
    exponent = gamma * theta * theta * bounds.s1 - sol.lambda_star_bound * delta
    val = _log_prefactor(m, pooled_two_pi=False) + _log_c2(x, s) \
        + _c4_exponent_full(x, s, m) \
        - _log_c3_prime(m, bounds.s1, bounds.s2, s, gamma, theta) + exponent
    return float(val), exponent > 0


# ---------------------------------------------------------------------------
# threshold reports

@dataclass(frozen=True)
class EntropyThresholdReport:
    c1: float
    c2: float
    c3: float
    c_hat: float
    log_b: float
    log_c0: float
    log_c2_const: float
    log_c3_const: float
    log_c4_const: float
    eta: float
    delta: float
    epsilon: float


@dataclass(frozen=True)
class DistanceThresholdReport:
    c1: float
    c2: float
    c3: float
    c_hat: float
    log_b_prime: float
    log_c3_dprime: float
    gamma_star: float
    beta_star: float
    lambda_star: float
    theta: float
    delta: float
    epsilon: float
    delta_condition_ok: bool


def threshold_entropy(sol: Solution, bounds: SumBounds, theta_inf: float,
                      delta: float, epsilon: float, eta: float) -> EntropyThresholdReport:
    """Concentration threshold for entropy deviation: scaling the data by
    any c >= c_hat makes nu* beat the far-entropy set by the factor 1/eps."""
    if not (delta > 0 and epsilon > 0 and eta > 0):
        raise ValueError("delta, epsilon, eta must all be positive")
    x, s, m = sol.x_star, sol.s_star, sol.m
    _require_x_above_one(x)
    g_star = sol.g_star
    log_b = log_b_entropy(sol, bounds)
    c1 = solve_exp_linear(eta * g_star, m, -(math.log(epsilon) + log_b))
    c2 = 1.0 / (delta * theta_inf) if math.isfinite(theta_inf) else 0.0
    sig1 = float(np.sum(1.0 / (x - 1.0)))
    sig2 = float(np.sum(np.log(s / x)))
    a = eta * g_star
    c3 = (sig2 + math.sqrt(sig2 * sig2 + 2.0 * a * sig1)) / (2.0 * a)
    return EntropyThresholdReport(
        c1=c1, c2=c2, c3=c3, c_hat=max(c1, c2, c3),
        log_b=log_b,
        log_c0=-m / 12.0 - 0.5 * (m - 1) * math.log(2 * math.pi)
               + _log_c2(x, s) + _c4_exponent_full(x, s, m),
        log_c2_const=_log_c2(x, s),
        log_c3_const=_log_c3(m, bounds.s1, bounds.s2),
        log_c4_const=_c4_exponent_full(x, s, m),
        eta=eta, delta=delta, epsilon=epsilon)


def threshold_bounds_entropy(sol: Solution, bounds: SumBounds, theta_inf: float,
                             delta: float, epsilon: float, eta: float) -> tuple[float, float]:
    """Closed-form (lower, upper) bracket of the entropy threshold c_hat."""
    if not (delta > 0 and epsilon > 0 and eta > 0):
        raise ValueError("delta, epsilon, eta must all be positive")
    x, m = sol.x_star, sol.m
    _require_x_above_one(x)
    g_star = sol.g_star
    ln_eb = math.log(epsilon) + log_b_entropy(sol, bounds)
    c2 = 1.0 / (delta * theta_inf) if math.isfinite(theta_inf) else 0.0
    lower = max(-ln_eb / (eta * g_star), c2)
    u1 = (2.0 * m / (eta * g_star)) * math.log((m - ln_eb) / (eta * g_star)) \
        - ln_eb / (eta * g_star)
    u3 = math.sqrt(float(np.sum(1.0 / (x - 1.0))) / (2.0 * eta * g_star))
    upper = max(u1, c2, u3)
    return lower, upper


def threshold_distance(sol: Solution, bounds: SumBounds, theta_inf: float,
                       delta: float, epsilon: float, theta: float) -> DistanceThresholdReport:
    """Concentration threshold for l1 distance from x*; requires the
    compatibility condition theta^2 > Lambda* delta / (2 gamma* s1)."""
    if not (delta > 0 and epsilon > 0 and theta > 0):
        raise ValueError("delta, epsilon, theta must all be positive")
    x, s, m = sol.x_star, sol.s_star, sol.m
    _require_x_above_one(x)
    gamma, bstar, _ = gamma_for_solution(sol)
    lam = sol.lambda_star_bound
    min_theta = math.sqrt(lam * delta / (2.0 * gamma * bounds.s1))
    ok = theta * theta > lam * delta / (2.0 * gamma * bounds.s1)
    if not ok:
        raise ConditionError(
            f"tolerances incompatible: need theta > {min_theta:.6g} for "
            f"delta = {delta:g} (or a smaller delta)")
    log_bp = log_b_prime(sol)
    log_c3pp = _log_c3_dprime(m, bounds.s1, bounds.s2, s, gamma, theta)
    a = 2.0 * gamma * theta * theta * bounds.s1 - lam * delta
    rhs = log_c3pp - math.log(epsilon) - log_bp
    c3 = solve_exp_linear(a, m, rhs)
    c1 = (0.75 * m + 1.0) / (theta * s)
    c2 = 1.0 / (delta * theta_inf) if math.isfinite(theta_inf) else 0.0
    return DistanceThresholdReport(
        c1=c1, c2=c2, c3=c3, c_hat=max(c1, c2, c3),
        log_b_prime=log_bp, log_c3_dprime=log_c3pp,
        gamma_star=gamma, beta_star=bstar, lambda_star=lam,
        theta=theta, delta=delta, epsilon=epsilon, delta_condition_ok=ok)


def threshold_auto_delta(sol: Solution, bounds: SumBounds, theta_inf: float,
                         epsilon: float, theta: float
                         ) -> tuple[float, float, DistanceThresholdReport]:
    """Distance threshold with the constraint tolerance chosen optimally.

    Picks delta0 equalizing the two delta-dependent threshold components,
    which is the root of a monotone transcendental equation; returns
    (delta0, c_hat, report).
    """
    if not (epsilon > 0 and theta > 0):
        raise ValueError("epsilon and theta must be positive")
    x, s, m = sol.x_star, sol.s_star, sol.m
    _require_x_above_one(x)
    if not math.isfinite(theta_inf):
        raise ConditionError("auto-delta mode needs a finite tolerance radius")
    gamma, bstar, _ = gamma_for_solution(sol)
    lam = sol.lambda_star_bound
    if lam < m * theta_inf:
        raise ConditionError(
            f"applicability fails: Lambda* = {lam:.6g} < m * theta_inf = "
            f"{m * theta_inf:.6g}")
    theta_cap = lam * math.sqrt(s / m + 1.0) / (gamma * theta_inf * bounds.s1) \
        * epsilon ** (-1.0 / m)
    if not theta * theta < theta_cap:
        raise ConditionError(
            f"applicability fails: theta^2 = {theta * theta:.6g} not below "
            f"{theta_cap:.6g}")
    log_bp = log_b_prime(sol)
    log_c3pp = _log_c3_dprime(m, bounds.s1, bounds.s2, s, gamma, theta)
    coeff = 2.0 * gamma * theta * theta * bounds.s1 / theta_inf
    rhs = log_c3pp - math.log(epsilon) - log_bp + lam / theta_inf \
        - m * math.log(theta_inf)
    delta_max = 2.0 * gamma * theta * theta * bounds.s1 / lam

    def f(d):
        return coeff / d + m * math.log(d)

    if f(delta_max) > rhs:
        delta0 = delta_max
    else:
        delta0 = _bisect_decreasing(f, delta_max * 1e-18, delta_max, rhs)
    c2 = 1.0 / (delta0 * theta_inf)
    c1 = (0.75 * m + 1.0) / (theta * s)
    c_hat = max(c1, c2)
    report = DistanceThresholdReport(
        c1=c1, c2=c2, c3=c2, c_hat=c_hat,
        log_b_prime=log_bp, log_c3_dprime=log_c3pp,
        gamma_star=gamma, beta_star=bstar, lambda_star=lam,
        theta=theta, delta=delta0, epsilon=epsilon, delta_condition_ok=True)
    return delta0, c_hat, report


def threshold_lower_bound_distance(sol: Solution, theta_inf: float,
                                   theta: float) -> float:
    """Closed-form lower bound on the auto-delta threshold."""
    if not theta > 0:
        raise ValueError("theta must be positive")
    gamma, _, _ = gamma_for_solution(sol)
    h_chi = float(np.sum(sol.chi_star * np.log(1.0 / sol.chi_star)))
    t1 = h_chi / (2.0 * gamma) / (theta_inf * theta * theta) \
        if math.isfinite(theta_inf) else 0.0
    t2 = 3.0 * sol.m / (4.0 * sol.s_star * theta)
    return max(t1, t2)
