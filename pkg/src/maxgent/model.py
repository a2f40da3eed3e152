"""Problem representation: constraint systems, tolerances, scaling, file I/O."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


class ModelError(ValueError):
    """Structurally invalid problem data."""


def effective_beta(b, substitute: float = 1.0) -> np.ndarray:
    """Element-wise |b_i|, with zero entries replaced by `substitute`.

    The result scales the constraint tolerance bands, so it must be
    strictly positive.
    """
    if substitute <= 0:
        raise ModelError(f"beta substitute must be positive, got {substitute}")
    b = np.asarray(b, dtype=float)
    out = np.abs(b)
    out[out == 0.0] = substitute
    return out


@dataclass(frozen=True)
class ProblemInstance:
    """Linear constraint system  A_eq x = b_eq,  A_ineq x <= b_ineq,  x >= 0.

    beta_eq / beta_ineq are the tolerance scales: |b| with zero entries
    replaced by `beta_substitute`.
    """

    m: int
    a_eq: np.ndarray
    b_eq: np.ndarray
    a_ineq: np.ndarray
    b_ineq: np.ndarray
    beta_substitute: float = 1.0
    beta_eq: np.ndarray = field(init=False)
    beta_ineq: np.ndarray = field(init=False)

    def __post_init__(self):
        a_eq = np.atleast_2d(np.asarray(self.a_eq, dtype=float))
        a_in = np.atleast_2d(np.asarray(self.a_ineq, dtype=float))
        if a_eq.size == 0:
            a_eq = a_eq.reshape(0, self.m)
        if a_in.size == 0:
            a_in = a_in.reshape(0, self.m)
        b_eq = np.asarray(self.b_eq, dtype=float).reshape(-1)
        b_in = np.asarray(self.b_ineq, dtype=float).reshape(-1)
        if a_eq.shape[1] != self.m:
            raise ModelError(f"equality matrix has {a_eq.shape[1]} columns, expected m={self.m}")
        if a_in.shape[1] != self.m:
            raise ModelError(f"inequality matrix has {a_in.shape[1]} columns, expected m={self.m}")
        if a_eq.shape[0] != b_eq.shape[0]:
            raise ModelError(f"{a_eq.shape[0]} equality rows but {b_eq.shape[0]} rhs values")
        if a_in.shape[0] != b_in.shape[0]:
            raise ModelError(f"{a_in.shape[0]} inequality rows but {b_in.shape[0]} rhs values")
        for arr in (a_eq, b_eq, a_in, b_in):
            if not np.all(np.isfinite(arr)):
                raise ModelError("constraint data must be finite")
        object.__setattr__(self, "a_eq", a_eq)
        object.__setattr__(self, "b_eq", b_eq)
        object.__setattr__(self, "a_ineq", a_in)
        object.__setattr__(self, "b_ineq", b_in)
        object.__setattr__(self, "beta_eq", effective_beta(b_eq, self.beta_substitute))
        object.__setattr__(self, "beta_ineq", effective_beta(b_in, self.beta_substitute))
        for arr in (self.a_eq, self.b_eq, self.a_ineq, self.b_ineq,
                    self.beta_eq, self.beta_ineq):
            arr.setflags(write=False)

    @property
    def n_eq(self) -> int:
        return self.a_eq.shape[0]

    @property
    def n_ineq(self) -> int:
        return self.a_ineq.shape[0]


def scale_problem(p: ProblemInstance, c: float) -> ProblemInstance:
    """Multiply the data vectors b (and hence beta) by c > 0; A unchanged."""
    if not c > 0:
        raise ModelError(f"scale factor must be positive, got {c}")
    return ProblemInstance(
        m=p.m,
        a_eq=p.a_eq.copy(),
        b_eq=p.b_eq * c,
        a_ineq=p.a_ineq.copy(),
        b_ineq=p.b_ineq * c,
        beta_substitute=p.beta_substitute * c,
    )


@dataclass(frozen=True)
class ToleranceSet:
    """Tolerance parameters for the concentration machinery.

    delta   relative tolerance on constraint satisfaction (>= 0)
    epsilon concentration tolerance on realization counts (> 0)
    eta     relative tolerance on deviation from the maximum entropy value
    theta   absolute tolerance on l1 distance from the optimal vector
    """

    delta: float = 0.0
    epsilon: float | None = None
    eta: float | None = None
    theta: float | None = None

    def __post_init__(self):
        if self.delta < 0:
            raise ModelError("delta must be >= 0")
        for name in ("epsilon", "eta", "theta"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ModelError(f"{name} must be strictly positive, got {v}")

    def require(self, *names: str):
        for name in names:
            if getattr(self, name) in (None, 0.0) and name != "delta":
                raise ModelError(f"tolerance '{name}' is required here")
        if "delta" in names and self.delta <= 0:
            raise ModelError("a strictly positive delta is required here")


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_problem(p: ProblemInstance) -> ValidationReport:
    """Structural checks plus a boundedness/feasibility probe via the LPs."""
    from . import lp

    issues: list[str] = []
    if p.n_eq + p.n_ineq == 0:
        issues.append("no constraints")
    for kind, a in (("equality", p.a_eq), ("inequality", p.a_ineq)):
        for i, row in enumerate(a):
            if np.all(row == 0.0):
                issues.append(f"zero {kind} row {i}")
    coeff_mask = np.zeros(p.m, dtype=bool)
    if p.n_eq:
        coeff_mask |= np.any(p.a_eq != 0.0, axis=0)
    if p.n_ineq:
        coeff_mask |= np.any(p.a_ineq != 0.0, axis=0)
    for j in np.nonzero(~coeff_mask)[0]:
        issues.append(f"variable {j} appears in no constraint")

    if not issues:
        try:
            lp.sum_bounds(p)
        except lp.UnboundedError:
            issues.append("unbounded sum possible")
        except lp.InfeasibleError:
            issues.append("infeasible constraint system")
    return ValidationReport(tuple(issues))


def load_problem(path) -> ProblemInstance:
    """Read a problem from the JSON format described in the README."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"malformed problem file {path}: {exc}") from exc
    try:
        m = int(raw["m"])
        eqs = raw.get("equalities", [])
        ins = raw.get("inequalities", [])
        a_eq = [list(map(float, e["coeffs"])) for e in eqs]
        b_eq = [float(e["rhs"]) for e in eqs]
        a_in = [list(map(float, e["coeffs"])) for e in ins]
        b_in = [float(e["rhs"]) for e in ins]
        sub = float(raw.get("beta_substitute", 1.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed problem file {path}: {exc}") from exc
    return ProblemInstance(
        m=m,
        a_eq=np.array(a_eq, dtype=float).reshape(len(eqs), m),
        b_eq=np.array(b_eq, dtype=float),
        a_ineq=np.array(a_in, dtype=float).reshape(len(ins), m),
        b_ineq=np.array(b_in, dtype=float),
        beta_substitute=sub,
    )


def save_problem(p: ProblemInstance, path) -> None:
    doc = {
        "m": p.m,
        "equalities": [{"coeffs": list(map(float, row)), "rhs": float(r)}
                       for row, r in zip(p.a_eq, p.b_eq)],
        "inequalities": [{"coeffs": list(map(float, row)), "rhs": float(r)}
                         for row, r in zip(p.a_ineq, p.b_ineq)],
        "beta_substitute": p.beta_substitute,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
