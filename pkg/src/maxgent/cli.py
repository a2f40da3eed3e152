"""Command-line surface for the inference pipeline.

Exit codes: 0 success, 1 mathematical failure (infeasible problem, violated
applicability condition, soundness violation), 2 resource/budget limits,
3 usage or file errors.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import concentration, discrete, lp, model, oracle, solver

EXIT_OK = 0
EXIT_MATH = 1
EXIT_BUDGET = 2
EXIT_USAGE = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliUsageError(message)


class CliUsageError(Exception):
    pass


class _Writer:
    """Accumulates (key, value) pairs and renders text or CSV."""

    def __init__(self, fmt: str):
        self.fmt = fmt
        self.items: list[tuple[str, object]] = []

    def add(self, key, value):
        self.items.append((key, value))

    @staticmethod
    def _num(v, digits):
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        return f"{float(v):.{digits}g}"

    def _render_value(self, v, digits):
        if isinstance(v, (list, tuple, np.ndarray)):
            return "(" + ", ".join(self._num(t, digits) for t in v) + ")"
        if isinstance(v, str):
            return v
        return self._num(v, digits)

    def render(self) -> str:
        if self.fmt == "csv":
            lines = [f"{k},{self._render_value(v, 12).strip('()').replace(', ', ',')}"
                     for k, v in self.items]
        else:
            width = max((len(k) for k, _ in self.items), default=0)
            lines = [f"{k.ljust(width)}  {self._render_value(v, 4)}"
                     for k, v in self.items]
        return "\n".join(lines) + "\n"


def _emit(writer: _Writer, out_path):
    text = writer.render()
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _solve_pipeline(path, opts=None):
    p = model.load_problem(path)
    report = model.validate_problem(p)
    if not report.ok:
        raise lp.InfeasibleError("; ".join(report.violations))
    sol = solver.maximize_g(p, opts)
    bounds = lp.sum_bounds(sol.problem)
    return p, sol, bounds


def _add_solution_fields(w: _Writer, p, sol, bounds):
    rng = discrete.integer_range(bounds, sol.s_star)
    nu = discrete.optimal_count_vector(sol)
    w.add("m", p.m)
    if sol.m != p.m:
        w.add("m_reduced", sol.m)
        w.add("kept_indices", list(map(int, sol.kept_indices)))
    w.add("s1", bounds.s1)
    w.add("s2", bounds.s2)
    w.add("theta_inf", lp.theta_infinity(sol.problem))
    w.add("x_star", sol.embed())
    w.add("s_star", sol.s_star)
    w.add("chi_star", sol.embed(sol.chi_star))
    w.add("G_star", sol.g_star)
    w.add("lambda_eq", sol.lambda_eq)
    w.add("lambda_binding", sol.lambda_bind)
    w.add("binding_rows", list(map(int, sol.binding_rows)))
    w.add("Lambda_star", sol.lambda_star_bound)
    w.add("kkt_residual", sol.kkt_residual)
    w.add("n1", rng.n1)
    w.add("n_star", rng.n_star)
    w.add("n2", rng.n2)
    w.add("nu_star", sol.embed(nu.astype(float)).astype(int))
    w.add("nu_star_min_delta", discrete.min_delta(nu, sol.problem))


def cmd_solve(args) -> int:
    p, sol, bounds = _solve_pipeline(args.problem)
    w = _Writer(args.format)
    _add_solution_fields(w, p, sol, bounds)
    _emit(w, args.out)
    return EXIT_OK


def cmd_bounds(args) -> int:
    p = model.load_problem(args.problem)
    report = model.validate_problem(p)
    w = _Writer(args.format)
    if not report.ok:
        for v in report.violations:
            w.add("violation", v)
        _emit(w, args.out)
        return EXIT_MATH
    b = lp.sum_bounds(p)
    lo, hi = lp.analytic_sum_bounds(p)
    w.add("s1", b.s1)
    w.add("s2", b.s2)
    w.add("s1_analytic_lower", "absent" if lo is None else lo)
    w.add("s2_analytic_upper", "absent" if hi is None else hi)
    w.add("theta_inf", lp.theta_infinity(p))
    _emit(w, args.out)
    return EXIT_OK


def cmd_round(args) -> int:
    p, sol, bounds = _solve_pipeline(args.problem)
    rng = discrete.integer_range(bounds, sol.s_star)
    nu = discrete.optimal_count_vector(sol)
    w = _Writer(args.format)
    w.add("n1", rng.n1)
    w.add("n_star", rng.n_star)
    w.add("n2", rng.n2)
    w.add("nu_star", sol.embed(nu.astype(float)).astype(int))
    w.add("nu_star_min_delta", discrete.min_delta(nu, sol.problem))
    w.add("l1_distance_to_x_star", float(np.abs(nu - sol.x_star).sum()))
    w.add("linf_distance_to_x_star", float(np.abs(nu - sol.x_star).max()))
    _emit(w, args.out)
    return EXIT_OK


def _scaled_summary(w, sol, bounds, c):
    scaled_sol_x = c * sol.x_star
    n_star = discrete._iceil(c * sol.s_star)
    rng = discrete.IntegerRange(discrete._iceil(c * bounds.s1),
                                discrete._iceil(c * bounds.s2), n_star)
    chi = sol.chi_star
    z = n_star * chi
    from .solver import Solution as _S
    scaled = _S(x_star=scaled_sol_x, kept_indices=sol.kept_indices,
                orig_m=sol.orig_m, s_star=c * sol.s_star, chi_star=chi,
                g_star=c * sol.g_star, lambda_eq=sol.lambda_eq,
                lambda_bind=sol.lambda_bind, binding_rows=sol.binding_rows,
                lambda_star_bound=c * sol.lambda_star_bound,
                kkt_residual=sol.kkt_residual, problem=sol.problem)
    nu = discrete.optimal_count_vector(scaled)
    w.add("scaled_b_eq", c * sol.problem.b_eq)
    w.add("scaled_b_ineq", c * sol.problem.b_ineq)
    w.add("scaled_n1", rng.n1)
    w.add("scaled_n_star", rng.n_star)
    w.add("scaled_n2", rng.n2)
    w.add("scaled_nu_star", sol.embed(nu.astype(float)).astype(int))
    scaled_p = model.scale_problem(sol.problem, c)
    w.add("scaled_nu_star_min_delta", discrete.min_delta(nu, scaled_p))


def cmd_threshold(args) -> int:
    if args.epsilon is None:
        raise CliUsageError("--epsilon is required for threshold")
    mode = args.mode
    if mode == "entropy":
        if args.eta is None or args.delta is None:
            raise CliUsageError("entropy mode needs --eta and --delta")
    elif mode == "distance":
        if args.theta is None or args.delta is None:
            raise CliUsageError("distance mode needs --theta and --delta")
    elif mode == "auto-delta":
        if args.theta is None:
            raise CliUsageError("auto-delta mode needs --theta")
        if args.delta is not None:
            raise CliUsageError("auto-delta mode chooses delta itself; "
                                "drop --delta")
    p, sol, bounds = _solve_pipeline(args.problem)
    theta_inf = lp.theta_infinity(sol.problem)
    w = _Writer(args.format)
    w.add("mode", mode)
    if mode == "entropy":
        rep = concentration.threshold_entropy(
            sol, bounds, theta_inf, args.delta, args.epsilon, args.eta)
        lo, hi = concentration.threshold_bounds_entropy(
            sol, bounds, theta_inf, args.delta, args.epsilon, args.eta)
        w.add("c1", rep.c1)
        w.add("c2", rep.c2)
        w.add("c3", rep.c3)
        w.add("c_hat", rep.c_hat)
        w.add("c_hat_lower_bound", lo)
        w.add("c_hat_upper_bound", hi)
        w.add("ln_B", rep.log_b)
        c = rep.c_hat
    elif mode == "distance":
        rep = concentration.threshold_distance(
            sol, bounds, theta_inf, args.delta, args.epsilon, args.theta)
        w.add("c1", rep.c1)
        w.add("c2", rep.c2)
        w.add("c3", rep.c3)
        w.add("c_hat", rep.c_hat)
        w.add("gamma_star", rep.gamma_star)
        w.add("beta_star", rep.beta_star)
        w.add("Lambda_star", rep.lambda_star)
        w.add("ln_B_prime", rep.log_b_prime)
        c = rep.c_hat
    else:
        delta0, c_hat, rep = concentration.threshold_auto_delta(
            sol, bounds, theta_inf, args.epsilon, args.theta)
        lb = concentration.threshold_lower_bound_distance(sol, theta_inf, args.theta)
        w.add("delta0", delta0)
        w.add("c1", rep.c1)
        w.add("c2", rep.c2)
        w.add("c_hat", c_hat)
        w.add("c_hat_lower_bound", lb)
        w.add("gamma_star", rep.gamma_star)
        w.add("beta_star", rep.beta_star)
        w.add("Lambda_star", rep.lambda_star)
        c = c_hat
    _scaled_summary(w, sol, bounds, c)
    _emit(w, args.out)
    return EXIT_OK


def cmd_enumerate(args) -> int:
    p = model.load_problem(args.problem)
    bounds = lp.sum_bounds(p)
    rng = discrete.integer_range(bounds, 0.5 * (bounds.s1 + bounds.s2))
    delta = args.delta if args.delta is not None else 0.0
    try:
        enum = oracle.enumerate_feasible(p, delta, rng, args.budget)
    except oracle.BudgetExceededError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_BUDGET
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            oracle.dump_vectors_csv(enum, fh)
    else:
        oracle.dump_vectors_csv(enum, sys.stdout)
    return EXIT_OK


def cmd_verify(args) -> int:
    p, sol, bounds = _solve_pipeline(args.problem)
    offset = 1e9 if args.corrupt_bounds else 0.0
    try:
        report = oracle.verify_soundness(p if sol.m == p.m else sol.problem,
                                         sol, bounds, budget=args.budget,
                                         _bound_offset=offset)
    except oracle.BudgetExceededError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_BUDGET
    w = _Writer(args.format)
    for e in report.entries:
        w.add(f"{e.kind}[delta={e.delta:g},tol={e.tol:g}]",
              f"margin={e.margin:.6g}")
    for s in report.skipped:
        w.add("skipped", s)
    w.add("result", "ok" if report.ok else "VIOLATION")
    _emit(w, args.out)
    if report.skipped:
        return EXIT_BUDGET
    return EXIT_OK if report.ok else EXIT_MATH


def cmd_scale(args) -> int:
    p = model.load_problem(args.problem)
    if args.scale_factor is None or args.scale_factor <= 0:
        raise CliUsageError("scale needs a positive --scale-factor")
    scaled = model.scale_problem(p, args.scale_factor)
    if not args.out:
        raise CliUsageError("scale needs --out to write the scaled problem")
    model.save_problem(scaled, args.out)
    return EXIT_OK


def build_parser() -> _Parser:
    ap = _Parser(prog="maxgent",
                 description="Generalized-entropy inference of count vectors "
                             "under linear constraints")
    sub = ap.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("problem", help="problem file (JSON)")
    common.add_argument("--format", choices=("text", "csv"), default="text")
    common.add_argument("--out", default=None, help="write output to this path")
    common.add_argument("--delta", type=float, default=None)
    common.add_argument("--epsilon", type=float, default=None)
    common.add_argument("--eta", type=float, default=None)
    common.add_argument("--theta", type=float, default=None)
    common.add_argument("--budget", type=int, default=100_000_000)
    common.add_argument("--scale-factor", type=float, default=None)

    sub.add_parser("solve", parents=[common])
    sub.add_parser("bounds", parents=[common])
    sub.add_parser("round", parents=[common])
    tp = sub.add_parser("threshold", parents=[common])
    tp.add_argument("--mode", choices=("entropy", "distance", "auto-delta"),
                    default="entropy")
    sub.add_parser("enumerate", parents=[common])
    vp = sub.add_parser("verify", parents=[common])
    vp.add_argument("--corrupt-bounds", action="store_true",
                    help=argparse.SUPPRESS)  # negative-path test hook
    sub.add_parser("scale", parents=[common])
    return ap


_COMMANDS = {
    "solve": cmd_solve,
    "bounds": cmd_bounds,
    "round": cmd_round,
    "threshold": cmd_threshold,
    "enumerate": cmd_enumerate,
    "verify": cmd_verify,
    "scale": cmd_scale,
}


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
        return _COMMANDS[args.command](args)
    except CliUsageError as exc:
        sys.stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except (FileNotFoundError, model.ModelError) as exc:
        sys.stderr.write(f"problem file error: {exc}\n")
        return EXIT_USAGE
    except (lp.InfeasibleError, lp.UnboundedError, solver.SolverError,
            concentration.ConditionError,
            concentration.PreScaleRequiredError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_MATH


if __name__ == "__main__":
    sys.exit(main())
