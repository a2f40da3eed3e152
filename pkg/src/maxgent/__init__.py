"""Maximum generalized entropy inference for count vectors.

Infers non-negative integer vectors from linear equality and inequality
constraints by maximizing the generalized entropy
G(x) = -sum x_i ln x_i + (sum x_i) ln(sum x_i), and quantifies how sharply
the admissible count vectors concentrate around the optimum via computable
scaling thresholds, verified at small scale by exact enumeration.
"""
from .model import (ProblemInstance, ToleranceSet, ValidationReport,
                    effective_beta, load_problem, save_problem, scale_problem,
                    validate_problem)
from .lp import LpResult, SumBounds, analytic_sum_bounds, solve_lp, sum_bounds, theta_infinity
from .entropy import (divergence, ext_entropy, gen_entropy, grad_g,
                      hessian_quadform, entropy_drop_bound, log_realizations,
                      realization_sandwich, sequence_log_prob, stirling_factor)
from .solver import (Solution, SolverOptions, eliminate_zeros, lambda_star,
                     maximize_g, recover_multipliers, verify_scaling)
from .discrete import IntegerRange, integer_range, membership, min_delta, optimal_count_vector
from .concentration import (balance_beta_star, pinsker_gamma_star,
                            ratio_bound_distance, ratio_bound_entropy,
                            solve_exp_linear, threshold_auto_delta,
                            threshold_bounds_entropy, threshold_distance,
                            threshold_entropy, threshold_lower_bound_distance)
from .oracle import (EnumerationResult, enumerate_feasible, exact_ratio,
                     partition_distance, partition_entropy, verify_soundness)

__version__ = "0.1.0"
