"""Relaxation-strategy comparisons on generated problems.

A run builds the problem, computes a tight reference solution (a short
standard pilot picks a good relaxation parameter via the singular-value
estimate, then a fixed run at that parameter goes to the reference
tolerance), reads the local rate off the reference plan, and solves once per
requested strategy.
"""

import math
from dataclasses import dataclass

import numpy as np

from .adaptive import RelaxationPolicy, svd_rate_estimate
from .errors import InvalidInputError
from .problems import ExperimentSpec, build_problem
from .solver import SolveResult, SolverConfig, TransportProblem, solve, transport_plan
from .spectral import local_rate, optimal_omega

STRATEGIES = ("standard", "fixed-1.5", "omega-opt", "adaptive-residual", "adaptive-svd")

PILOT_SWEEPS = 50
OMEGA_CAP = 1.99


@dataclass(frozen=True, eq=False)
class ExperimentResult:
    spec: ExperimentSpec
    problem: TransportProblem
    reference_plan: np.ndarray
    theta_squared: float
    omega_opt: float
    runs: dict[str, SolveResult]


def _policy_for(strategy: str, omega_opt_value: float) -> RelaxationPolicy:
    if strategy == "standard":
        return RelaxationPolicy.fixed(1.0)
    if strategy == "fixed-1.5":
        return RelaxationPolicy.fixed(1.5)
    if strategy == "omega-opt":
        return RelaxationPolicy.fixed(min(omega_opt_value, OMEGA_CAP))
    if strategy == "adaptive-residual":
        return RelaxationPolicy.adaptive_residual(warmup=20, lookback=2)
    if strategy == "adaptive-svd":
        return RelaxationPolicy.adaptive_svd(warmup=50)
    raise InvalidInputError(f"unknown strategy {strategy!r}; known: {', '.join(STRATEGIES)}")


def compute_reference(problem: TransportProblem, tol: float = 1e-12,
                      max_iter: int = 500_000):
    """Reference scaling state via the best cheap strategy available.

    Runs a short standard pilot, estimates the rate from the pilot state by
    the singular-value heuristic, and solves with the induced fixed parameter
    to `tol`.
    """
    pilot = solve(problem, SolverConfig(policy=RelaxationPolicy.fixed(1.0),
                                        tol=1e-30, max_iter=PILOT_SWEEPS))
    theta_hat = min(svd_rate_estimate(pilot.state, problem.kernel), 1.0 - 1e-9)
    omega_hat = min(optimal_omega(theta_hat), OMEGA_CAP)
    reference = solve(problem, SolverConfig(policy=RelaxationPolicy.fixed(omega_hat),
                                            tol=tol, max_iter=max_iter))
    return reference


def run_experiment(spec: ExperimentSpec, strategies=STRATEGIES, tol: float = 1e-8,
                   max_iter: int = 50_000, reference_tol: float = 1e-12,
                   track_plan_error: bool = True) -> ExperimentResult:
    problem = build_problem(spec)
    reference = compute_reference(problem, tol=reference_tol)
    reference_plan = transport_plan(reference.state, problem.kernel)
    theta_sq = local_rate(reference_plan, problem.a, problem.b,
                          residual_tol=max(10 * reference_tol, 1e-10))
    omega_opt_value = optimal_omega(math.sqrt(theta_sq))
    runs: dict[str, SolveResult] = {}
    for strategy in strategies:
        config = SolverConfig(
            policy=_policy_for(strategy, omega_opt_value),
            tol=tol,
            max_iter=max_iter,
            reference_plan=reference_plan if track_plan_error else None,
        )
        runs[strategy] = solve(problem, config)
    return ExperimentResult(
        spec=spec,
        problem=problem,
        reference_plan=reference_plan,
        theta_squared=theta_sq,
        omega_opt=omega_opt_value,
        runs=runs,
    )
