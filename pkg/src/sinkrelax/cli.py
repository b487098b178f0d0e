"""Command-line interface: solve, analyze, sweep and experiment workflows.

Summaries go to standard output as machine-parsable `key=value` lines, one
pair per line, starting with an echo of every effective parameter (defaults
and seeds included) so a run can be reproduced from its output alone.

Exit codes: 0 converged / success, 2 iteration limit, 3 numerical failure,
4 input or validation error.
"""

import argparse
import math
import os
import sys

import numpy as np

from . import fileio
from .adaptive import RelaxationPolicy
from .bounds import bounds_report
from .errors import (InvalidInputError, NumericalFailureError, ParseError,
                     RankDeficiencyError, StalePlanError)
from .experiments import STRATEGIES, run_experiment
from .hilbert import birkhoff_contraction, log_cross_ratio_bound
from .problems import ExperimentSpec, build_problem
from .solver import (SolverConfig, TerminationReason, TransportProblem, solve,
                     tail_rate, transport_plan)
from .spectral import acceleration_interval, local_rate, optimal_omega, sor_rate

EXIT_OK = 0
EXIT_ITERATION_LIMIT = 2
EXIT_NUMERICAL_FAILURE = 3
EXIT_INVALID_INPUT = 4

_REASON_EXIT = {
    TerminationReason.CONVERGED: EXIT_OK,
    TerminationReason.ITERATION_LIMIT: EXIT_ITERATION_LIMIT,
    TerminationReason.NUMERICAL_FAILURE: EXIT_NUMERICAL_FAILURE,
}

_FAMILIES = {"rgb": "rgb_gaussian", "grid1d": "grid_1d", "random": "random_dense"}


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _emit(key: str, value) -> None:
    print(f"{key}={_fmt(value)}")


def _load_problem(args) -> TransportProblem:
    if getattr(args, "kernel", None):
        kernel = fileio.load_kernel(args.kernel)
        a = fileio.load_probability_vector(args.a)
        b = fileio.load_probability_vector(args.b)
        return TransportProblem(kernel, a, b)
    if getattr(args, "family", None):
        spec = _spec_from_args(args)
        return build_problem(spec)
    raise InvalidInputError("provide either --kernel/--a/--b or --family")


def _spec_from_args(args) -> ExperimentSpec:
    family = _FAMILIES[args.family]
    marginals = args.marginals
    if marginals == "auto":
        marginals = "uniform" if family == "rgb_gaussian" else "random"
    return ExperimentSpec(
        family=family,
        size_m=args.size,
        size_n=args.size,
        epsilon=args.eps,
        seed=args.seed,
        marginal_kind=marginals,
    )


def _policy_from_args(args) -> RelaxationPolicy:
    if args.policy == "fixed":
        return RelaxationPolicy.fixed(args.omega)
    if args.policy == "adaptive-residual":
        warmup = 20 if args.warmup is None else args.warmup
        return RelaxationPolicy.adaptive_residual(warmup=warmup, lookback=args.p)
    warmup = 50 if args.warmup is None else args.warmup
    return RelaxationPolicy.adaptive_svd(warmup=warmup)


def _parse_omega_grid(text: str) -> list[float]:
    try:
        start_s, step_s, end_s = text.split(":")
        start, step, end = float(start_s), float(step_s), float(end_s)
    except ValueError:
        raise InvalidInputError(f"--omegas expects start:step:end, got {text!r}")
    if step <= 0 or start > end:
        raise InvalidInputError("omega grid needs step > 0 and start <= end")
    grid = [start + k * step for k in range(int((end - start) / step + 1e-9) + 1)]
    for w in grid:
        if not 0.0 < w < 2.0:
            raise InvalidInputError(f"omega grid value {w!r} outside (0, 2)")
    return grid


def cmd_solve(args) -> int:
    problem = _load_problem(args)
    policy = _policy_from_args(args)
    for key in ("kernel", "a", "b", "family", "size", "eps", "seed", "marginals",
                "policy", "omega", "warmup", "p", "tol", "max_iter", "trace"):
        _emit(key, getattr(args, key))
    _emit("timing", "none" if args.no_timing else "wall")
    config = SolverConfig(policy=policy, tol=args.tol, max_iter=args.max_iter)
    result = solve(problem, config)
    if args.trace:
        fileio.save_trace(args.trace, result.trace, timing=not args.no_timing)
    _emit("termination", result.reason.value)
    _emit("iterations", result.iterations)
    if len(result.trace):
        last = result.trace[-1]
        _emit("residual_a", last.residual_a)
        _emit("residual_b", last.residual_b)
        _emit("omega_last", last.omega)
    return _REASON_EXIT[result.reason]


def cmd_analyze(args) -> int:
    problem = _load_problem(args)
    for key in ("kernel", "a", "b", "family", "size", "eps", "seed", "marginals",
                "plan", "tol", "max_iter"):
        _emit(key, getattr(args, key))
    if args.plan:
        plan = fileio.load_matrix(args.plan)
    else:
        config = SolverConfig(policy=RelaxationPolicy.fixed(1.0), tol=args.tol,
                              max_iter=args.max_iter)
        result = solve(problem, config)
        if not result.converged:
            raise InvalidInputError(
                f"pre-solve did not converge ({result.reason.value}); supply a "
                "converged plan via --plan or raise --max-iter"
            )
        plan = transport_plan(result.state, problem.kernel)

    log_eta = log_cross_ratio_bound(problem.kernel)
    contraction = float(np.tanh(log_eta / 4.0))
    _emit("eta", float(np.exp(log_eta)))
    _emit("lambda", contraction)
    _emit("global_omega_upper", 2.0 / (1.0 + contraction))

    delta = None
    try:
        report = bounds_report(problem)
        _emit("delta1", report.delta_1)
        _emit("delta2", report.delta_2)
        _emit("delta", report.delta)
        _emit("guaranteed_omega_upper", report.guaranteed_interval.upper)
        delta = report.delta
    except RankDeficiencyError as exc:
        _emit("delta_status", "rank-deficient")
        print(f"note: {exc}; delta bound unavailable", file=sys.stderr)

    theta_sq = local_rate(plan, problem.a, problem.b)
    omega_opt_value = optimal_omega(math.sqrt(theta_sq))
    _emit("theta_sq", theta_sq)
    _emit("omega_opt", omega_opt_value)
    _emit("rho_opt", omega_opt_value - 1.0)
    _emit("feasible_upper", acceleration_interval(theta_sq).upper)
    if delta is not None:
        _emit("check_theta_sq_ge_delta",
              "pass" if theta_sq >= delta * (1.0 - 1e-9) - 1e-12 else "fail")
    lam_sq = contraction * contraction
    _emit("check_theta_sq_le_lambda_sq",
          "pass" if theta_sq <= lam_sq * (1.0 + 1e-9) + 1e-12 else "fail")
    return EXIT_OK


def cmd_sweep(args) -> int:
    problem = _load_problem(args)
    grid = _parse_omega_grid(args.omegas)
    for key in ("kernel", "a", "b", "family", "size", "eps", "seed", "marginals",
                "omegas", "tol", "max_iter", "out"):
        _emit(key, getattr(args, key))

    reference = solve(problem, SolverConfig(policy=RelaxationPolicy.adaptive_svd(warmup=50),
                                            tol=1e-10, max_iter=args.max_iter))
    if not reference.converged:
        raise InvalidInputError(
            f"reference solve did not converge ({reference.reason.value}); "
            "raise --max-iter"
        )
    plan = transport_plan(reference.state, problem.kernel)
    theta = math.sqrt(local_rate(plan, problem.a, problem.b))

    lines = ["omega,iterations,termination,measured_rate,predicted_rate"]
    for omega in grid:
        run = solve(problem, SolverConfig(policy=RelaxationPolicy.fixed(omega),
                                          tol=args.tol, max_iter=args.max_iter))
        predicted = sor_rate(theta, omega)
        try:
            measured = _fmt(tail_rate(run.trace.residuals_a(), window=20))
        except InvalidInputError:
            measured = ""
        lines.append(f"{_fmt(omega)},{run.iterations},{run.reason.value},"
                     f"{measured},{_fmt(predicted)}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_experiment(args) -> int:
    spec = _spec_from_args(args)
    strategies = tuple(s.strip() for s in args.strategies.split(",") if s.strip())
    for key in ("family", "size", "eps", "seed", "marginals", "strategies", "tol",
                "max_iter", "out"):
        _emit(key, getattr(args, key))
    _emit("timing", "none" if args.no_timing else "wall")
    os.makedirs(args.out, exist_ok=True)
    result = run_experiment(spec, strategies=strategies, tol=args.tol,
                            max_iter=args.max_iter)
    _emit("theta_sq", result.theta_squared)
    _emit("omega_opt", result.omega_opt)
    summary = ["strategy,iterations,termination,final_residual_a,final_residual_b"]
    for strategy in strategies:
        run = result.runs[strategy]
        fileio.save_trace(os.path.join(args.out, f"trace_{strategy}.csv"),
                          run.trace, timing=not args.no_timing)
        last = run.trace[-1]
        _emit(f"{strategy}_iterations", run.iterations)
        _emit(f"{strategy}_termination", run.reason.value)
        summary.append(f"{strategy},{run.iterations},{run.reason.value},"
                       f"{_fmt(last.residual_a)},{_fmt(last.residual_b)}")
    with open(os.path.join(args.out, "summary.csv"), "w") as fh:
        fh.write("\n".join(summary) + "\n")
    return EXIT_OK


def _add_problem_flags(sub, with_files=True, with_family=True):
    if with_files:
        sub.add_argument("--kernel", help="kernel CSV (a .log companion is honored)")
        sub.add_argument("--a", help="first marginal CSV, one value per line")
        sub.add_argument("--b", help="second marginal CSV, one value per line")
    if with_family:
        sub.add_argument("--family", choices=sorted(_FAMILIES),
                         help="generate the problem instead of loading files")
        sub.add_argument("--size", type=int, default=1000,
                         help="generated problem size m = n (default 1000)")
        sub.add_argument("--eps", type=float, default=0.01,
                         help="kernel bandwidth (default 0.01)")
        sub.add_argument("--seed", type=int, default=0, help="generator seed")
        sub.add_argument("--marginals", choices=["auto", "uniform", "random"],
                         default="auto",
                         help="marginal kind; auto = uniform for rgb, random otherwise")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sinkrelax",
        description="Overrelaxed Sinkhorn scaling with spectral rate analysis",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    p_solve = subs.add_parser("solve", help="run the scaling iteration on file inputs")
    _add_problem_flags(p_solve)
    p_solve.add_argument("--policy", choices=["fixed", "adaptive-residual", "adaptive-svd"],
                         default="fixed")
    p_solve.add_argument("--omega", type=float, default=1.0,
                         help="relaxation parameter for the fixed policy")
    p_solve.add_argument("--warmup", type=int, default=None,
                         help="standard sweeps before the adaptive switch")
    p_solve.add_argument("--p", type=int, default=2,
                         help="residual look-back for the ratio estimate")
    p_solve.add_argument("--tol", type=float, default=1e-9)
    p_solve.add_argument("--max-iter", dest="max_iter", type=int, default=10_000)
    p_solve.add_argument("--trace", help="write the per-sweep trace CSV here")
    p_solve.add_argument("--no-timing", action="store_true",
                         help="write the elapsed_seconds column empty, making "
                              "trace files byte-identical across reruns")
    p_solve.set_defaults(func=cmd_solve)

    p_an = subs.add_parser("analyze", help="spectral and a-priori quantities of a problem")
    _add_problem_flags(p_an)
    p_an.add_argument("--plan", help="converged plan CSV; solved on the fly when absent")
    p_an.add_argument("--tol", type=float, default=1e-10,
                      help="tolerance of the on-the-fly pre-solve")
    p_an.add_argument("--max-iter", dest="max_iter", type=int, default=100_000)
    p_an.set_defaults(func=cmd_analyze)

    p_sw = subs.add_parser("sweep", help="one solver run per relaxation parameter")
    _add_problem_flags(p_sw)
    p_sw.add_argument("--omegas", required=True, help="grid as start:step:end")
    p_sw.add_argument("--tol", type=float, default=1e-9)
    p_sw.add_argument("--max-iter", dest="max_iter", type=int, default=50_000)
    p_sw.add_argument("--out", help="CSV output path (stdout when omitted)")
    p_sw.set_defaults(func=cmd_sweep)

    p_ex = subs.add_parser("experiment", help="compare relaxation strategies on a "
                                              "generated problem")
    _add_problem_flags(p_ex, with_files=False)
    p_ex.add_argument("--strategies", default=",".join(STRATEGIES),
                      help="comma list from: " + ", ".join(STRATEGIES))
    p_ex.add_argument("--tol", type=float, default=1e-8)
    p_ex.add_argument("--max-iter", dest="max_iter", type=int, default=50_000)
    p_ex.add_argument("--out", required=True, help="output directory for traces")
    p_ex.add_argument("--no-timing", action="store_true",
                      help="write elapsed_seconds columns empty")
    p_ex.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, ParseError, StalePlanError, RankDeficiencyError,
            NumericalFailureError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())
