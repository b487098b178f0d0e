"""Standard and overrelaxed Sinkhorn iterations with log-domain stabilization.

A sweep updates u from the current v and then v from the new u:

    log_u <- (1-w) log_u + w (log a - log(K exp(log_v)))
    log_v <- (1-w) log_v + w (log b - log(K^T exp(log_u)))

with every matrix-vector product done as a log-sum-exp, so kernels whose
linear entries underflow are handled exactly.  w = 1 recovers the standard
method.  Iteration counts are full sweeps.  Residuals (the l1 errors of both
plan marginals) are evaluated once per sweep and drive the stopping logic.
"""

import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .adaptive import RelaxationController, RelaxationPolicy
from .errors import InvalidInputError, NumericalFailureError
from .kernels import Kernel, as_kernel, validate_probability_vector
from .logops import log_bilinear, log_matvec, log_matvec_t, log_sum

DIVERGENCE_FACTOR = 1e6


@dataclass(frozen=True, eq=False)
class TransportProblem:
    """Problem data: a positive kernel and the two marginals to match."""

    kernel: Kernel
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        kernel = as_kernel(self.kernel)
        a = validate_probability_vector(self.a, "a")
        b = validate_probability_vector(self.b, "b")
        if a.size != kernel.m or b.size != kernel.n:
            raise InvalidInputError(
                f"marginal lengths ({a.size}, {b.size}) do not match "
                f"kernel shape {kernel.shape}"
            )
        object.__setattr__(self, "kernel", kernel)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True, eq=False)
class ScalingState:
    """Scaling pair (u, v) in log form, plus the sweep counter."""

    log_u: np.ndarray
    log_v: np.ndarray
    iteration: int = 0

    def __post_init__(self):
        log_u = np.asarray(self.log_u, dtype=float)
        log_v = np.asarray(self.log_v, dtype=float)
        if log_u.ndim != 1 or log_v.ndim != 1:
            raise InvalidInputError("log_u and log_v must be vectors")
        if not (np.isfinite(log_u).all() and np.isfinite(log_v).all()):
            raise NumericalFailureError("scaling state contains non-finite entries",
                                        iteration=self.iteration)
        object.__setattr__(self, "log_u", log_u)
        object.__setattr__(self, "log_v", log_v)


@dataclass(frozen=True)
class TraceRecord:
    iteration: int
    omega: float
    residual_a: float
    residual_b: float
    plan_error: float | None
    elapsed_seconds: float


class ConvergenceTrace:
    """Per-sweep records; iterations are strictly increasing."""

    def __init__(self, records=None):
        self.records: list[TraceRecord] = []
        for rec in records or ():
            self.append(rec)

    def append(self, record: TraceRecord):
        if self.records and record.iteration <= self.records[-1].iteration:
            raise InvalidInputError("trace iterations must be strictly increasing")
        if record.residual_a < 0 or record.residual_b < 0:
            raise InvalidInputError("residuals must be nonnegative")
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def __getitem__(self, idx):
        return self.records[idx]

    def residuals_a(self) -> np.ndarray:
        return np.array([rec.residual_a for rec in self.records])

    def residuals_b(self) -> np.ndarray:
        return np.array([rec.residual_b for rec in self.records])

    def omegas(self) -> np.ndarray:
        return np.array([rec.omega for rec in self.records])

    def plan_errors(self) -> np.ndarray:
        return np.array([math.nan if rec.plan_error is None else rec.plan_error
                         for rec in self.records])


class TerminationReason(Enum):
    CONVERGED = "converged"
    ITERATION_LIMIT = "iteration-limit"
    NUMERICAL_FAILURE = "numerical-failure"


@dataclass(frozen=True, eq=False)
class SolverConfig:
    """Relaxation policy, stopping tolerance and iteration budget for a solve."""

    policy: RelaxationPolicy = field(default_factory=lambda: RelaxationPolicy.fixed(1.0))
    tol: float = 1e-9
    max_iter: int = 10_000
    reference_plan: np.ndarray | None = None

    def __post_init__(self):
        if self.tol <= 0:
            raise InvalidInputError(f"tol must be positive, got {self.tol!r}")
        if self.max_iter < 1:
            raise InvalidInputError("max_iter must be at least 1")
        if self.reference_plan is not None:
            object.__setattr__(self, "reference_plan",
                               np.asarray(self.reference_plan, dtype=float))


@dataclass(frozen=True, eq=False)
class SolveResult:
    state: ScalingState
    trace: ConvergenceTrace
    reason: TerminationReason

    @property
    def converged(self) -> bool:
        return self.reason is TerminationReason.CONVERGED

    @property
    def iterations(self) -> int:
        return len(self.trace)


def _half_updates(log_k, log_a, log_b, log_u, log_v, omega, log_kv=None):
    """One sweep in log coordinates; log_kv may carry the cached log(K e^log_v)."""
    if log_kv is None:
        log_kv = log_matvec(log_k, log_v)
    new_log_u = (1.0 - omega) * log_u + omega * (log_a - log_kv)
    log_ktu = log_matvec_t(log_k, new_log_u)
    new_log_v = (1.0 - omega) * log_v + omega * (log_b - log_ktu)
    return new_log_u, new_log_v, log_ktu


def sor_step(state: ScalingState, problem: TransportProblem, omega: float) -> ScalingState:
    """One relaxed sweep; omega = 1 is exactly the standard update.

    After the u half-update with omega = 1 the identity u * (K v_old) = a
    holds to rounding.  Raises NumericalFailureError (carrying the iteration
    index) if an intermediate stops being finite.
    """
    if not 0.0 < omega < 2.0:
        raise InvalidInputError(f"omega must lie in (0, 2), got {omega!r}")
    kernel = problem.kernel
    if state.log_u.size != kernel.m or state.log_v.size != kernel.n:
        raise InvalidInputError(
            f"state dimensions ({state.log_u.size}, {state.log_v.size}) do not "
            f"match kernel shape {kernel.shape}"
        )
    new_log_u, new_log_v, _ = _half_updates(
        kernel.log_entries, np.log(problem.a), np.log(problem.b),
        state.log_u, state.log_v, omega,
    )
    if not (np.isfinite(new_log_u).all() and np.isfinite(new_log_v).all()):
        raise NumericalFailureError(
            "scaling update produced non-finite values",
            iteration=state.iteration + 1,
        )
    return ScalingState(new_log_u, new_log_v, state.iteration + 1)


def transport_plan(state: ScalingState, kernel: Kernel) -> np.ndarray:
    """Plan diag(u) K diag(v), assembled from log entries to dodge underflow."""
    kernel = as_kernel(kernel)
    if state.log_u.size != kernel.m or state.log_v.size != kernel.n:
        raise InvalidInputError("state dimensions do not match kernel shape")
    return np.exp(kernel.log_entries + state.log_u[:, None] + state.log_v[None, :])


def marginal_residual(plan: np.ndarray, target: np.ndarray, axis: int = 1) -> float:
    """l1 distance between a plan marginal and its target.

    axis=1 compares row sums against the first marginal, axis=0 column sums
    against the second.
    """
    plan = np.asarray(plan, dtype=float)
    target = np.asarray(target, dtype=float)
    if plan.ndim != 2 or axis not in (0, 1):
        raise InvalidInputError("plan must be a matrix and axis 0 or 1")
    sums = plan.sum(axis=axis)
    if sums.shape != target.shape:
        raise InvalidInputError(
            f"marginal length {target.size} does not match plan shape {plan.shape}"
        )
    return float(np.abs(sums - target).sum())


def normalize_representatives(state: ScalingState, kernel: Kernel) -> tuple[np.ndarray, np.ndarray]:
    """Canonical scaling pair from a state: unit-sum representatives, then
    both divided by the square root of u^T K v.

    The output is invariant under (t u, v) and (u, t v); at a solved state it
    satisfies u * (K v) = a and v * (K^T u) = b exactly.
    """
    kernel = as_kernel(kernel)
    log_u = state.log_u - log_sum(state.log_u)
    log_v = state.log_v - log_sum(state.log_v)
    log_lambda = log_bilinear(kernel.log_entries, log_u, log_v)
    u_plus = np.exp(log_u - 0.5 * log_lambda)
    v_plus = np.exp(log_v - 0.5 * log_lambda)
    return u_plus, v_plus


def solve(problem: TransportProblem, config: SolverConfig | None = None,
          initial_log_v: np.ndarray | None = None) -> SolveResult:
    """Run the (relaxed) scaling iteration until the marginals match.

    Stops when max(residual_a, residual_b) < config.tol (converged), at
    config.max_iter (iteration limit -- a result, not an error), or when the
    state stops being finite / the residual grows by 1e6 over its initial
    value (numerical failure, which surfaces relaxation parameters outside
    the convergent range).  The trace holds one record per sweep; identical
    inputs produce identical traces.
    """
    config = config or SolverConfig()
    kernel = problem.kernel
    log_k = kernel.log_entries
    log_a = np.log(problem.a)
    log_b = np.log(problem.b)
    if initial_log_v is None:
        log_v = np.zeros(kernel.n)
    else:
        log_v = np.asarray(initial_log_v, dtype=float)
        if log_v.shape != (kernel.n,) or not np.isfinite(log_v).all():
            raise InvalidInputError("initial_log_v must be a finite vector of length n")
    log_u = np.zeros(kernel.m)

    controller = RelaxationController(config.policy)
    trace = ConvergenceTrace()
    state = ScalingState(log_u, log_v, 0)
    reason = TerminationReason.ITERATION_LIMIT
    initial_residual = None
    start = time.perf_counter()

    log_kv = log_matvec(log_k, log_v)
    for it in range(1, config.max_iter + 1):
        omega = controller.next_omega(trace, state, kernel)
        new_log_u, new_log_v, log_ktu = _half_updates(
            log_k, log_a, log_b, state.log_u, state.log_v, omega, log_kv=log_kv,
        )
        if not (np.isfinite(new_log_u).all() and np.isfinite(new_log_v).all()):
            reason = TerminationReason.NUMERICAL_FAILURE
            break
        state = ScalingState(new_log_u, new_log_v, it)

        # Column sums of the current plan come free from the v half-update;
        # the row sums reuse the log(K e^log_v) cache of the next sweep.
        col_sums = np.exp(new_log_v + log_ktu)
        residual_b = float(np.abs(col_sums - problem.b).sum())
        log_kv = log_matvec(log_k, new_log_v)
        row_sums = np.exp(new_log_u + log_kv)
        residual_a = float(np.abs(row_sums - problem.a).sum())

        plan_error = None
        if config.reference_plan is not None:
            plan = transport_plan(state, kernel)
            plan_error = float(np.abs(plan - config.reference_plan).sum())

        trace.append(TraceRecord(it, omega, residual_a, residual_b, plan_error,
                                 time.perf_counter() - start))

        if not (math.isfinite(residual_a) and math.isfinite(residual_b)):
            reason = TerminationReason.NUMERICAL_FAILURE
            break
        worst = max(residual_a, residual_b)
        if worst < config.tol:
            reason = TerminationReason.CONVERGED
            break
        if initial_residual is None:
            initial_residual = worst
        elif worst > DIVERGENCE_FACTOR * initial_residual:
            reason = TerminationReason.NUMERICAL_FAILURE
            break

    return SolveResult(state, trace, reason)


def tail_rate(residuals, window: int = 20, floor: float = 1e-13,
              method: str = "geomean") -> float:
    """Measured per-sweep contraction rate of a residual sequence.

    "geomean" is the geometric mean of the last `window` successive ratios
    (telescoping to an endpoint ratio); "lsq" fits a log-linear slope over the
    last `window`+1 values, which is robust to the ratio oscillation of
    complex-spectrum regimes.  Values at or below `floor` are dropped first so
    rounding noise near the residual floor cannot contaminate the estimate.
    """
    r = np.asarray(residuals, dtype=float)
    r = r[r > floor]
    if r.size < 2:
        raise InvalidInputError("need at least two residuals above the floor")
    if method == "geomean":
        k = min(window, r.size - 1)
        return float((r[-1] / r[-1 - k]) ** (1.0 / k))
    if method == "lsq":
        k = min(window + 1, r.size)
        y = np.log(r[-k:])
        t = np.arange(k, dtype=float)
        slope = np.polyfit(t, y, 1)[0]
        return float(np.exp(slope))
    raise InvalidInputError(f"unknown method {method!r}")
