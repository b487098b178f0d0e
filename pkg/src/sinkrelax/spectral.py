"""Local linearization of the scaling iteration.

Everything here is evaluated at (or near) a solved transport plan: the
iteration matrix of the standard method, its second eigenvalue (the local
convergence rate), the relaxed-rate curve with its optimal relaxation
parameter, the coupled two-term error recursion used for global convergence,
and the full relaxed iteration matrix used to cross-validate the rate curve.
"""

import math
from dataclasses import dataclass
from typing import Literal, NamedTuple

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, NumericalFailureError, StalePlanError

# Plans fed into spectral routines must satisfy this marginal residual;
# rate estimates degrade linearly with plan error.
ANALYSIS_RESIDUAL_TOL = 1e-8

# Dense decompositions up to this size; power iteration with deflation above.
DENSE_DECOMPOSITION_LIMIT = 2000

POWER_TOL = 1e-10
POWER_MAX_STEPS = 5000


class OpenInterval(NamedTuple):
    """Open interval (lower, upper); empty when upper <= lower."""

    lower: float
    upper: float

    @property
    def is_empty(self) -> bool:
        return self.upper <= self.lower

    def contains(self, x: float) -> bool:
        return self.lower < x < self.upper


class RateCurvePoint(NamedTuple):
    omega: float
    rate: float
    branch: Literal["pre-opt", "post-opt"]


@dataclass(frozen=True)
class SpectralReport:
    """Local rate of the standard method and the derived relaxation quantities."""

    theta_squared: float
    omega_opt: float
    rho_opt: float
    feasible_interval: OpenInterval


def _check_plan(plan: np.ndarray, a: np.ndarray, b: np.ndarray,
                residual_tol: float) -> np.ndarray:
    plan = np.asarray(plan, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if plan.ndim != 2 or plan.shape != (a.size, b.size):
        raise InvalidInputError(
            f"plan shape {plan.shape} does not match marginals ({a.size}, {b.size})"
        )
    res_a = float(np.abs(plan.sum(axis=1) - a).sum())
    res_b = float(np.abs(plan.sum(axis=0) - b).sum())
    if max(res_a, res_b) > residual_tol:
        raise StalePlanError(
            f"plan marginal residual {max(res_a, res_b):.3e} exceeds the "
            f"analysis tolerance {residual_tol:.3e}; solve more tightly first"
        )
    return plan


def scaling_iteration_matrix(plan, a, b, residual_tol: float = ANALYSIS_RESIDUAL_TOL) -> np.ndarray:
    """m x m linearization of one standard sweep at the solved plan.

    Equals diag(1/a) P diag(1/b) P^T.  Similar to a positive semidefinite
    matrix, so its eigenvalues are real and nonnegative; the top eigenvalue is
    1 with the constant eigenvector (the scaling indeterminacy), and the
    second-largest eigenvalue is the local rate of the standard method.
    """
    plan = _check_plan(plan, a, b, residual_tol)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (plan / a[:, None]) @ (plan / b[None, :]).T


def _second_singular_value_dense(s_mat: np.ndarray) -> tuple[float, float]:
    svals = scipy.linalg.svdvals(s_mat)
    return float(svals[0]), float(svals[1])


def _second_singular_value_power(s_mat: np.ndarray, right_top: np.ndarray,
                                 tol: float = POWER_TOL,
                                 max_steps: int = POWER_MAX_STEPS) -> tuple[float, float]:
    """(sigma_1 along right_top, sigma_2) via power iteration on S^T S.

    The known top right-singular direction is deflated by projection, so the
    iteration converges to the second pair.  Deterministic start vector.
    """
    top = right_top / np.linalg.norm(right_top)
    sigma1 = float(np.linalg.norm(s_mat @ top))
    n = s_mat.shape[1]
    x = np.cos(np.arange(1, n + 1, dtype=float))  # fixed, generic start
    x -= top * (top @ x)
    nrm = np.linalg.norm(x)
    if nrm == 0:
        raise NumericalFailureError("power start vector degenerate after deflation")
    x /= nrm
    val = 0.0
    for _ in range(max_steps):
        y = s_mat.T @ (s_mat @ x)
        y -= top * (top @ y)
        nrm = np.linalg.norm(y)
        if nrm == 0:
            return sigma1, 0.0
        x_new = y / nrm
        val_new = float(x_new @ (s_mat.T @ (s_mat @ x_new)))
        if abs(val_new - val) <= tol * max(val_new, 1e-300):
            return sigma1, math.sqrt(max(val_new, 0.0))
        x, val = x_new, val_new
    return sigma1, math.sqrt(max(val, 0.0))


def local_rate(plan, a, b, residual_tol: float = ANALYSIS_RESIDUAL_TOL,
               method: Literal["auto", "dense", "power"] = "auto") -> float:
    """Local per-sweep rate of the standard method at the solved plan, in [0, 1).

    Computed as the squared second-largest singular value of
    S = diag(a^-1/2) P diag(b^-1/2), whose top singular value is 1 (checked to
    1e-6 as a staleness guard).  This equals the second-largest eigenvalue of
    scaling_iteration_matrix(plan, a, b); the symmetric formulation is the
    numerically stabler of the two.
    """
    plan = _check_plan(plan, a, b, residual_tol)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    s_mat = plan / np.sqrt(a)[:, None] / np.sqrt(b)[None, :]
    if method == "auto":
        method = "dense" if min(plan.shape) <= DENSE_DECOMPOSITION_LIMIT else "power"
    if method == "dense":
        sigma1, sigma2 = _second_singular_value_dense(s_mat)
    elif method == "power":
        sigma1, sigma2 = _second_singular_value_power(s_mat, np.sqrt(b))
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    if abs(sigma1 - 1.0) > 1e-6:
        raise StalePlanError(
            f"top singular value {sigma1!r} deviates from 1 by more than 1e-6; "
            "the plan is not converged enough for rate analysis"
        )
    return float(min(sigma2, 1.0)) ** 2


def optimal_omega(theta: float) -> float:
    """Relaxation parameter minimizing the asymptotic rate: 2 / (1 + sqrt(1 - theta^2)).

    theta is the square root of the local rate; the result is 1 exactly when
    theta == 0 and grows towards 2 as theta approaches 1.
    """
    if not 0.0 <= theta < 1.0:
        raise InvalidInputError(f"theta must lie in [0, 1), got {theta!r}")
    return 2.0 / (1.0 + math.sqrt(1.0 - theta * theta))


def sor_rate(theta: float, omega: float) -> float:
    """Asymptotic rate of the relaxed method with parameter omega, strictly below 1.

    For omega up to the optimal parameter the rate is
    (omega*theta + sqrt(omega^2 theta^2 - 4(omega-1)))^2 / 4, beyond it the
    rate is omega - 1.  The discriminant is clamped at zero to absorb rounding
    at the branch point; ties at the branch point resolve to omega - 1, which
    both branches equal there.
    """
    if not 0.0 <= theta < 1.0:
        raise InvalidInputError(f"theta must lie in [0, 1), got {theta!r}")
    if not 0.0 < omega < 2.0:
        raise InvalidInputError(f"omega must lie in (0, 2), got {omega!r}")
    if omega >= optimal_omega(theta):
        return omega - 1.0
    disc = omega * omega * theta * theta - 4.0 * (omega - 1.0)
    root = math.sqrt(max(disc, 0.0))
    return 0.25 * (omega * theta + root) ** 2


def rate_curve(theta: float, omegas) -> list[RateCurvePoint]:
    """Evaluate the rate curve on a grid, labeling each point's branch."""
    w_opt = optimal_omega(theta)
    return [
        RateCurvePoint(float(w), sor_rate(theta, float(w)),
                       "pre-opt" if w <= w_opt else "post-opt")
        for w in np.asarray(omegas, dtype=float)
    ]


def acceleration_interval(theta_squared: float) -> OpenInterval:
    """Open interval of omega where the relaxed method is locally faster.

    Exactly (1, 1 + theta_squared).  Empty when theta_squared == 0 (the
    standard method is already locally optimal).
    """
    if not 0.0 <= theta_squared < 1.0:
        raise InvalidInputError(f"theta_squared must lie in [0, 1), got {theta_squared!r}")
    return OpenInterval(1.0, 1.0 + theta_squared)


def spectral_report(plan, a, b, residual_tol: float = ANALYSIS_RESIDUAL_TOL) -> SpectralReport:
    theta_sq = local_rate(plan, a, b, residual_tol=residual_tol)
    w_opt = optimal_omega(math.sqrt(theta_sq))
    return SpectralReport(
        theta_squared=theta_sq,
        omega_opt=w_opt,
        rho_opt=w_opt - 1.0,
        feasible_interval=acceleration_interval(theta_sq),
    )


def error_recursion_matrix(contraction: float, omega: float) -> np.ndarray:
    """2x2 matrix bounding the coupled Hilbert-distance recursion of one sweep.

    Rows act on (distance of u to the fixed point, distance of v); entrywise
    the distances after a sweep are bounded by this matrix applied to the
    distances before it, for any starting point.
    """
    if not 0.0 <= contraction < 1.0:
        raise InvalidInputError(f"contraction must lie in [0, 1), got {contraction!r}")
    if not 0.0 < omega < 2.0:
        raise InvalidInputError(f"omega must lie in (0, 2), got {omega!r}")
    s = abs(1.0 - omega)
    c = omega * contraction
    return np.array([[s, c], [c * s, s + c * c]])


def error_recursion_radius(contraction: float, omega: float) -> float:
    """Spectral radius of error_recursion_matrix in closed form.

    Equals |1-w| + (w*c)^2/2 + sqrt((w*c)^4/4 + (w*c)^2 |1-w|) and is below 1
    exactly when omega < 2 / (1 + contraction).
    """
    if not 0.0 <= contraction < 1.0:
        raise InvalidInputError(f"contraction must lie in [0, 1), got {contraction!r}")
    if not 0.0 < omega < 2.0:
        raise InvalidInputError(f"omega must lie in (0, 2), got {omega!r}")
    s = abs(1.0 - omega)
    q = (omega * contraction) ** 2
    return s + 0.5 * q + math.sqrt(0.25 * q * q + q * s)


def sor_iteration_matrix(plan, a, b, omega: float,
                         residual_tol: float = ANALYSIS_RESIDUAL_TOL) -> np.ndarray:
    """(m+n) x (m+n) linearization of one relaxed sweep, in log coordinates.

    Built from the row-stochastic matrices A = diag(1/rowsums(P)) P and
    B = diag(1/colsums(P)) P^T as (I - omega*L)^{-1} ((1-omega) I + omega*U)
    with -B in the lower-left block of L and -A in the upper-right block of U.
    The scaling direction contributes eigenvalues {1, (1-omega)^2}; the
    spectrum deflated by those two values realizes the rate curve.
    """
    if not 0.0 < omega < 2.0:
        raise InvalidInputError(f"omega must lie in (0, 2), got {omega!r}")
    plan = _check_plan(plan, a, b, residual_tol)
    m, n = plan.shape
    row_sto = plan / plan.sum(axis=1, keepdims=True)
    col_sto = (plan / plan.sum(axis=0, keepdims=True)).T
    eye = np.eye(m + n)
    lower = np.zeros((m + n, m + n))
    lower[m:, :m] = -col_sto
    upper = np.zeros((m + n, m + n))
    upper[:m, m:] = -row_sto
    return np.linalg.solve(eye - omega * lower, (1.0 - omega) * eye + omega * upper)


def deflated_sor_radius(plan, a, b, omega: float,
                        residual_tol: float = ANALYSIS_RESIDUAL_TOL) -> float:
    """Spectral radius of the relaxed sweep on the quotient modulo scaling.

    Removes one eigenvalue nearest 1 and one nearest (1-omega)^2 (the spectrum
    of the invariant scaling subspace) from the full spectrum of
    sor_iteration_matrix, then returns the largest remaining modulus.
    """
    m_omega = sor_iteration_matrix(plan, a, b, omega, residual_tol=residual_tol)
    eigs = list(np.linalg.eigvals(m_omega))
    for target in (1.0, (1.0 - omega) ** 2):
        idx = int(np.argmin([abs(e - target) for e in eigs]))
        eigs.pop(idx)
    return float(max(abs(e) for e in eigs)) if eigs else 0.0
