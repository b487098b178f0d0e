"""A-priori, data-only convergence guarantees.

Everything here is computable before running the solver: the relaxation range
with guaranteed global convergence (from the kernel's Birkhoff contraction
ratio), a lower bound on the local rate of the standard method built from the
kernel's extreme singular values and the marginal extremes, and the interval
of relaxation parameters with guaranteed strict acceleration.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidInputError, RankDeficiencyError
from .hilbert import birkhoff_contraction
from .solver import TransportProblem
from .spectral import OpenInterval

# Kernels with sigma_min / sigma_max at or below this are treated as rank
# deficient; narrow-bandwidth kernels hit this at quite modest sizes.
RANK_TOL = 1e-12


@dataclass(frozen=True)
class RateLowerBound:
    """Lower bound on the local rate of the standard method.

    delta_1 and delta_2 are the two one-sided bounds (rows and columns
    respectively); delta selects between them by the shape of the kernel
    (delta_1 if m > n, delta_2 if m < n, their max when square).
    """

    delta_1: float
    delta_2: float
    delta: float
    sigma_min: float
    k_inf_norm: float
    kt_inf_norm: float
    rank_tol: float


@dataclass(frozen=True)
class BoundsReport:
    contraction: float
    global_upper: float
    delta_1: float
    delta_2: float
    delta: float
    guaranteed_interval: OpenInterval
    sigma_min: float
    k_inf_norm: float
    kt_inf_norm: float


def global_omega_range(contraction: float) -> OpenInterval:
    """Relaxation parameters with guaranteed global convergence: (0, 2/(1+c)).

    Always contains (0, 1]; shrinks towards (0, 1) as the contraction ratio
    approaches one.
    """
    if not 0.0 <= contraction < 1.0:
        raise InvalidInputError(f"contraction must lie in [0, 1), got {contraction!r}")
    return OpenInterval(0.0, 2.0 / (1.0 + contraction))


def rate_lower_bound(problem: TransportProblem, rank_tol: float = RANK_TOL) -> RateLowerBound:
    """Data-only lower bound on the local rate, requiring a full-rank kernel.

    delta_1 = (a_min / b_max) * (1 - b_max) / ((|K|_inf / sigma_min)^2 - a_min)
    and delta_2 is the same with the roles of the kernel transpose and the
    marginals interchanged.  |K|_inf is the maximum absolute row sum and
    sigma_min the smallest positive singular value.  Both bounds are positive
    and the selected delta lies in (0, 1).

    Raises RankDeficiencyError when sigma_min <= rank_tol * sigma_max (the
    threshold is reported alongside the result for the full-rank case).
    """
    kernel = problem.kernel
    entries = kernel.entries
    if not np.isfinite(entries).all():
        raise InvalidInputError("kernel linear entries overflow; bound unavailable")
    svals = scipy.linalg.svdvals(entries)
    sigma_max, sigma_min = float(svals[0]), float(svals[-1])
    if sigma_min <= rank_tol * sigma_max:
        raise RankDeficiencyError(
            f"kernel is numerically rank deficient: sigma_min/sigma_max = "
            f"{sigma_min / sigma_max:.3e} <= rank_tol = {rank_tol:.3e}"
        )
    k_inf = float(np.abs(entries).sum(axis=1).max())
    kt_inf = float(np.abs(entries).sum(axis=0).max())
    a, b = problem.a, problem.b
    a_min, a_max = float(a.min()), float(a.max())
    b_min, b_max = float(b.min()), float(b.max())
    delta_1 = (a_min / b_max) * (1.0 - b_max) / ((k_inf / sigma_min) ** 2 - a_min)
    delta_2 = (b_min / a_max) * (1.0 - a_max) / ((kt_inf / sigma_min) ** 2 - b_min)
    m, n = kernel.shape
    if m > n:
        delta = delta_1
    elif m < n:
        delta = delta_2
    else:
        delta = max(delta_1, delta_2)
    return RateLowerBound(delta_1, delta_2, delta, sigma_min, k_inf, kt_inf, rank_tol)


def guaranteed_acceleration_interval(problem: TransportProblem,
                                     rank_tol: float = RANK_TOL) -> OpenInterval:
    """Relaxation parameters that are both globally convergent and strictly
    faster than the standard method: (1, min(1 + delta, 2/(1+contraction))).

    Nonempty whenever the rank condition holds, since both candidate upper
    endpoints exceed one.  Usually a narrow interval; it certifies
    acceleration rather than locating the optimal parameter.
    """
    bound = rate_lower_bound(problem, rank_tol=rank_tol)
    contraction = birkhoff_contraction(problem.kernel)
    upper = min(1.0 + bound.delta, 2.0 / (1.0 + contraction))
    return OpenInterval(1.0, upper)


def bounds_report(problem: TransportProblem, rank_tol: float = RANK_TOL) -> BoundsReport:
    """All data-only quantities in one shot."""
    contraction = birkhoff_contraction(problem.kernel)
    bound = rate_lower_bound(problem, rank_tol=rank_tol)
    upper = min(1.0 + bound.delta, 2.0 / (1.0 + contraction))
    return BoundsReport(
        contraction=contraction,
        global_upper=2.0 / (1.0 + contraction),
        delta_1=bound.delta_1,
        delta_2=bound.delta_2,
        delta=bound.delta,
        guaranteed_interval=OpenInterval(1.0, upper),
        sigma_min=bound.sigma_min,
        k_inf_norm=bound.k_inf_norm,
        kt_inf_norm=bound.kt_inf_norm,
    )
