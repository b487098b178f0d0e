"""Runtime estimation of the local rate and the resulting relaxation choice.

Two estimators mirror how the rate can be read off a running solve: the ratio
of marginal residuals a few sweeps apart, and the second singular value of the
rescaled current plan.  A policy wraps either one (or a fixed parameter) and
switches the relaxation a single time once the warmup window is full.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Literal

import numpy as np
import scipy.linalg

from .errors import ConvergedEarly, InvalidInputError, InvalidWindowError, NumericalFailureError
from .kernels import Kernel
from .logops import log_matvec, log_matvec_t
from .spectral import optimal_omega

if TYPE_CHECKING:  # pragma: no cover
    from .solver import ConvergenceTrace, ScalingState

# Raw rate estimates are clamped below this; anything at or above it means the
# window carried no usable contraction information and the policy falls back.
RATE_CLAMP = 1.0 - 1e-12


@dataclass(frozen=True)
class RelaxationPolicy:
    """How the solver picks omega each sweep.

    kind "fixed" always returns `omega`.  The adaptive kinds run the standard
    method for `warmup` sweeps, estimate the local rate once, and use
    min(optimal_omega, omega_cap) from then on; a failed estimate falls back
    to omega = 1.
    """

    kind: Literal["fixed", "adaptive_residual", "adaptive_svd"]
    omega: float = 1.0
    warmup: int = 20
    lookback: int = 2
    omega_cap: float = 1.99

    def __post_init__(self):
        if self.kind not in ("fixed", "adaptive_residual", "adaptive_svd"):
            raise InvalidInputError(f"unknown policy kind {self.kind!r}")
        if self.kind == "fixed":
            if not 0.0 < self.omega < 2.0:
                raise InvalidInputError(f"fixed omega must lie in (0, 2), got {self.omega!r}")
            return
        if not 1.0 < self.omega_cap < 2.0:
            raise InvalidInputError(f"omega_cap must lie in (1, 2), got {self.omega_cap!r}")
        if self.warmup < 2:
            raise InvalidInputError("warmup must be at least 2")
        if self.kind == "adaptive_residual":
            if self.lookback < 1:
                raise InvalidInputError("lookback must be at least 1")
            if self.warmup < self.lookback:
                raise InvalidInputError("warmup must be at least the lookback")

    @classmethod
    def fixed(cls, omega: float) -> "RelaxationPolicy":
        return cls(kind="fixed", omega=omega)

    @classmethod
    def adaptive_residual(cls, warmup: int = 20, lookback: int = 2,
                          omega_cap: float = 1.99) -> "RelaxationPolicy":
        return cls(kind="adaptive_residual", warmup=warmup, lookback=lookback,
                   omega_cap=omega_cap)

    @classmethod
    def adaptive_svd(cls, warmup: int = 50, omega_cap: float = 1.99) -> "RelaxationPolicy":
        return cls(kind="adaptive_svd", warmup=warmup, omega_cap=omega_cap)


def residual_rate_estimate(trace: "ConvergenceTrace", lookback: int) -> float:
    """Per-sweep rate estimate (residual_now / residual_back)^(1/lookback).

    Uses the row-marginal residuals of the trailing window of the trace, which
    must consist of standard sweeps (omega == 1).  For exactly geometric
    residual decay the estimate is exact for every lookback.  The result is an
    estimate of the squared theta and is clamped to [0, 1 - 1e-12].

    Raises ConvergedEarly when a residual in the window is already zero, and
    InvalidWindowError when the window is too short or contains relaxed sweeps.
    """
    if lookback < 1:
        raise InvalidInputError("lookback must be at least 1")
    records = trace.records
    if len(records) < lookback + 1:
        raise InvalidWindowError(
            f"need at least {lookback + 1} records, trace has {len(records)}"
        )
    window = records[-(lookback + 1):]
    if any(rec.omega != 1.0 for rec in window):
        raise InvalidWindowError("estimation window contains sweeps with omega != 1")
    r_now = window[-1].residual_a
    r_back = window[0].residual_a
    if r_now <= 0.0 or r_back <= 0.0:
        raise ConvergedEarly("residuals in the window already vanished")
    rate = (r_now / r_back) ** (1.0 / lookback)
    return float(min(max(rate, 0.0), RATE_CLAMP))


def svd_rate_estimate(state: "ScalingState", kernel: Kernel) -> float:
    """Second singular value of the rescaled current plan (the unsquared rate).

    Forms the plan of the current iterate together with its pseudo-marginals
    (row and column sums) and returns the second-largest singular value of the
    plan rescaled by their inverse square roots.  At a solved state this
    coincides with the square root of the local rate; callers square it to get
    a rate estimate.
    """
    log_k = kernel.log_entries
    log_u, log_v = state.log_u, state.log_v
    log_row = log_u + log_matvec(log_k, log_v)   # row sums of the current plan
    log_col = log_v + log_matvec_t(log_k, log_u)
    log_s = (log_k + log_u[:, None] + log_v[None, :]
             - 0.5 * (log_row[:, None] + log_col[None, :]))
    s_mat = np.exp(log_s)  # entries bounded by 1 by construction
    if not np.isfinite(s_mat).all():
        raise NumericalFailureError("rescaled plan contains non-finite entries")
    svals = scipy.linalg.svdvals(s_mat)
    return float(svals[1])


class RelaxationController:
    """Per-run omega schedule implementing the one-shot switch.

    Returns 1 during warmup; at the first call where the trace has reached the
    warmup length it computes the policy's estimate from the trailing window
    (or the current state, for the svd kind), caches the resulting omega, and
    returns it for all subsequent sweeps.  Estimator failures and raw
    estimates at or above 1 fall back to omega = 1; the fallback shows up in
    the trace through the recorded per-sweep omega and on `used_fallback`.

    Controllers are cheap, deterministic given the same call sequence, and not
    shared between runs; continuous re-estimation is deliberately not wired in
    (create a fresh controller and re-run to re-estimate).
    """

    def __init__(self, policy: RelaxationPolicy):
        self.policy = policy
        self.chosen_omega: float | None = None
        self.estimate: float | None = None
        self.used_fallback = False

    def next_omega(self, trace: "ConvergenceTrace", state: "ScalingState",
                   kernel: Kernel) -> float:
        policy = self.policy
        if policy.kind == "fixed":
            return policy.omega
        if self.chosen_omega is not None:
            return self.chosen_omega
        if len(trace) < policy.warmup:
            return 1.0
        try:
            if policy.kind == "adaptive_residual":
                rate = residual_rate_estimate(trace, policy.lookback)
            else:
                rate = min(svd_rate_estimate(state, kernel) ** 2, 1.0)
            if rate >= RATE_CLAMP:
                # No contraction visible yet; an omega near 2 would be unsafe.
                raise ConvergedEarly("rate estimate not below one")
            self.estimate = rate
            self.chosen_omega = min(optimal_omega(math.sqrt(rate)), policy.omega_cap)
        except (ConvergedEarly, InvalidWindowError, NumericalFailureError):
            self.used_fallback = True
            self.chosen_omega = 1.0
        return self.chosen_omega
