"""Overrelaxed Sinkhorn scaling for entropic optimal transport.

Dense log-domain solver for the matrix scaling problem u * (K v) = a,
v * (K^T u) = b, together with the spectral machinery around it: the
projective-metric contraction ratio of the kernel, the local rate of the
standard method, the relaxed-rate curve with its optimal parameter, global
and acceleration guarantees computable from the data alone, and runtime
heuristics that pick a near-optimal relaxation on the fly.
"""

from .adaptive import (RelaxationController, RelaxationPolicy,
                       residual_rate_estimate, svd_rate_estimate)
from .bounds import (BoundsReport, RateLowerBound, bounds_report,
                     global_omega_range, guaranteed_acceleration_interval,
                     rate_lower_bound)
from .errors import (ConvergedEarly, InvalidInputError, InvalidWindowError,
                     NumericalFailureError, ParseError, RankDeficiencyError,
                     StalePlanError)
from .experiments import STRATEGIES, ExperimentResult, compute_reference, run_experiment
from .hilbert import (birkhoff_contraction, cross_ratio_bound, hilbert_distance,
                      hilbert_distance_log, hilbert_norm, hilbert_norm_log,
                      log_cross_ratio_bound)
from .kernels import Kernel, as_kernel, validate_probability_vector
from .problems import (ExperimentSpec, build_problem, gaussian_kernel,
                       grid_kernel_1d, random_kernel, random_measure,
                       sample_rgb_cloud)
from .solver import (ConvergenceTrace, ScalingState, SolveResult, SolverConfig,
                     TerminationReason, TraceRecord, TransportProblem,
                     marginal_residual, normalize_representatives, solve,
                     sor_step, tail_rate, transport_plan)
from .spectral import (OpenInterval, RateCurvePoint, SpectralReport,
                       acceleration_interval, deflated_sor_radius,
                       error_recursion_matrix, error_recursion_radius,
                       local_rate, optimal_omega, rate_curve,
                       scaling_iteration_matrix, sor_iteration_matrix, sor_rate,
                       spectral_report)

__version__ = "0.1.0"

__all__ = [
    "BoundsReport", "ConvergedEarly", "ConvergenceTrace", "ExperimentResult",
    "ExperimentSpec", "InvalidInputError", "InvalidWindowError", "Kernel",
    "NumericalFailureError", "OpenInterval", "ParseError", "RankDeficiencyError",
    "RateCurvePoint", "RateLowerBound", "RelaxationController",
    "RelaxationPolicy", "STRATEGIES", "ScalingState", "SolveResult",
    "SolverConfig", "SpectralReport", "StalePlanError", "TerminationReason",
    "TraceRecord", "TransportProblem", "acceleration_interval", "as_kernel",
    "birkhoff_contraction", "bounds_report", "build_problem",
    "compute_reference", "cross_ratio_bound", "deflated_sor_radius",
    "error_recursion_matrix", "error_recursion_radius", "gaussian_kernel",
    "global_omega_range", "grid_kernel_1d", "guaranteed_acceleration_interval",
    "hilbert_distance", "hilbert_distance_log", "hilbert_norm",
    "hilbert_norm_log", "local_rate", "log_cross_ratio_bound",
    "marginal_residual", "normalize_representatives", "optimal_omega",
    "random_kernel", "random_measure", "rate_curve", "rate_lower_bound",
    "residual_rate_estimate", "run_experiment", "sample_rgb_cloud",
    "scaling_iteration_matrix", "solve", "sor_iteration_matrix", "sor_rate",
    "sor_step", "spectral_report", "svd_rate_estimate", "tail_rate",
    "transport_plan", "validate_probability_vector",
]
