"""Projective (Hilbert) metric on positive vectors and kernel contraction ratios.

Positive vectors are compared modulo positive rescaling: the norm of a class
is log(max entry / min entry), and the distance between two classes is the
norm of their entrywise quotient.  A positive matrix contracts this metric
with a factor strictly below one that depends only on the spread of its
cross ratios.
"""

import warnings

import numpy as np

from .errors import InvalidInputError
from .kernels import Kernel, as_kernel

# Column-pair enumeration above this size is replaced by a sampled lower bound.
EXACT_CROSS_RATIO_LIMIT = 2000


def _as_log_vector(x, name: str = "vector") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InvalidInputError(f"{name} must be a 1-d vector of dimension >= 2")
    if not np.isfinite(x).all() or (x <= 0).any():
        raise InvalidInputError(f"{name} must have strictly positive finite entries")
    return np.log(x)


def hilbert_norm(x) -> float:
    """log(max_i x_i / min_j x_j); zero exactly for constant vectors."""
    return hilbert_norm_log(_as_log_vector(x))


def hilbert_norm_log(log_x: np.ndarray) -> float:
    """Hilbert norm of exp(log_x), computed directly from logs."""
    log_x = np.asarray(log_x, dtype=float)
    if log_x.ndim != 1 or log_x.size < 2:
        raise InvalidInputError("vector must be 1-d with dimension >= 2")
    return float(log_x.max() - log_x.min())


def hilbert_distance(x, y) -> float:
    """Hilbert distance between positive vectors, invariant under separate rescaling."""
    lx = _as_log_vector(x, "x")
    ly = _as_log_vector(y, "y")
    if lx.shape != ly.shape:
        raise InvalidInputError(f"dimension mismatch: {lx.size} vs {ly.size}")
    return hilbert_norm_log(lx - ly)


def hilbert_distance_log(log_x: np.ndarray, log_y: np.ndarray) -> float:
    """Hilbert distance between exp(log_x) and exp(log_y)."""
    log_x = np.asarray(log_x, dtype=float)
    log_y = np.asarray(log_y, dtype=float)
    if log_x.shape != log_y.shape:
        raise InvalidInputError(f"dimension mismatch: {log_x.shape} vs {log_y.shape}")
    return hilbert_norm_log(log_x - log_y)


def log_cross_ratio_bound(kernel, seed: int = 0, samples: int = 200_000) -> float:
    """log of the maximal cross ratio K_ik K_jl / (K_jk K_il) over index quadruples.

    Works entirely on log entries, so kernels whose linear entries underflow are
    handled exactly.  The maximum over quadruples factorizes over column pairs:
    for each pair (k, l) it equals max_i - min_i of the log ratio column
    K[:, k] / K[:, l].  The smaller dimension is used for the pair enumeration,
    costing O(min(m,n)^2 * max(m,n)).  Above EXACT_CROSS_RATIO_LIMIT a sampled
    lower bound over `samples` random pairs is returned with a RuntimeWarning.
    """
    kernel = as_kernel(kernel)
    g = kernel.log_entries
    if g.shape[1] > g.shape[0]:
        g = g.T  # same value for the transpose; enumerate pairs of the smaller side
    n = g.shape[1]
    if n > EXACT_CROSS_RATIO_LIMIT:
        warnings.warn(
            f"kernel smaller dimension {n} exceeds {EXACT_CROSS_RATIO_LIMIT}; "
            "returning a sampled lower bound for the cross-ratio spread",
            RuntimeWarning,
            stacklevel=2,
        )
        rng = np.random.default_rng(seed)
        best = 0.0
        chunk = 1024
        for start in range(0, samples, chunk):
            size = min(chunk, samples - start)
            k = rng.integers(0, n, size=size)
            l = rng.integers(0, n, size=size)
            d = g[:, k] - g[:, l]
            best = max(best, float((d.max(axis=0) - d.min(axis=0)).max()))
        return best
    best = 0.0
    for k in range(n - 1):
        d = g[:, k + 1 :] - g[:, k : k + 1]
        best = max(best, float((d.max(axis=0) - d.min(axis=0)).max()))
    return best


def cross_ratio_bound(kernel, seed: int = 0, samples: int = 200_000) -> float:
    """Maximal cross ratio of kernel entries; >= 1, may overflow to inf.

    Use log_cross_ratio_bound for kernels with extreme entry spreads.
    """
    with np.errstate(over="ignore"):
        return float(np.exp(log_cross_ratio_bound(kernel, seed=seed, samples=samples)))


def birkhoff_contraction(kernel, seed: int = 0, samples: int = 200_000) -> float:
    """Contraction factor of v -> Kv in the Hilbert metric, in [0, 1).

    Equal to (sqrt(r) - 1) / (sqrt(r) + 1) for the maximal cross ratio r,
    evaluated as tanh(log(r) / 4) so that extreme kernels cannot overflow.
    Invariant under transposition.  The true value is always below one; when
    tanh saturates it is clamped to the largest double below 1 so the range
    contract holds.
    """
    value = np.tanh(log_cross_ratio_bound(kernel, seed=seed, samples=samples) / 4.0)
    return float(min(value, np.nextafter(1.0, 0.0)))
