"""Problem generation: kernel families, random marginals, synthetic point clouds.

All generators are pure functions of their arguments; randomness comes from
numpy's seedable, platform-independent PCG64 generator (numpy.random.default_rng).
Kernels are produced directly in log form so that small bandwidths never
underflow.
"""

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InvalidInputError
from .kernels import Kernel
from .solver import TransportProblem

# Mixture defining the synthetic color clouds: three blobs in the unit cube,
# mimicking the cluster structure of sampled image pixels.
_RGB_MEANS = np.array([
    [0.85, 0.25, 0.20],
    [0.20, 0.35, 0.75],
    [0.45, 0.65, 0.30],
])
_RGB_STD = 0.13
_RGB_WEIGHTS = np.array([0.45, 0.35, 0.20])


@dataclass(frozen=True)
class ExperimentSpec:
    """Reproducible description of a generated problem instance."""

    family: Literal["rgb_gaussian", "grid_1d", "random_dense"]
    size_m: int
    size_n: int
    epsilon: float
    seed: int
    marginal_kind: Literal["uniform", "random"] = "uniform"

    def __post_init__(self):
        if self.family not in ("rgb_gaussian", "grid_1d", "random_dense"):
            raise InvalidInputError(f"unknown family {self.family!r}")
        if self.size_m < 2 or self.size_n < 2:
            raise InvalidInputError("sizes must be at least 2")
        if self.epsilon <= 0:
            raise InvalidInputError("epsilon must be positive")
        if self.marginal_kind not in ("uniform", "random"):
            raise InvalidInputError(f"unknown marginal kind {self.marginal_kind!r}")


def gaussian_kernel(points_x, points_y, epsilon: float) -> Kernel:
    """exp(-squared Euclidean distance / epsilon) between two point sets in [0,1]^3."""
    x = np.asarray(points_x, dtype=float)
    y = np.asarray(points_y, dtype=float)
    if x.ndim != 2 or y.ndim != 2 or x.shape[1] != 3 or y.shape[1] != 3:
        raise InvalidInputError("point sets must be (n, 3) arrays")
    if (x < 0).any() or (x > 1).any() or (y < 0).any() or (y > 1).any():
        raise InvalidInputError("point coordinates must lie in [0, 1]")
    if epsilon <= 0:
        raise InvalidInputError("epsilon must be positive")
    sq = ((x * x).sum(axis=1)[:, None] + (y * y).sum(axis=1)[None, :]
          - 2.0 * x @ y.T)
    np.maximum(sq, 0.0, out=sq)
    return Kernel.from_log_entries(-sq / epsilon)


def grid_kernel_1d(m: int, n: int, epsilon: float) -> Kernel:
    """exp(-|i/(m-1) - j/(n-1)| / epsilon) on the uniform grids of [0, 1]."""
    if m < 2 or n < 2:
        raise InvalidInputError("grid sizes must be at least 2")
    if epsilon <= 0:
        raise InvalidInputError("epsilon must be positive")
    xi = np.arange(m, dtype=float) / (m - 1)
    yj = np.arange(n, dtype=float) / (n - 1)
    return Kernel.from_log_entries(-np.abs(xi[:, None] - yj[None, :]) / epsilon)


def random_kernel(m: int, n: int, epsilon: float, seed: int) -> Kernel:
    """exp(-C/epsilon) for an i.i.d. uniform(0, 1) random cost matrix C."""
    if m < 2 or n < 2:
        raise InvalidInputError("sizes must be at least 2")
    if epsilon <= 0:
        raise InvalidInputError("epsilon must be positive")
    rng = np.random.default_rng(seed)
    return Kernel.from_log_entries(-rng.uniform(0.0, 1.0, size=(m, n)) / epsilon)


def random_measure(n: int, seed: int) -> np.ndarray:
    """Random probability vector bounded away from zero.

    Draws n values uniform on (0.1, 1.1) and normalizes, so every entry
    exceeds 0.1 / (1.1 n).  Deterministic per seed.
    """
    if n < 2:
        raise InvalidInputError("n must be at least 2")
    rng = np.random.default_rng(seed)
    v = rng.uniform(0.1, 1.1, size=n)
    return v / v.sum()


def sample_rgb_cloud(n: int, seed: int) -> np.ndarray:
    """n synthetic color points in [0, 1]^3 from a fixed three-blob mixture."""
    if n < 2:
        raise InvalidInputError("n must be at least 2")
    rng = np.random.default_rng(seed)
    which = rng.choice(len(_RGB_WEIGHTS), size=n, p=_RGB_WEIGHTS)
    points = _RGB_MEANS[which] + rng.normal(0.0, _RGB_STD, size=(n, 3))
    return np.clip(points, 0.0, 1.0)


def _marginal(kind: str, n: int, seed: int) -> np.ndarray:
    if kind == "uniform":
        return np.full(n, 1.0 / n)
    return random_measure(n, seed)


def build_problem(spec: ExperimentSpec) -> TransportProblem:
    """Instantiate the problem an ExperimentSpec describes.

    Derived seeds: the kernel (or point clouds) uses `seed` (and `seed`+1 for
    the second cloud); marginal a uses `seed`+1, marginal b `seed`+2.
    """
    m, n = spec.size_m, spec.size_n
    if spec.family == "rgb_gaussian":
        kernel = gaussian_kernel(sample_rgb_cloud(m, spec.seed),
                                 sample_rgb_cloud(n, spec.seed + 1),
                                 spec.epsilon)
    elif spec.family == "grid_1d":
        kernel = grid_kernel_1d(m, n, spec.epsilon)
    else:
        kernel = random_kernel(m, n, spec.epsilon, spec.seed)
    a = _marginal(spec.marginal_kind, m, spec.seed + 1)
    b = _marginal(spec.marginal_kind, n, spec.seed + 2)
    return TransportProblem(kernel, a, b)
