"""Strictly positive dense kernels and marginal validation.

The log-entries array is the authoritative representation of a kernel: for
small bandwidths the linear entries underflow to zero while the log entries
stay exact, so every accuracy-sensitive consumer works from ``log_entries``.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError


@dataclass(frozen=True, eq=False)
class Kernel:
    """Dense m x n matrix with strictly positive entries, stored in log form.

    Arrays handed to a Kernel are copied and must be treated as immutable.
    """

    log_entries: np.ndarray

    def __post_init__(self):
        log_entries = np.array(self.log_entries, dtype=float)
        if log_entries.ndim != 2:
            raise InvalidInputError("kernel must be a 2-d matrix")
        if min(log_entries.shape) < 2:
            raise InvalidInputError(
                f"kernel must be at least 2x2, got {log_entries.shape}"
            )
        if not np.isfinite(log_entries).all():
            raise InvalidInputError("kernel log-entries must be finite")
        object.__setattr__(self, "log_entries", log_entries)

    @classmethod
    def from_entries(cls, entries) -> "Kernel":
        """Build a kernel from linear entries, which must be strictly positive."""
        entries = np.asarray(entries, dtype=float)
        if entries.ndim != 2:
            raise InvalidInputError("kernel must be a 2-d matrix")
        bad = ~(entries > 0) | ~np.isfinite(entries)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise InvalidInputError(
                f"kernel entry ({i}, {j}) = {entries[i, j]!r} is not strictly positive"
            )
        return cls(np.log(entries))

    @classmethod
    def from_log_entries(cls, log_entries) -> "Kernel":
        return cls(log_entries)

    @property
    def m(self) -> int:
        return self.log_entries.shape[0]

    @property
    def n(self) -> int:
        return self.log_entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.log_entries.shape

    @property
    def entries(self) -> np.ndarray:
        """Linear entries exp(log_entries); may underflow to 0 for extreme kernels."""
        return np.exp(self.log_entries)


def as_kernel(obj) -> Kernel:
    """Coerce a Kernel or a positive matrix into a Kernel."""
    if isinstance(obj, Kernel):
        return obj
    return Kernel.from_entries(obj)


def validate_probability_vector(v, name: str = "marginal", tol: float = 1e-12) -> np.ndarray:
    """Check strict positivity and unit sum (within tol); returns a float copy."""
    v = np.array(v, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise InvalidInputError(f"{name} must be a vector of dimension >= 2")
    if not np.isfinite(v).all() or (v <= 0).any():
        raise InvalidInputError(f"{name} must have strictly positive finite entries")
    total = float(v.sum())
    if abs(total - 1.0) > tol:
        raise InvalidInputError(f"{name} must sum to 1, observed sum {total!r}")
    return v
