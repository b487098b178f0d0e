"""CSV interchange for kernels, vectors, plans and convergence traces.

Matrix files are plain comma-separated rows without a header; values are
emitted with 17 significant digits so that save/load round trips are exact.
A kernel saved with save_kernel additionally writes a companion file at
`<path>.log` holding the log entries with the same shape; load_kernel prefers
the companion when present, which keeps underflowing kernels lossless.
Vector files hold one value per line.  Trace files carry the header
`iter,omega,residual_a,residual_b,plan_error,elapsed_seconds`; plan_error is
empty when no reference plan was configured, and elapsed_seconds is empty
when timing was suppressed.
"""

import math
import os

import numpy as np

from .errors import InvalidInputError, ParseError
from .kernels import Kernel, validate_probability_vector
from .solver import ConvergenceTrace, TraceRecord

TRACE_HEADER = "iter,omega,residual_a,residual_b,plan_error,elapsed_seconds"

LOG_COMPANION_SUFFIX = ".log"


def _format(x: float) -> str:
    return format(float(x), ".17g")


def save_matrix(path, matrix) -> None:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2:
        raise InvalidInputError("matrix must be 2-d")
    with open(path, "w") as fh:
        for row in matrix:
            fh.write(",".join(_format(x) for x in row))
            fh.write("\n")


def load_matrix(path) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            try:
                row = [float(cell) for cell in cells]
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: unparsable value", line=lineno)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(
                    f"{path}: line {lineno}: expected {width} values, got {len(row)}",
                    line=lineno,
                )
            rows.append(row)
    if not rows:
        raise ParseError(f"{path}: empty matrix file", line=1)
    return np.array(rows)


def save_kernel(path, kernel: Kernel) -> None:
    """Write linear entries to `path` and log entries to `path`.log."""
    save_matrix(path, kernel.entries)
    save_matrix(str(path) + LOG_COMPANION_SUFFIX, kernel.log_entries)


def load_kernel(path) -> Kernel:
    """Load a positive kernel; a `path`.log companion, when present, is authoritative."""
    companion = str(path) + LOG_COMPANION_SUFFIX
    if os.path.exists(companion):
        log_entries = load_matrix(companion)
        linear = load_matrix(path)
        if linear.shape != log_entries.shape:
            raise ParseError(
                f"{companion}: shape {log_entries.shape} does not match "
                f"{path} shape {linear.shape}"
            )
        return Kernel.from_log_entries(log_entries)
    return Kernel.from_entries(load_matrix(path))


def save_vector(path, vector) -> None:
    vector = np.asarray(vector, dtype=float)
    if vector.ndim != 1:
        raise InvalidInputError("vector must be 1-d")
    with open(path, "w") as fh:
        for x in vector:
            fh.write(_format(x) + "\n")


def load_vector(path) -> np.ndarray:
    values = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: unparsable value", line=lineno)
    if not values:
        raise ParseError(f"{path}: empty vector file", line=1)
    return np.array(values)


def load_probability_vector(path) -> np.ndarray:
    """Load a vector and enforce positivity and unit sum."""
    return validate_probability_vector(load_vector(path), name=str(path))


def save_trace(path, trace: ConvergenceTrace, timing: bool = True) -> None:
    with open(path, "w") as fh:
        fh.write(TRACE_HEADER + "\n")
        for rec in trace:
            plan_err = "" if rec.plan_error is None else _format(rec.plan_error)
            elapsed = _format(rec.elapsed_seconds) if timing else ""
            fh.write(f"{rec.iteration},{_format(rec.omega)},{_format(rec.residual_a)},"
                     f"{_format(rec.residual_b)},{plan_err},{elapsed}\n")


def load_trace(path) -> ConvergenceTrace:
    trace = ConvergenceTrace()
    with open(path) as fh:
        header = fh.readline().strip()
        if header != TRACE_HEADER:
            raise ParseError(f"{path}: unexpected trace header {header!r}", line=1)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != 6:
                raise ParseError(f"{path}: line {lineno}: expected 6 fields", line=lineno)
            try:
                trace.append(TraceRecord(
                    iteration=int(cells[0]),
                    omega=float(cells[1]),
                    residual_a=float(cells[2]),
                    residual_b=float(cells[3]),
                    plan_error=None if cells[4] == "" else float(cells[4]),
                    elapsed_seconds=math.nan if cells[5] == "" else float(cells[5]),
                ))
            except ValueError:
                raise ParseError(f"{path}: line {lineno}: unparsable value", line=lineno)
    return trace
