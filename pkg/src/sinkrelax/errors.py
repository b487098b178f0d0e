"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An input violates a documented precondition (shape, range, positivity)."""


class NumericalFailureError(RuntimeError):
    """A numeric operation produced non-finite values.

    ``iteration`` carries the sweep index at which the failure occurred when
    raised from inside an iterative routine, otherwise None.
    """

    def __init__(self, message: str, iteration: int | None = None):
        super().__init__(message)
        self.iteration = iteration


class StalePlanError(ValueError):
    """A transport plan is not converged tightly enough for spectral analysis."""


class RankDeficiencyError(ValueError):
    """Kernel is numerically rank deficient; the data-only rate bound is unavailable."""


class InvalidWindowError(ValueError):
    """A residual window is unsuitable for rate estimation (e.g. relaxed steps inside)."""


class ConvergedEarly(Exception):
    """Signal: residuals in the estimation window already vanished.

    Control-flow signal rather than an error; callers treat it as "keep the
    standard method", since no rate information is left to extract.
    """


class ParseError(ValueError):
    """Malformed input file; ``line`` is the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        super().__init__(message)
        self.line = line
