"""
Exception hierarchy for gridflow.

Everything raised on purpose by the package derives from GridflowError, so
callers (and the CLI) can tell our failures apart from numpy/IO errors:

- parameter/precondition problems derive from ValueError as well,
- solver breakdowns derive from RuntimeError via SolverError.
"""


class GridflowError(Exception):
    """Root of all gridflow errors."""


class InvalidGrid(GridflowError, ValueError):
    pass


class GridMismatch(GridflowError, ValueError):
    pass


class FieldFormatError(GridflowError, ValueError):
    pass


class InvalidParameter(GridflowError, ValueError):
    pass


class ConfigError(GridflowError, ValueError):
    pass


class InvalidE0(GridflowError, ValueError):
    pass


class NonZeroMean(GridflowError, ValueError):
    """A field required to be mean-zero is not (usually a mass-conservation bug upstream)."""

    def __init__(self, mean, tol, what="field"):
        self.mean = float(mean)
        self.tol = float(tol)
        super().__init__(f"{what} has mean {self.mean:.3e}, exceeds tolerance {self.tol:.3e}")


class SolverError(GridflowError, RuntimeError):
    pass


class NotDescent(SolverError):
    pass


class NoBracket(SolverError):
    pass


class MaxIterExceeded(SolverError):
    """Raised only when the caller asked for strict solves; carries the partial report."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
