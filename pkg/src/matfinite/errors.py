"""Shared exception types."""


class MatfiniteError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(MatfiniteError):
    """Two operators live on different windows."""


class ConvergenceError(MatfiniteError):
    """Iterative routine hit its cap.

    Carries the last iterate so callers can inspect how far it got.
    """

    def __init__(self, message, last_estimate=None, iterations=None):
        super().__init__(message)
        self.last_estimate = last_estimate
        self.iterations = iterations


class WindowTooSmallError(MatfiniteError):
    """The declared window cannot hold the requested construction."""


class RetryExhaustedError(MatfiniteError):
    """Randomized construction failed after the retry cap."""


class InsufficientDataError(MatfiniteError):
    """Not enough usable structure in the input (window too small, or the
    operator looks ghost-like)."""


class ApproximationBudgetError(MatfiniteError):
    """A required sparse approximant does not meet its norm budget."""


class ContractViolationError(MatfiniteError):
    """An input failed a documented precondition (e.g. non-unitary)."""
