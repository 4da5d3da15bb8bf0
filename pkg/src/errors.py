"""
Exception hierarchy shared by the services, routes and CLI.

Everything raised on purpose derives from PrivBootError so the HTTP layer
and the command line can tell domain failures apart from bugs.
"""

from typing import Optional


class PrivBootError(Exception):
    """Base class for all library errors"""


class ParameterError(PrivBootError, ValueError):
    """An argument is outside its documented domain"""


class InfeasibleBudgetError(ParameterError):
    """A budget equation has no root inside the search bracket"""

    def __init__(self, message: str, bound: str):
        super().__init__(message)
        self.bound = bound


class CurveValidationError(PrivBootError, ValueError):
    """A trade-off curve breaks convexity, monotonicity or the identity bound"""


class DegenerateCurveError(CurveValidationError):
    """A curve has no strictly decreasing part to integrate over"""


class ConvergenceError(PrivBootError):
    """The logistic solver stopped before reaching the gradient tolerance"""

    def __init__(self, message: str, gradient_norm: float, iterations: int):
        super().__init__(message)
        self.gradient_norm = gradient_norm
        self.iterations = iterations


class DataError(PrivBootError, ValueError):
    """Records or labels violate the declared sample domain"""


class IngestionError(DataError):
    """A regression CSV could not be turned into a sample"""

    def __init__(self, message: str, rows_read: int = 0, rows_kept: Optional[int] = None):
        super().__init__(message)
        self.rows_read = rows_read
        self.rows_kept = rows_kept


class ReportError(PrivBootError, OSError):
    """A report could not be written"""


class QuantileResolutionWarning(UserWarning):
    """Too few replicates to resolve the requested tail quantile"""
