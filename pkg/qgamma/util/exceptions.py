"""
Exceptions raised by the qgamma computations.
"""

from typing import Optional


class QGammaError(Exception):
    """Base class for all computation errors."""

    def __init__(self, message: str, details: Optional[dict] = None):
        """
        Initialize the error.

        Args:
            message (str): Error message
            details (Optional[dict]): Additional error details
        """
        super().__init__(message)
        self.message = message
        self.details = details or {}


class PrecisionError(QGammaError):
    """Raised when the working precision cannot certify a result; retrying at more bits may succeed."""

    pass


class AmbiguousFloor(PrecisionError):
    """Raised when a value lies within its error bound of an integer."""

    pass


class NotNearInteger(PrecisionError):
    """Raised when no integer lies within the allowed slack."""

    pass


class IntegralityFailure(PrecisionError):
    """Raised when a quantity that must be an integer cannot be certified as one."""

    pass


class InsufficientPrecision(PrecisionError):
    """Raised when the error bound is too large for the requested output digits."""

    pass


class PrecisionExhausted(QGammaError):
    """Raised when the retry protocol gives up."""

    pass


class DomainError(QGammaError):
    """Raised when an argument lies outside a series' domain of convergence."""

    pass


class RangeError(QGammaError):
    """Raised when (n, m) lies outside the range where a bound or identity holds."""

    pass


class PlanError(QGammaError):
    """Raised when an asymptotic plan is not valid for its method."""

    pass
