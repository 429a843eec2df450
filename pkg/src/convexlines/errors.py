"""Exception hierarchy shared across the package.

Two families matter to the CLI: DomainError (a precondition was violated,
exit code 2) and ResourceError (a cap or trial budget ran out, exit code 3).
"""
from __future__ import annotations


class ConvexlinesError(Exception):
    """Base class for all package errors."""


class DomainError(ConvexlinesError):
    """A documented precondition was violated."""


class InvalidArgumentError(DomainError, ValueError):
    """Argument outside its stated domain (tol <= 0, limit = 0, ...)."""


class CalibrationDomainError(DomainError):
    """Aspect ratio n2/n1 outside [0.1, 10]; the n1 ~ n2 assumption fails."""


class UnsupportedOrderError(DomainError):
    """Moment order above the supported k <= 8."""


class SieveLimitError(DomainError):
    """Requested tolerance unreachable within the Moebius sieve limit."""


class WindowError(DomainError):
    """No finite truncation window meets the requested tolerance."""


class MatrixDomainError(DomainError):
    """Matrix argument not symmetric positive definite."""


class EncodingError(DomainError):
    """Input does not encode a convex lattice polygonal line."""


class DuplicateDirectionError(EncodingError):
    """The same direction appeared twice in a multiplicity list."""


class GeometryDomainError(DomainError):
    """Planar path outside the convex class (or empty where forbidden)."""


class ParseError(DomainError):
    """Malformed input file; carries a line number when known."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ResourceError(ConvexlinesError):
    """A configured cap or budget was exceeded."""


class CapExceededError(ResourceError):
    """Instance size beyond the configured cap."""


class BudgetExhaustedError(ResourceError):
    """Rejection sampling ran out of tries; carries tries_used."""

    def __init__(self, message: str, tries_used: int):
        self.tries_used = tries_used
        super().__init__(message)
