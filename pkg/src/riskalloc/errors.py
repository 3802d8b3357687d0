"""Exception types shared across the package."""


class RiskAllocError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RiskAllocError, ValueError):
    """A domain object violates one of its invariants."""


class ParseError(RiskAllocError, ValueError):
    """A scenario file is malformed: syntax, unknown keys, or wrong types."""


class DomainError(RiskAllocError, ValueError):
    """A scalar argument lies outside the documented domain."""


class DimensionMismatch(RiskAllocError, ValueError):
    """Inputs that must share a dimension do not."""


class NonPositiveReturn(RiskAllocError, ArithmeticError):
    """A growth factor <= 0 was encountered; the input data is corrupted."""


class CapExceeded(RiskAllocError):
    """Exact enumeration would exceed the configured atom budget.

    Callers should fall back to Monte Carlo evaluation.
    """


class QuadratureNotConverged(RiskAllocError, ArithmeticError):
    """The integration error estimate exceeds the requested tolerance."""


class NoConvergence(RiskAllocError, ArithmeticError):
    """An iterative solver failed to reach its target accuracy."""


class DimensionTooLarge(RiskAllocError, ValueError):
    """The operation only supports a small number of alternatives."""
