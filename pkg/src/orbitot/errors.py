"""Exception hierarchy shared across the package."""


class OrbitotError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(OrbitotError, ValueError):
    """Input violates a documented precondition or type invariant."""


class DimensionMismatchError(InvalidParameterError):
    """Operands have incompatible shapes or dimensions."""


class SpectrumError(OrbitotError):
    """An eigenvalue or singular-value solver failed to converge."""


class IllConditionedError(OrbitotError):
    """Condition number too large for the requested operation."""


class QuadratureError(OrbitotError):
    """Adaptive quadrature did not reach the requested accuracy."""
