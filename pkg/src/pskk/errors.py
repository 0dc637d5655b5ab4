"""Exception hierarchy.

``ValidationError`` subclasses signal bad user-supplied parameters (the CLI
maps them to exit code 2); everything else under ``PskkError`` is a runtime
or numerical failure (exit code 3).
"""


class PskkError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(PskkError, ValueError):
    """A parameter violates an operation's precondition."""


class UnsupportedOrderError(ValidationError):
    """Bernoulli degree or smoothness order outside the supported range."""


class InvalidLatticeError(ValidationError):
    """Point count is not prime or the generating vector is malformed."""


class DomainError(PskkError, ValueError):
    """A point lies outside the box the kernel is defined on."""


class InvalidSampleError(PskkError, ValueError):
    """Samples contain non-finite values or have the wrong shape."""


class ConfigurationError(PskkError, ValueError):
    """Inconsistent combination of otherwise valid objects (e.g. dimension mismatch)."""


class StructureError(PskkError):
    """Circulant solve requested for a node set that is not a rank-1 lattice."""


class IllConditionedSystemError(PskkError, ArithmeticError):
    """Circulant symbol is numerically singular or the residual check failed."""

    def __init__(self, message, min_modulus=None):
        super().__init__(message)
        self.min_modulus = min_modulus


class ScheduleUnderflowError(PskkError, ValueError):
    """Sample count too small for the theoretical parameter schedule."""


class DegenerateDataError(PskkError, ValueError):
    """Samples have zero variance in some dimension."""
