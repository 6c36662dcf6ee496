"""Exception hierarchy shared by all modules."""


class HeavySumError(Exception):
    """Base class for toolkit errors."""


class DomainError(HeavySumError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class RegimeError(DomainError):
    """(n, s) point where a condition or bound is not defined, e.g. a <= 0."""


class PreconditionError(DomainError):
    """Model does not satisfy the hypotheses a functional requires."""


class NumericError(HeavySumError, ArithmeticError):
    """Numerical procedure failed; ``diagnostics`` carries the details."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class QuadratureError(NumericError):
    pass


class AccuracyError(NumericError):
    """Grid refinement disagreed beyond the accepted tolerance."""


class NotFoundError(HeavySumError, LookupError):
    """A search (threshold, t_n) found nothing inside its range."""

    def __init__(self, message, search_range=None):
        super().__init__(message)
        self.search_range = search_range


class ConfigError(HeavySumError, ValueError):
    pass
