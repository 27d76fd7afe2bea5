"""Exception hierarchy shared by all modules."""


class TraceGrowthError(Exception):
    """Base class for package errors."""


class PreconditionError(TraceGrowthError, ValueError):
    """An operation was called outside its documented domain."""


class VerificationError(TraceGrowthError, AssertionError):
    """A checked mathematical property failed on concrete data."""


class ResourceLimitError(TraceGrowthError):
    """An enumeration exceeded its configured cap."""


class ExactnessRequiredError(TraceGrowthError, TypeError):
    """The operation needs exact inputs but received floating point ones."""


class GapUndefinedError(TraceGrowthError, ValueError):
    """Gap of a set with fewer than two elements."""


class InsufficientSamplesError(TraceGrowthError, ValueError):
    pass


class UndefinedValuationError(TraceGrowthError, ValueError):
    """Valuation of zero."""


class DegenerateError(TraceGrowthError, ValueError):
    pass


class ConvergenceError(TraceGrowthError, RuntimeError):
    def __init__(self, message: str, best_residual: float = float("inf")):
        super().__init__(message)
        self.best_residual = best_residual
