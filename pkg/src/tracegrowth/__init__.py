"""Trace-set growth, recurrence and arithmeticity experiments for subgroups of SL(2, R)."""
from __future__ import annotations

__version__ = "0.1.0"

from .errors import (ConvergenceError, DegenerateError, ExactnessRequiredError,
                     GapUndefinedError, InsufficientSamplesError, PreconditionError,
                     ResourceLimitError, TraceGrowthError, UndefinedValuationError,
                     VerificationError)
from .field import Field, QuadElem
from .matgroup import ExactMat2, GroupSpec, enumerate_ball, trace_set

__all__ = [
    "ConvergenceError", "DegenerateError", "ExactMat2", "ExactnessRequiredError", "Field",
    "GapUndefinedError", "GroupSpec", "InsufficientSamplesError", "PreconditionError",
    "QuadElem", "ResourceLimitError", "TraceGrowthError", "UndefinedValuationError",
    "VerificationError", "__version__", "enumerate_ball", "trace_set",
]
