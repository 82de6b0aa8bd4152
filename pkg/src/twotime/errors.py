"""Exception hierarchy.

Two families matter to callers (and to the CLI exit codes): validation
errors signal inputs that violate a constructor or function contract,
domain errors signal mathematically undefined results on valid inputs
(a vanishing denominator, an empty post-selection).  Every exception
carries a stable machine-readable ``code``.
"""

from __future__ import annotations

__all__ = [
    "TwoTimeError",
    "ValidationError",
    "DimensionMismatchError",
    "DegenerateInputError",
    "NotHermitianError",
    "NotPositiveError",
    "NormalizationError",
    "IncompleteMeasurementError",
    "NotDetailedError",
    "SchemaError",
    "MalformedDataError",
    "DomainError",
    "PostSelectionImpossibleError",
    "UndefinedWeakValueError",
    "NoEquivalentStateError",
    "AllDiscardedError",
]


class TwoTimeError(Exception):
    """Base class for all package errors."""

    code = "error"


class ValidationError(TwoTimeError):
    """An input violates a documented contract (CLI exit status 2)."""

    code = "validation"


class DimensionMismatchError(ValidationError):
    code = "dimension-mismatch"


class DegenerateInputError(ValidationError):
    code = "degenerate-input"


class NotHermitianError(ValidationError):
    code = "not-hermitian"


class NotPositiveError(ValidationError):
    code = "not-positive"


class NormalizationError(ValidationError):
    code = "normalization"


class IncompleteMeasurementError(ValidationError):
    code = "incomplete-measurement"


class NotDetailedError(ValidationError):
    code = "not-detailed"


class SchemaError(ValidationError):
    code = "schema"


class MalformedDataError(ValidationError):
    code = "malformed-data"


class DomainError(TwoTimeError):
    """A result is mathematically undefined (CLI exit status 3)."""

    code = "domain"


class PostSelectionImpossibleError(DomainError):
    code = "post-selection-impossible"


class UndefinedWeakValueError(DomainError):
    code = "undefined-weak-value"


class NoEquivalentStateError(DomainError):
    code = "no-equivalent-state"


class AllDiscardedError(DomainError):
    code = "all-discarded"
