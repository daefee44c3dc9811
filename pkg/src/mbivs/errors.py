"""Exception hierarchy for mbivs.

Every error raised by the library derives from :class:`MbivsError` so callers
can catch one base type. Validation problems carry enough context to report
every violation found in a dataset, not just the first.
"""

from __future__ import annotations


class MbivsError(Exception):
    """Base class for all mbivs errors."""


class ValidationError(MbivsError, ValueError):
    """An input violates a documented contract."""


class DimensionMismatch(ValidationError):
    """Arrays that must share a dimension do not."""


class NonFiniteValue(ValidationError):
    """An input array contains NaN or infinity."""


class BadGroupIndex(ValidationError):
    """Group labels are not a contiguous 1..G assignment covering every predictor."""


class BadAnnotation(ValidationError):
    """Annotation vector is the wrong length or not binary."""


class DatasetValidationError(ValidationError):
    """Aggregate of several dataset violations.

    Raised when validation finds more than one problem; single problems are
    raised directly with their specific type. ``issues`` holds one exception
    instance per violation, in the order found.
    """

    def __init__(self, issues: list[ValidationError]):
        self.issues = list(issues)
        lines = "; ".join(str(e) for e in self.issues)
        super().__init__(f"{len(self.issues)} dataset violations: {lines}")


class NumericalBreakdown(MbivsError, FloatingPointError):
    """A numerical operation failed irrecoverably (e.g. Cholesky of a non-SPD matrix).

    ``sweep`` records the Gibbs sweep index when the failure happened inside a
    chain, else -1.
    """

    def __init__(self, message: str, sweep: int = -1):
        self.sweep = sweep
        if sweep >= 0:
            message = f"{message} (sweep {sweep})"
        super().__init__(message)


class NotPositiveDefinite(NumericalBreakdown):
    """A matrix required to be symmetric positive definite is not."""
