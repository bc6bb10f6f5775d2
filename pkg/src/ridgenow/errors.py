"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: configuration and data
problems exit 2, numerical breakdowns exit 3, failed verification checks
exit 1.
"""

from __future__ import annotations


class RidgenowError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(RidgenowError):
    """Invalid run configuration (bad flags, impossible variant, short samples)."""


class ParseError(RidgenowError):
    """Malformed input file content; message names the offending line."""


class SchemaError(RidgenowError):
    """Input violates the declared schema (unknown series, frequency mismatch)."""


class DataValidationError(RidgenowError):
    """Structurally valid input that breaks a panel invariant."""


class DataGapError(DataValidationError):
    """An observation required by the release calendar is missing."""

    def __init__(self, series_id: str, quarter: str, week: int):
        self.series_id = series_id
        self.quarter = quarter
        self.week = week
        super().__init__(
            f"series {series_id!r}: missing observation required in quarter "
            f"{quarter} for week-{week} availability"
        )


class TransformError(RidgenowError):
    """A series transform cannot be applied to the given values."""


class InsufficientHistoryError(TransformError):
    """Series too short for the transform's lags."""


class SingularDesignError(RidgenowError):
    """Regression design is rank deficient or numerically singular."""


class InsufficientSampleError(RidgenowError):
    """Too few observations for the requested regression."""


class NumericalBreakdownError(RidgenowError):
    """A numerically impossible intermediate value was produced."""


class VerificationFailure(RidgenowError):
    """An empirical verification check missed its documented tolerance."""
