"""Exception hierarchy shared across the package."""


class AxmcError(Exception):
    """Base class for all errors raised by this package."""


class InputError(AxmcError):
    """Malformed or unusable user input (files, flags, request bodies)."""


class SchemaError(InputError):
    """Dataset contents violate the declared schema."""


class ParseError(InputError):
    """CSV row could not be parsed. Carries the 1-based row number."""

    def __init__(self, row: int, message: str):
        super().__init__(f"row {row}: {message}")
        self.row = row


class CardinalityError(InputError):
    """Categorical column has too many levels to one-hot encode."""


class ArgumentError(AxmcError):
    """Operation called with arguments outside its contract."""


class DegenerateTargetError(AxmcError):
    """Training labels contain a single class."""


class GroupCoverageError(AxmcError):
    """A protected group required by a fairness measure is absent."""


class UndefinedRateError(AxmcError):
    """A per-group rate (TPR/FPR/FNR) has an empty denominator."""


class NotApplicableError(AxmcError):
    """Measure cannot be computed on this dataset (e.g. no numeric features)."""


class DegenerateFeatureError(AxmcError):
    """Feature is constant (or too coarse) for the requested computation."""


class ConfigurationError(AxmcError):
    """Session configuration is inconsistent (e.g. fairness without groups)."""


class InfeasibleBoxError(AxmcError):
    """Weight box does not intersect the probability simplex (or too thinly)."""


class InsufficientDataError(AxmcError):
    """Not enough archive records to fit a surrogate."""


class RestoreError(AxmcError):
    """Session snapshot is corrupt, truncated or of an unknown version."""
