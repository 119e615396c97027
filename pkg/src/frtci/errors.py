"""Exception types shared across the package."""


class FrtError(Exception):
    """Base class for all errors raised by frtci."""


class DomainError(FrtError, ValueError):
    """An argument is outside its documented domain."""


class SingularDesignError(FrtError):
    """Design matrix is rank deficient, or a statistic is degenerate on it."""


class InsufficientDataError(FrtError):
    """Too few rows for the requested fit."""


class DegenerateResponseError(FrtError):
    """Binary response is constant; the probit likelihood has no interior optimum."""


class SeparationError(FrtError):
    """Probit likelihood is monotone in some direction (perfect separation)."""


class DegenerateGroupsError(FrtError):
    """A two-group statistic was given a sample with an empty group."""


class DegenerateResidualError(FrtError):
    """A residual scale needed for standardization is zero."""


class UnsupportedDesignError(FrtError):
    """Operation requires an enumerable assignment design and none is available."""


class UndefinedWindowError(FrtError):
    """Kernel window contains no grid mass at the evaluation point."""


class SchemaError(FrtError):
    """Input file or config does not match the declared schema."""


class EmptyDatasetError(FrtError):
    """No usable rows remain after ingestion."""


class DataIntegrityError(FrtError):
    """Ingested values violate a structural requirement of the data."""
