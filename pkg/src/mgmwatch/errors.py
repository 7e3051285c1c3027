"""Exception types shared across the package."""

__all__ = [
    "ModelValidationError",
    "DimensionMismatchError",
    "NotSymmetricError",
    "NotPositiveDefiniteError",
    "InvalidModificationError",
    "EnumerationCapError",
    "MissingTableError",
    "SeriesTooShortError",
    "ParseError",
]


class ModelValidationError(ValueError):
    """Base class for structural problems with model parameters."""


class DimensionMismatchError(ModelValidationError):
    """Array shapes are inconsistent with each other."""


class NotSymmetricError(ModelValidationError):
    """A matrix that must be symmetric is not, beyond tolerance."""


class NotPositiveDefiniteError(ModelValidationError):
    """The precision matrix of the continuous block is not positive definite."""


class InvalidModificationError(ModelValidationError):
    """A parameter modification is malformed or breaks model validity."""


class EnumerationCapError(ValueError):
    """A full state table was requested for more binary variables than the cap allows."""


class MissingTableError(ValueError):
    """Exact categorical sampling needs an enumerated probability table."""


class SeriesTooShortError(ValueError):
    """The rank scan needs at least four observations."""


class ParseError(ValueError):
    """A data file could not be parsed.  Carries the 1-based line number."""

    def __init__(self, message: str, lineno: int | None = None):
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)
        self.lineno = lineno
