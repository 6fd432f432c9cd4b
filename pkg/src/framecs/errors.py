"""Exception types raised by the package."""


class FrameCSError(Exception):
    """Base class for all package errors."""


class InvalidInputError(FrameCSError, ValueError):
    """An argument is malformed, non-finite or outside its domain."""


class InvalidIndexError(InvalidInputError, IndexError):
    """An index set contains entries outside the ambient range."""


class UnsupportedNormError(InvalidInputError):
    """The requested operator norm pair is not implemented."""


class ZeroRangeError(InvalidInputError):
    """A range projector was requested for an all-zero operator."""


class InvalidCountsError(InvalidInputError):
    """Per-level sample counts do not fit their strata."""


class InvalidBudgetError(InvalidInputError):
    """A sampling budget exceeds the ambient dimension."""


class DivisionGuardError(InvalidInputError):
    """A sampling density was requested for a level with no samples."""


class UndefinedReferenceError(InvalidInputError):
    """A relative error was requested against the zero vector."""
