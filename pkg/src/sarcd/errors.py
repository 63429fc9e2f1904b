"""Exception hierarchy shared by all sarcd modules."""


class SarcdError(Exception):
    """Base class for every error raised by this package."""


class ParameterError(SarcdError, ValueError):
    """An argument violates a documented precondition (shape, range, parity...)."""


class FormatError(SarcdError, ValueError):
    """A file on disk is malformed, truncated, or has the wrong magic."""


class DegenerateInputError(SarcdError):
    """Input carries no usable contrast (e.g. a constant image)."""


class DegenerateTrainingError(SarcdError):
    """A training set is unusable (a class is empty or only one class present)."""


class UndefinedMetricError(SarcdError):
    """A metric is mathematically undefined for the given counts."""


class InternalError(SarcdError):
    """An internal invariant was breached; indicates a bug, not user error."""
