"""Exception hierarchy shared across the package."""


class RolloutAidError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(RolloutAidError):
    """Malformed input or a violated contract; CLI maps this to exit code 1."""


class ModelFormatError(ValidationError):
    """A persisted model file is unreadable, corrupted, or has an unsupported version."""
