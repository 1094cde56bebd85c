class KnacError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(KnacError):
    """Input or parameter violates a documented precondition."""


class IngestionError(ValidationError):
    """A data file could not be parsed; message carries the location."""
