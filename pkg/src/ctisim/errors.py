"""Exception types shared across the toolkit."""


class CtisError(Exception):
    """Base class for all toolkit errors."""


class DimensionError(CtisError, ValueError):
    """Array shapes or geometry parameters are inconsistent or unsupported."""


class RangeError(CtisError, IndexError):
    """A crop window or index set reaches outside its source array."""


class FormatError(CtisError, ValueError):
    """A binary or JSON payload does not follow its documented layout."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class CapacityError(CtisError, OverflowError):
    """A requested geometry exceeds the supported index range."""


class DomainError(CtisError, ValueError):
    """Input values lie outside the mathematical domain of an operation."""


class ConfigError(CtisError, ValueError):
    """A run configuration is invalid."""
