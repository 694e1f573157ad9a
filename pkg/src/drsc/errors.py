"""Exception types shared across the package."""


class DRSCError(Exception):
    """Base class for all package errors."""


class DimensionError(DRSCError, ValueError):
    pass


class ConfigurationError(DRSCError, ValueError):
    pass


class ValidationError(DRSCError, ValueError):
    pass


class NumericalError(DRSCError, RuntimeError):
    pass


class UsageError(DRSCError, ValueError):
    pass


class ParseError(DRSCError, ValueError):
    """Malformed input file. Carries the offending line (1-based) or byte offset."""

    def __init__(self, message, line=None, offset=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"offset {offset}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.line = line
        self.offset = offset
