"""Exception types shared across the package."""


class CapacityError(RuntimeError):
    """An enumeration or table would exceed the configured size budget."""


class DomainError(ValueError):
    """A value lies outside the declared support."""


class StructureError(ValueError):
    """Mismatched shapes or incompatible index structures."""


class FitError(RuntimeError):
    """An optimization run could not produce a usable estimate."""


class ParseError(ValueError):
    """A weight-scheme, parameter, or config file failed to parse."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
