"""Exception types raised across the package."""


class InvalidParamsError(ValueError):
    """Raised when a schedule, sampler or generator receives out-of-range arguments."""


class EmptyInputError(ValueError):
    pass


class FormatError(ValueError):
    """A binary file violates its declared layout.

    ``offset`` is the byte position of the first violation.
    """

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class ParseError(ValueError):
    """A text file could not be parsed; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NonNumericFeatureError(ParseError):
    pass


class ClassStarvationError(ValueError):
    pass


class ConfigError(ValueError):
    """Invalid or unreadable experiment configuration."""
