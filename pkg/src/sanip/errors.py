"""Exception hierarchy shared by all decoders."""


class SanipError(Exception):
    """Base class for every error raised by this package."""


class ParseError(SanipError, ValueError):
    """Malformed input bytes or text."""

    def __init__(self, message, offset=None, line=None):
        self.offset = offset
        self.line = line
        where = []
        if offset is not None:
            where.append(f"byte offset {offset}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} (at {', '.join(where)})"
        super().__init__(message)


class NotFoundError(SanipError):
    """No symbol / pattern / object could be located."""


class DecodeError(SanipError):
    """A symbol was located but its content could not be decoded."""

    def __init__(self, message, position=None):
        self.position = position
        super().__init__(message)


class ConfigError(SanipError, ValueError):
    """Inconsistent arguments or configuration."""


class UncorrectableError(DecodeError):
    """Reed-Solomon block has more errors than it can repair."""


class StageError(SanipError):
    """Wraps the first failing stage of a multi-stage decode."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"{stage}: {cause}")

    @property
    def not_found(self):
        return isinstance(self.cause, NotFoundError)


class UnavailableError(SanipError):
    """An external command was requested but none is configured."""
