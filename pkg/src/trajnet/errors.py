"""Typed errors raised by the trajnet library.

Every class derives from TrajnetError and from the builtin it refines, so
callers may catch either. The CLI prints `error: <ClassName>: <message>`.
"""


class TrajnetError(Exception):
    """Base class for all library errors."""


class ShapeError(TrajnetError, ValueError):
    pass


class NonFiniteError(TrajnetError, ValueError):
    pass


class BackwardBeforeForwardError(TrajnetError, RuntimeError):
    pass


class ConfigError(TrajnetError, ValueError):
    pass


class TaskMismatchError(TrajnetError, ValueError):
    pass


class NonFiniteLossError(TrajnetError, RuntimeError):
    pass


class CheckpointFormatError(TrajnetError, ValueError):
    pass


class SplitError(TrajnetError, ValueError):
    pass


class DatasetFormatError(TrajnetError, ValueError):
    """Malformed dataset file. `line` is 1-based, None for whole-file problems."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(f"{prefix}{message}")


class MissingAgentError(TrajnetError, ValueError):
    """A required agent (key person, ball) has no present frame."""
