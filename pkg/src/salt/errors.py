"""Exception hierarchy shared by every SALT module."""

from __future__ import annotations


class SaltError(Exception):
    """Base class for all engine errors."""


class FormatError(SaltError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class RangeError(FormatError):
    pass


class WeightError(FormatError):
    pass


class CountError(FormatError):
    pass


class DuplicateError(FormatError):
    pass


class PermutationError(SaltError):
    pass


class NestingError(SaltError):
    pass


class NeedsCoordinatesError(SaltError):
    pass


class MetricError(SaltError):
    pass


class StaleIndexError(SaltError):
    """Raised when an index was customized for a different metric than the one queried."""


class EmptyTargetsError(SaltError):
    pass


class InsufficientObjectsError(SaltError):
    pass


class SnapshotError(SaltError):
    pass
