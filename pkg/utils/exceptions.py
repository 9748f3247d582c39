"""Exception hierarchy for topoflux.

Every error also derives from the closest builtin so callers can catch either
the library type or the plain Python one.
"""

from typing import Any, Optional


class TopofluxError(Exception):
    """Base class for all library errors."""


class InvalidSimplexError(TopofluxError, ValueError):
    """A simplex has an empty, negative or repeated vertex list."""


class OrderingError(TopofluxError, ValueError):
    """A simplex order puts a coface before one of its faces, or filtration values decrease."""


class ResourceLimitError(TopofluxError, MemoryError):
    """A construction would exceed the configured simplex budget."""

    def __init__(self, message: str, count: int, limit: int):
        super().__init__(message)
        self.count = count
        self.limit = limit


class DuplicatePointError(TopofluxError, ValueError):
    """A point cloud contains exact duplicate points."""


class EmptyCloudError(TopofluxError, ValueError):
    """A point cloud has no points."""


class CycleNotFoundError(TopofluxError, LookupError):
    """The requested 1-dimensional class does not exist."""


class ConfigurationError(TopofluxError, ValueError):
    """A loss, run or experiment configuration cannot be applied to the data."""


class UsageError(TopofluxError, ValueError):
    """An operation was called with incompatible arguments."""


class ParseError(TopofluxError, ValueError):
    """An input file is malformed."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        location = ""
        if path:
            location = f"{path}"
        if line is not None:
            location = f"{location}:{line}" if location else f"line {line}"
        super().__init__(f"{location}: {message}" if location else message)
        self.line = line
        self.path = path


class RetractionError(TopofluxError, ArithmeticError):
    """The QR retraction onto the Stiefel manifold met a rank-deficient matrix."""


class DivergenceError(TopofluxError, ArithmeticError):
    """An optimization produced a non-finite loss or coordinate."""

    def __init__(self, message: str, trace: Any = None):
        super().__init__(message)
        self.trace = trace
