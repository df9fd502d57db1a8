"""Exception types shared across the package."""
from __future__ import annotations


class IncompatError(Exception):
    """Base class for all errors raised by this package."""


class EmptyPoolError(IncompatError):
    """A measurement was attempted on an empty pool (urn or deck)."""


class UnknownVariableError(IncompatError):
    """A variable name does not belong to the system."""


class UnknownValueError(IncompatError):
    """A value label does not belong to the named variable."""


class ZeroConditionError(IncompatError):
    """Conditioning on an event whose probability is exactly zero."""


class BlockMismatchError(IncompatError):
    """Fine events do not match the coarse event's block."""


class ValidationError(IncompatError):
    """A structural invariant of a system, state or operator is violated."""


class SpecError(IncompatError):
    """A serialized system document violates the schema.

    ``path`` is a JSON-pointer locating the offending field.
    """

    def __init__(self, message: str, path: str = "") -> None:
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path


class RankDeficientError(IncompatError):
    """Span vectors are linearly dependent."""


class DimensionMismatchError(IncompatError):
    """Operator dimensions do not agree."""


class ShapeMismatchError(IncompatError):
    """Operands do not have the shape required by the requested check."""
