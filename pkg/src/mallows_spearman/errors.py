"""Semantic exceptions shared across the package."""

from __future__ import annotations


class MallowsError(Exception):
    """Base class for all package errors."""


class LengthMismatch(MallowsError, ValueError):
    """Two vectors that must share a length do not."""


class TiesPresent(MallowsError, ValueError):
    """A strict rank transform hit tied coordinates.

    ``tied_groups`` lists the groups of tied item positions (1-based),
    e.g. ``((3, 4),)`` when items 3 and 4 share a value.
    """

    def __init__(self, tied_groups, message=None):
        self.tied_groups = tuple(tuple(g) for g in tied_groups)
        if message is None:
            groups = ", ".join(str(g) for g in self.tied_groups)
            message = f"tied coordinates at item positions {groups}"
        super().__init__(message)


class NonUniqueMLE(TiesPresent):
    """The sample mean has ties, so no unique consensus MLE exists."""


class EstimateDiverged(MallowsError, ArithmeticError):
    """A scale estimate ran away to infinity (zero observed dispersion)."""


class EnumerationLimit(MallowsError, ValueError):
    """An exact operation was requested above its enumeration limit."""


class TableFormatError(MallowsError, ValueError):
    """A distance-frequency table file failed parsing or validation."""


class GridRangeError(MallowsError, ValueError):
    """A requested evaluation point falls outside a precomputed grid."""


class DataValidationError(MallowsError, ValueError):
    """An input dataset failed validation (bad rows, missing values)."""
