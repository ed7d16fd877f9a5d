"""Exception types shared across the package."""

from __future__ import annotations

from typing import Any


class HermiteSpaceError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatchError(HermiteSpaceError, ValueError):
    """A multi-index or point does not match the dimension of the space."""


class EvaluationError(HermiteSpaceError, ArithmeticError):
    """A pointwise function evaluation returned a non-finite value."""


class SpaceOverflowError(HermiteSpaceError, OverflowError):
    """A norm in the Hermite space overflowed double precision.

    Signals that the function is numerically outside the space at the
    current truncation.
    """


class BudgetExceededError(HermiteSpaceError):
    """A computation would exceed its configured point or cost budget.

    ``details`` carries the quantities that were computed before the
    rejection (orders, predicted number of points, index-set size, ...), so
    callers can log the would-be size without building anything.
    """

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.details = details


class ConfigError(HermiteSpaceError, ValueError):
    """An experiment or CLI configuration is malformed."""
