"""Exception types shared across the package."""

from __future__ import annotations


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ConfigError(ValueError):
    """A configuration violates one of its invariants."""


class DegenerateChannelError(ArithmeticError):
    """A channel realization is singular or rank deficient."""


class IllConditionedAlignmentError(ArithmeticError):
    """The aligned relay signal space is numerically singular."""


class NumericInstabilityError(ArithmeticError):
    """A closed-form evaluator produced a value outside its valid range.

    The raw value is kept on ``value`` so callers can inspect it.
    """

    def __init__(self, message: str, value: float):
        super().__init__(f"{message} (raw value {value!r})")
        self.value = value
