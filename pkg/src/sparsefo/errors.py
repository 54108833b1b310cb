"""Shared error types and the step-budget used by expensive searches."""

from __future__ import annotations


class SparsefoError(Exception):
    """Base class for all library errors."""


class InputError(SparsefoError):
    """Malformed input: unknown ids, bad syntax, arity mismatches."""


class BudgetExceededError(SparsefoError):
    """An operation ran out of its step budget before finishing."""


class PreconditionError(SparsefoError):
    """A documented precondition of an operation was violated."""


DEFAULT_BUDGET = 10**7


class Budget:
    """A mutable countdown of elementary steps.

    Searches call ``spend`` in their inner loops; when the counter hits
    zero a BudgetExceededError is raised so callers fail loudly instead
    of hanging.
    """

    def __init__(self, steps: int = DEFAULT_BUDGET):
        if steps <= 0:
            raise InputError("budget must be positive")
        self.remaining = steps

    def spend(self, amount: int = 1) -> None:
        self.remaining -= amount
        if self.remaining < 0:
            raise BudgetExceededError("step budget exceeded")
