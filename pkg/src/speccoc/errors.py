"""
errors.py

Exception hierarchy shared by every module. The CLI maps these onto exit codes:
InputFileError -> 1, PreconditionError -> 2, NumericalFailure -> 3.
"""

from __future__ import annotations


class SpeccocError(Exception):
    """Base class for all library errors."""


class InputFileError(SpeccocError):
    """A file named by the run config (e.g. a Lipschitz profile table) is missing or unreadable."""


class PreconditionError(SpeccocError, ValueError):
    """An operation was called outside its domain (bad alphabet, draw, resonant omega, ...)."""


class LengthCapExceeded(PreconditionError):
    """A composed word would be longer than the configured symbol cap."""

    def __init__(self, length: int, cap: int, what: str = "word") -> None:
        super().__init__(f"{what} length {length} exceeds the cap of {cap} symbols")
        self.length = length
        self.cap = cap


class NumericalFailure(SpeccocError, ArithmeticError):
    """An iteration or estimator did not produce a trustworthy number."""
