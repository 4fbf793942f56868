"""Exceptions and the cooperative deadline shared by the search loops."""

from __future__ import annotations

import time
from typing import Optional


class PSolverError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(PSolverError):
    def __init__(self, message: str, line: int = 1, column: int = 1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnsupportedFunctionError(ParseError):
    pass


class BasisError(PSolverError):
    pass


class OperatorError(PSolverError):
    pass


class QuadratureError(PSolverError):
    pass


class TimeLimitExceeded(PSolverError):
    pass


class Deadline:
    """Wall-clock budget polled by long-running loops."""

    def __init__(self, seconds: Optional[float] = None):
        self.seconds = seconds
        self._end = None if seconds is None else time.monotonic() + seconds

    def remaining(self) -> float:
        if self._end is None:
            return float("inf")
        return self._end - time.monotonic()

    def expired(self) -> bool:
        return self._end is not None and time.monotonic() > self._end

    def check(self) -> None:
        if self.expired():
            raise TimeLimitExceeded(f"time limit of {self.seconds} s exceeded")


NO_DEADLINE = Deadline(None)
