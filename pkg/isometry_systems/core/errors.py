# isometry_systems/core/errors.py
"""Exceptions raised by the core modules.

Every error is a ``ValueError`` so callers that only care about "bad input"
can catch that; the CLI maps all of them to exit code 2.
"""


class IsometryError(ValueError):
    """Base class for every error raised by this package."""


# --- forest-core ---
class CycleDetected(IsometryError):
    pass


class NonPositiveLength(IsometryError):
    pass


class Disconnected(IsometryError):
    pass


class PointNotInTree(IsometryError):
    pass


class PointNotInSubtree(IsometryError):
    pass


class HostMismatch(IsometryError):
    pass


class FieldMismatch(IsometryError):
    """Two scalars live in different quadratic fields."""


# --- sysiso ---
class InvalidSystem(IsometryError):
    pass


class UnreducedWord(IsometryError):
    pass


class BudgetExceeded(IsometryError):
    pass


# --- induction ---
class EmptyOutput(IsometryError):
    pass


class NotASplittingPoint(IsometryError):
    pass


# --- indices ---
class FreenessViolation(IsometryError):
    def __init__(self, message: str, cycle_word: str = ""):
        super().__init__(message)
        self.cycle_word = cycle_word


# --- iet ---
class InvalidIET(IsometryError):
    pass


class KeaneViolation(IsometryError):
    def __init__(self, message: str, position: int, steps: list | None = None):
        super().__init__(message)
        self.position = position
        self.steps = steps or []


# --- lamination ---
class BasepointMismatch(IsometryError):
    pass


# --- cli ---
class ParseError(IsometryError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        location = f"line {line}" if line is not None else "document"
        if field:
            location += f", field '{field}'"
        super().__init__(f"{location}: {message}")
        self.line = line
        self.field = field


class UsageError(IsometryError):
    pass
