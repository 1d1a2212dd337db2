"""Exception types shared across the package."""

from __future__ import annotations


class LRankError(Exception):
    """Base class for all errors raised by this package."""


class NonPrime(LRankError):
    pass


class CapExceeded(LRankError):
    """An exhaustive computation would exceed its configured size cap."""


class DivisionByZero(LRankError, ZeroDivisionError):
    pass


class NotASubfield(LRankError):
    pass


class ShapeMismatch(LRankError, ValueError):
    pass


class OrderTooSmall(LRankError, ValueError):
    pass


class LengthMismatch(LRankError, ValueError):
    pass


class DegreeCapExceeded(LRankError):
    pass


class NotStable(LRankError):
    """The point passed to the decomposition builder is not LR-stable."""


class ChoiceFailure(LRankError):
    """No admissible choice of minors/kernel points was found (a library bug)."""


class VerificationFailed(LRankError):
    pass


class PreconditionViolated(LRankError, ValueError):
    pass


class PipelineFailed(LRankError):
    def __init__(self, stage: str, detail: str = ""):
        super().__init__(f"pipeline failed at stage {stage!r}: {detail}")
        self.stage = stage
        self.detail = detail


class CharTooSmall(LRankError, ValueError):
    pass
