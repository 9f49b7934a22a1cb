"""Error types with machine-readable codes."""

from typing import Any, Optional


class DelayTailError(Exception):
    """Base error; `code` is stable and meant for scripts, `details` for context."""

    code = "DELAYTAIL_ERROR"

    def __init__(self, message: str, details: Optional[dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code, "message": self.message, "details": self.details}


class InvalidConfig(DelayTailError):
    code = "INVALID_CONFIG"


class InvalidArgument(DelayTailError, ValueError):
    code = "INVALID_ARGUMENT"


class UnstableModel(DelayTailError):
    code = "UNSTABLE_MODEL"


class CapExceeded(DelayTailError):
    code = "CAP_EXCEEDED"


class BufferOverflow(DelayTailError):
    code = "BUFFER_OVERFLOW"


class RateDegenerate(DelayTailError):
    code = "RATE_DEGENERATE"


class InvalidAlpha(DelayTailError, ValueError):
    code = "INVALID_ALPHA"


class SeedSpaceTooLarge(DelayTailError):
    code = "SEED_SPACE_TOO_LARGE"


class InsufficientVisits(DelayTailError):
    code = "INSUFFICIENT_VISITS"


class PlanningError(DelayTailError):
    code = "PLANNING_FAILED"


def require(condition: bool, message: str, **details: Any) -> None:
    """Raise InvalidArgument unless `condition` holds."""
    if not condition:
        raise InvalidArgument(message, details)
