"""
Mapping of service exceptions onto verdict entries and exit codes.
"""
from typing import Any, Callable, Dict, NamedTuple, Optional

import numpy as np
from loguru import logger

from app.exceptions import PRECONDITION_ERRORS, DocumentError, LtiSymError, OddDimension
from app.schemas.report import VerdictEntry, VerdictValue

EXIT_OK = 0
EXIT_INPUT_ERROR = 2

# Failures of the input itself rather than of an analysis.
INPUT_ERRORS = (DocumentError, OddDimension)


class Evaluation(NamedTuple):
    value: VerdictValue
    result: Any = None
    reason: Optional[str] = None
    residual: Optional[float] = None

    def entry(self, residual: Optional[float] = None, certificate: Optional[str] = None) -> VerdictEntry:
        return VerdictEntry(
            value=self.value,
            residual=self.residual if residual is None else residual,
            reason=self.reason,
            certificate=certificate if self.value is True else None,
        )


def _reason(exc: LtiSymError) -> str:
    return f"{exc.code}: {exc.message}"


def evaluate(name: str, fn: Callable[[], Any]) -> Evaluation:
    """
    Run one analysis step.

    Precondition failures (and breakdowns of the linear algebra) become
    "unknown", every other LtiSymError becomes False. Input errors are
    re-raised.
    """
    try:
        return Evaluation(True, fn())
    except INPUT_ERRORS:
        raise
    except PRECONDITION_ERRORS as exc:
        logger.warning(f"{name}: unknown ({_reason(exc)})")
        return Evaluation("unknown", reason=_reason(exc), residual=exc.context.get("residual"))
    except LtiSymError as exc:
        logger.warning(f"{name}: false ({_reason(exc)})")
        return Evaluation(False, reason=_reason(exc), residual=exc.context.get("residual"))
    except np.linalg.LinAlgError as exc:
        logger.warning(f"{name}: unknown (linear algebra failure: {exc})")
        return Evaluation("unknown", reason=f"linalg: {exc}")


def error_response(exc: Exception) -> Dict[str, Any]:
    """Error document written to stderr when a command cannot run."""
    if isinstance(exc, LtiSymError):
        return {"error": {"status": EXIT_INPUT_ERROR, **exc.to_dict()}}
    return {"error": {"status": EXIT_INPUT_ERROR, "code": "error", "message": str(exc)}}
