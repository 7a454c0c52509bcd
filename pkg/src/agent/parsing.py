"""
Strict readers for conclusion.txt and confidence.txt.

A file is accepted only when it holds exactly one JSON object with an
integer score in [0, 100] and a non-empty string explanation. Everything
else becomes a parse_error record that keeps the offending content.
"""

import json
import logging
from pathlib import Path
from typing import Optional, Tuple

from src.types import ConfidenceRecord, ResponseRecord, RunCondition, RunStatus
from src.agent.workspace import CONCLUSION_FILE, CONFIDENCE_FILE

logger = logging.getLogger(__name__)


class _Rejected(Exception):
    def __init__(self, reason: str, raw: Optional[str] = None):
        super().__init__(reason)
        self.reason = reason
        self.raw = raw


def _read_answer(path: Path, key: str) -> Tuple[int, str, str]:
    if not path.is_file():
        raise _Rejected(f"missing file {path.name}")
    raw = path.read_text(encoding="utf-8", errors="replace")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise _Rejected(f"invalid JSON: {e.msg}", raw) from e

    if not isinstance(data, dict):
        raise _Rejected("content is not a JSON object", raw)
    missing = [k for k in (key, "explanation") if k not in data]
    if missing:
        raise _Rejected(f"missing keys: {missing}", raw)
    unexpected = sorted(set(data) - {key, "explanation"})
    if unexpected:
        raise _Rejected(f"unexpected keys: {unexpected}", raw)

    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise _Rejected(f"'{key}' is not an integer", raw)
    if not 0 <= value <= 100:
        raise _Rejected(f"'{key}' out of range: {value}", raw)
    explanation = data["explanation"]
    if not isinstance(explanation, str) or not explanation.strip():
        raise _Rejected("'explanation' must be a non-empty string", raw)
    return value, explanation, raw


def parse_conclusion(
    workspace: Path,
    condition: RunCondition,
    wall_time: float = 0.0,
    attempts: int = 1,
) -> ResponseRecord:
    """Read ``conclusion.txt`` of a finished analysis run."""
    workspace = Path(workspace)
    try:
        score, explanation, _ = _read_answer(workspace / CONCLUSION_FILE, "response")
    except _Rejected as e:
        logger.warning(f"{condition.run_id}: parse error ({e.reason})")
        return ResponseRecord(
            run_id=condition.run_id,
            condition=condition,
            score=None,
            explanation="",
            status=RunStatus.PARSE_ERROR,
            wall_time=wall_time,
            workspace=str(workspace),
            raw_content=e.raw,
            error=e.reason,
            attempts=attempts,
        )
    return ResponseRecord(
        run_id=condition.run_id,
        condition=condition,
        score=score,
        explanation=explanation,
        status=RunStatus.OK,
        wall_time=wall_time,
        workspace=str(workspace),
        attempts=attempts,
    )


def parse_confidence(workspace: Path, run_id: str, wall_time: float = 0.0) -> ConfidenceRecord:
    """Read ``confidence.txt`` written by the supervisor pass."""
    try:
        confidence, explanation, _ = _read_answer(Path(workspace) / CONFIDENCE_FILE, "confidence")
    except _Rejected as e:
        logger.warning(f"{run_id}: confidence parse error ({e.reason})")
        return ConfidenceRecord(
            run_id=run_id,
            confidence=None,
            explanation="",
            status=RunStatus.PARSE_ERROR,
            wall_time=wall_time,
            raw_content=e.raw,
            error=e.reason,
        )
    return ConfidenceRecord(
        run_id=run_id,
        confidence=confidence,
        explanation=explanation,
        status=RunStatus.OK,
        wall_time=wall_time,
    )
