"""
Append-only JSONL run ledger.

The first line is a header holding the plan and config snapshot; every
following line is one response or confidence record. Appends are
serialized and flushed to disk one record at a time so an interrupted run
leaves a readable ledger behind.
"""

import json
import logging
import os
import threading
from pathlib import Path
from typing import Any, Dict, List, Optional, Set, Union

from src.errors import HarnessFault, ValidationError
from src.types import ConfidenceRecord, ResponseRecord, RunPlan
from src.utils.files import SCHEMA_VERSION

logger = logging.getLogger(__name__)

LedgerRecord = Union[ResponseRecord, ConfidenceRecord]


def _line(data: Dict[str, Any]) -> str:
    return json.dumps(data, ensure_ascii=False, separators=(",", ":")) + "\n"


class RunLedger:
    """Run ledger backed by a JSONL file."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._tail_checked = False

    def entries(self) -> List[Dict[str, Any]]:
        if not self.path.is_file():
            return []
        entries = []
        with open(self.path, encoding="utf-8") as f:
            for number, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    entries.append(json.loads(line))
                except json.JSONDecodeError:
                    # A torn final line from an interrupted append is dropped.
                    logger.warning(f"{self.path}:{number}: unreadable ledger line skipped")
        return entries

    def header(self) -> Optional[Dict[str, Any]]:
        for entry in self.entries():
            if entry.get("record_type") == "header":
                return entry
        return None

    def write_header(self, plan: RunPlan) -> None:
        """Start a new ledger for ``plan``."""
        self._append({
            "record_type": "header",
            "schema_version": SCHEMA_VERSION,
            "config": plan.config,
            "plan": [c.to_dict() for c in plan.conditions],
        })

    def open_for(self, plan: RunPlan, resume: bool) -> None:
        """
        Prepare the ledger for executing ``plan``.

        A fresh ledger gets a header. An existing one is only accepted with
        ``resume`` and when it was written for the same plan.
        """
        header = self.header()
        if header is None:
            if self.responses() and not resume:
                raise ValidationError(f"ledger {self.path} has records; pass --resume")
            self.write_header(plan)
            return
        if not resume:
            raise ValidationError(f"ledger {self.path} already exists; pass --resume to continue it")
        if header.get("plan") != [c.to_dict() for c in plan.conditions]:
            raise ValidationError(f"ledger {self.path} was written for a different plan")

    def append(self, record: LedgerRecord) -> None:
        self._append({"schema_version": SCHEMA_VERSION, **record.to_dict()})

    def _drop_torn_tail(self) -> None:
        """Cut an unterminated last line so the next record starts on its own line."""
        if not self.path.is_file():
            return
        with open(self.path, "r+b") as f:
            data = f.read()
            if not data or data.endswith(b"\n"):
                return
            keep = data.rfind(b"\n") + 1
            logger.warning(f"{self.path}: dropping torn last line ({len(data) - keep} bytes)")
            f.truncate(keep)

    def _append(self, data: Dict[str, Any]) -> None:
        with self._lock:
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                if not self._tail_checked:
                    self._drop_torn_tail()
                    self._tail_checked = True
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(_line(data))
                    f.flush()
                    os.fsync(f.fileno())
            except OSError as e:
                raise HarnessFault(f"cannot append to ledger {self.path}: {e}") from e

    # =========================================================================
    # REPLAY
    # =========================================================================

    def responses(self) -> List[ResponseRecord]:
        """Response records in ledger order, first record per run id."""
        seen: Set[str] = set()
        records = []
        for entry in self.entries():
            if entry.get("record_type") != "response" or entry["run_id"] in seen:
                continue
            seen.add(entry["run_id"])
            records.append(ResponseRecord.from_dict(entry))
        return records

    def confidences(self) -> List[ConfidenceRecord]:
        seen: Set[str] = set()
        records = []
        for entry in self.entries():
            if entry.get("record_type") != "confidence" or entry["run_id"] in seen:
                continue
            seen.add(entry["run_id"])
            records.append(ConfidenceRecord.from_dict(entry))
        return records

    def completed_run_ids(self) -> Set[str]:
        return {r.run_id for r in self.responses()}

    def config(self) -> Dict[str, Any]:
        header = self.header()
        if header is None:
            raise ValidationError(f"ledger {self.path} has no header")
        return header.get("config", {})
