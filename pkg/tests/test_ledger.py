import json

import pytest

from src.errors import ValidationError
from src.processors.planning import build_run_plan
from src.types import PCS_KINDS, Arm, ConfidenceRecord, RunStatus
from src.utils.ledger import RunLedger
from tests.helpers import response


def _plan():
    return build_run_plan("d", PCS_KINDS, 1, 0, config={"master_seed": 0})


def test_records_are_appended_as_json_lines(tmp_path):
    ledger = RunLedger(tmp_path / "ledger.jsonl")
    ledger.open_for(_plan(), resume=False)
    ledger.append(response("d", Arm.ALTERNATIVE, 0, 60))
    ledger.append(ConfidenceRecord(run_id="x", confidence=40, explanation="e", status=RunStatus.OK))

    lines = (tmp_path / "ledger.jsonl").read_text().splitlines()
    assert [json.loads(line)["record_type"] for line in lines] == ["header", "response", "confidence"]
    assert all(json.loads(line)["schema_version"] == 1 for line in lines)
    assert ledger.config() == {"master_seed": 0}
    assert ledger.responses()[0].score == 60
    assert ledger.confidences()[0].confidence == 40


def test_torn_last_line_is_skipped(tmp_path):
    ledger = RunLedger(tmp_path / "ledger.jsonl")
    ledger.open_for(_plan(), resume=False)
    ledger.append(response("d", Arm.ALTERNATIVE, 0, 60))
    with open(ledger.path, "a", encoding="utf-8") as f:
        f.write('{"record_type": "response", "run_id": "d__tor')

    assert [r.score for r in ledger.responses()] == [60]


def test_append_after_a_torn_line_starts_a_new_line(tmp_path):
    ledger = RunLedger(tmp_path / "ledger.jsonl")
    ledger.open_for(_plan(), resume=False)
    ledger.append(response("d", Arm.ALTERNATIVE, 0, 60))
    with open(ledger.path, "a", encoding="utf-8") as f:
        f.write('{"record_type": "response", "run_id": "d__tor')

    resumed = RunLedger(ledger.path)
    resumed.open_for(_plan(), resume=True)
    resumed.append(response("d", Arm.ALTERNATIVE, 1, 70))

    assert [r.score for r in resumed.responses()] == [60, 70]
    assert ledger.path.read_text().endswith("}\n")
    assert "d__tor" not in ledger.path.read_text()


def test_first_record_per_run_id_wins(tmp_path):
    ledger = RunLedger(tmp_path / "ledger.jsonl")
    ledger.open_for(_plan(), resume=False)
    ledger.append(response("d", Arm.ALTERNATIVE, 0, 60))
    ledger.append(response("d", Arm.ALTERNATIVE, 0, 10))

    assert [r.score for r in ledger.responses()] == [60]
    assert ledger.completed_run_ids() == {response("d", Arm.ALTERNATIVE, 0, 60).run_id}


def test_existing_ledger_needs_resume_and_the_same_plan(tmp_path):
    ledger = RunLedger(tmp_path / "ledger.jsonl")
    ledger.open_for(_plan(), resume=False)

    with pytest.raises(ValidationError, match="--resume"):
        ledger.open_for(_plan(), resume=False)
    ledger.open_for(_plan(), resume=True)
    with pytest.raises(ValidationError, match="different plan"):
        ledger.open_for(build_run_plan("d", PCS_KINDS, 2, 0), resume=True)


def test_ledger_without_header_has_no_config(tmp_path):
    with pytest.raises(ValidationError):
        RunLedger(tmp_path / "empty.jsonl").config()
