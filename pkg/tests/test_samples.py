import pytest

from src.errors import InsufficientDataError, ValidationError
from src.processors.samples import (
    alt_sample,
    base_dataset,
    build_pair,
    failure_accounting,
    is_own_null,
    merge_records,
)
from src.types import Arm, PerturbationKind, RunStatus
from tests.helpers import arm_responses, response

KINDS = (PerturbationKind.ANONYMIZE_FEATURE_NAMES, PerturbationKind.ADD_NONSIGNAL_FEATURES)


def _records():
    return (
        arm_responses("d", Arm.ALTERNATIVE, [60, 70, 80, 90], KINDS)
        + arm_responses("d", Arm.NULL, [10, 20, 30])
        + [response("d", Arm.NULL, 7, None, status=RunStatus.TIMEOUT)]
    )


def test_alternative_sample_is_blocked_by_kind():
    sample = alt_sample(_records(), "d")

    assert [key for key, _ in sample.blocks] == ["add_nonsignal_features", "anonymize_feature_names"]
    assert sorted(sample.scores) == [60.0, 70.0, 80.0, 90.0]
    assert sorted(sample.values[list(sample.blocks[1][1])]) == [60.0, 80.0]


def test_failed_runs_are_counted_and_excluded():
    records = _records()
    pair = build_pair(records, "d")
    assert pair.null.size == 3

    failures = failure_accounting(records, "d")
    assert failures["null"]["counts"] == {"ok": 3, "agent_error": 0, "parse_error": 0, "timeout": 1}
    assert failures["null"]["excluded_run_ids"] == [response("d", Arm.NULL, 7, None).run_id]
    assert failures["alternative"]["excluded_run_ids"] == []


def test_provenance_lists_the_runs_behind_each_sample():
    records = _records()
    pair = build_pair(records, "d")

    alt_ids = pair.provenance["alternative"]["run_ids"]
    null_ids = pair.provenance["null"]["run_ids"]
    assert len(alt_ids) == pair.alt.size and len(null_ids) == pair.null.size
    assert sorted(null_ids) == sorted(r.run_id for r in records[4:7])
    assert response("d", Arm.NULL, 7, None).run_id not in null_ids
    by_id = {r.run_id: r.score for r in records}
    assert [by_id[i] for i in alt_ids] == list(pair.alt.scores)


def test_a_missing_arm_is_named():
    records = arm_responses("d", Arm.ALTERNATIVE, [60, 70])
    with pytest.raises(InsufficientDataError, match="null arm has 0 ok records"):
        build_pair(records, "d")


def test_null_sample_can_come_from_another_dataset():
    records = (
        arm_responses("soccer@pve=0.1", Arm.ALTERNATIVE, [55, 60, 65])
        + arm_responses("soccer", Arm.NULL, [20, 25, 30])
    )
    assert base_dataset("soccer@pve=0.1") == "soccer"

    pair = build_pair(records, "soccer@pve=0.1", null_source="{base_dataset}")
    assert sorted(pair.null.scores) == [20.0, 25.0, 30.0]
    assert pair.provenance["null"]["dataset_id"] == "soccer"
    assert pair.provenance["null"]["arm"] == "null"

    with pytest.raises(ValidationError):
        build_pair(records, "soccer@pve=0.1", null_source="{nope}")
    with pytest.raises(ValidationError):
        build_pair(records, "soccer", null_arm=Arm.ALTERNATIVE)


def test_alternative_arm_of_another_dataset_can_serve_as_null():
    records = (
        arm_responses("soccer@pve=0.1", Arm.ALTERNATIVE, [55, 60, 65])
        + arm_responses("soccer@pve=0", Arm.ALTERNATIVE, [40, 45, 50])
    )
    pair = build_pair(records, "soccer@pve=0.1", null_source="soccer@pve=0", null_arm=Arm.ALTERNATIVE)
    assert sorted(pair.null.scores) == [40.0, 45.0, 50.0]
    assert is_own_null("soccer@pve=0", "{base_dataset}@pve=0", Arm.ALTERNATIVE)
    assert not is_own_null("soccer@pve=0.1", "{base_dataset}@pve=0", Arm.ALTERNATIVE)
    assert not is_own_null("soccer", None, Arm.NULL)


def test_repeated_run_ids_across_ledgers_are_rejected():
    records = _records()
    with pytest.raises(ValidationError, match="more than one ledger"):
        merge_records([records, records[:1]])
    assert [r.run_id for r in merge_records([records[3:], records[:3]])] == sorted(r.run_id for r in records)
