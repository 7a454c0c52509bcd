import json
from pathlib import Path

import pytest

from src.agent.backends import AgentBackend, MockBackend, make_backend
from src.agent.runner import PlanRunner, run_confidence_pass
from src.agent.workspace import CONCLUSION_FILE
from src.errors import ValidationError
from src.processors.planning import build_run_plan
from src.types import RawOutcome, RunStatus
from src.utils.ledger import RunLedger


def _plan(config):
    return build_run_plan(
        "study", config.pcs_kinds, config.replicates, config.master_seed,
        config=config.model_dump(mode="json"),
    )


def _runner(config, out, backend=None):
    ledger = RunLedger(out / "ledger.jsonl")
    return PlanRunner(config, backend or make_backend(config.backend), ledger, out / "runs"), ledger


def _comparable(records):
    return [
        {k: v for k, v in r.to_dict().items() if k not in ("wall_time", "workspace")}
        for r in records
    ]


class FlakyBackend(AgentBackend):
    """Fails the first attempt of every run, then behaves like the mock agent."""

    name = "flaky"

    def __init__(self, models):
        self.mock = MockBackend(models)

    def run(self, workspace, condition, task, seed) -> RawOutcome:
        if seed == condition.seed:
            return RawOutcome(exit_status=1, duration=0.0, status=RunStatus.AGENT_ERROR, error="boom")
        return self.mock.run(workspace, condition, task, seed)


def test_plan_execution_fills_the_ledger(tmp_path, harness_config):
    runner, ledger = _runner(harness_config, tmp_path)
    summary = runner.run(_plan(harness_config))

    assert summary.planned == summary.executed == 40
    assert summary.statuses[RunStatus.OK] == 40
    records = ledger.responses()
    assert [r.run_id for r in records] == [c.run_id for c in _plan(harness_config).conditions]
    for record in records:
        assert (Path(record.workspace) / CONCLUSION_FILE).is_file()
        assert 0 <= record.score <= 100


def test_parallel_execution_matches_serial(tmp_path, harness_config):
    serial, serial_ledger = _runner(harness_config, tmp_path / "serial")
    parallel, parallel_ledger = _runner(harness_config, tmp_path / "parallel")
    serial.run(_plan(harness_config), jobs=1)
    parallel.run(_plan(harness_config), jobs=4)

    assert _comparable(serial_ledger.responses()) == _comparable(parallel_ledger.responses())


def test_interrupted_run_resumes_to_the_same_ledger(tmp_path, harness_config):
    full, full_ledger = _runner(harness_config, tmp_path / "full")
    full.run(_plan(harness_config))

    first, ledger = _runner(harness_config, tmp_path / "resumed")
    assert first.run(_plan(harness_config), max_runs=13).executed == 13
    second, _ = _runner(harness_config, tmp_path / "resumed")
    summary = second.run(_plan(harness_config), resume=True)

    assert summary.skipped == 13
    assert summary.executed == 27
    assert _comparable(ledger.responses()) == _comparable(full_ledger.responses())


def test_resume_after_a_torn_append_keeps_every_record(tmp_path, harness_config):
    full, full_ledger = _runner(harness_config, tmp_path / "full")
    full.run(_plan(harness_config))

    first, ledger = _runner(harness_config, tmp_path / "resumed")
    first.run(_plan(harness_config), max_runs=13)
    with open(ledger.path, "a", encoding="utf-8") as f:
        f.write('{"record_type":"response","run_id":"study__tor')
    second, _ = _runner(harness_config, tmp_path / "resumed")
    summary = second.run(_plan(harness_config), resume=True)

    assert summary.executed == 27
    assert len(ledger.responses()) == 40
    assert _comparable(ledger.responses()) == _comparable(full_ledger.responses())


def test_rerun_without_resume_is_refused(tmp_path, harness_config):
    runner, _ = _runner(harness_config, tmp_path)
    runner.run(_plan(harness_config), max_runs=2)
    with pytest.raises(ValidationError, match="--resume"):
        runner.run(_plan(harness_config))


def test_failed_attempts_are_retried_with_a_fresh_seed(tmp_path, harness_config):
    backend = FlakyBackend(harness_config.backend.mock)
    runner, ledger = _runner(harness_config, tmp_path, backend)
    runner.run(_plan(harness_config), max_runs=3)

    records = ledger.responses()
    assert [r.status for r in records] == [RunStatus.OK] * 3
    assert [r.attempts for r in records] == [2, 2, 2]


def test_exhausted_retries_are_recorded(tmp_path, harness_config):
    config = harness_config.model_copy(update={
        "backend": harness_config.backend.model_copy(update={"retries": 0}),
    })
    runner, ledger = _runner(config, tmp_path, FlakyBackend(config.backend.mock))
    runner.run(_plan(config), max_runs=2)

    records = ledger.responses()
    assert [r.status for r in records] == [RunStatus.AGENT_ERROR] * 2
    assert records[0].error == "boom"
    assert records[0].score is None


def test_unknown_dataset_in_plan(tmp_path, harness_config):
    runner, _ = _runner(harness_config, tmp_path)
    plan = build_run_plan("elsewhere", harness_config.pcs_kinds, 1, 0)
    with pytest.raises(ValidationError, match="elsewhere"):
        runner.run(plan)


def test_confidence_pass_covers_each_ok_run_once(tmp_path, harness_config):
    runner, ledger = _runner(harness_config, tmp_path)
    runner.run(_plan(harness_config), max_runs=6)

    backend = make_backend(harness_config.backend)
    appended = run_confidence_pass(ledger, backend, harness_config)
    assert sorted(c.run_id for c in appended) == sorted(r.run_id for r in ledger.responses())
    assert all(c.status is RunStatus.OK for c in appended)
    assert run_confidence_pass(ledger, backend, harness_config) == []

    header = json.loads(ledger.path.read_text().splitlines()[0])
    assert header["record_type"] == "header"
