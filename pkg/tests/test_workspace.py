import json

import pytest

from src.agent.prompts import CONFIDENCE_PROMPT
from src.agent.workspace import (
    CONCLUSION_FILE,
    CONFIDENCE_FILE,
    INSTRUCTIONS_FILE,
    PACKAGES_FILE,
    dataset_name_in,
    prepare_confidence_workspace,
    prepare_workspace,
    workspace_dir,
)
from src.errors import WorkspaceError
from src.types import DatasetMetadata, TabularDataset
from tests.helpers import condition

DATASET = TabularDataset.from_mapping("crime", {"x": [1.0, 2.0, 3.0], "y": [2.0, 4.0, 7.0]})
METADATA = DatasetMetadata(question="Does x raise y?", dataset_name="crime")


def _prepare(root, **kwargs):
    return prepare_workspace(DATASET, METADATA, condition("crime"), root, **kwargs)


def test_workspace_holds_dataset_metadata_and_instructions(tmp_path):
    workspace = _prepare(tmp_path, packages=["numpy", "pandas"], packages_note="Use them.")

    assert workspace == workspace_dir(tmp_path, condition("crime"))
    assert sorted(p.name for p in workspace.iterdir()) == [
        INSTRUCTIONS_FILE, "crime.csv", "info.json", PACKAGES_FILE,
    ]
    assert (workspace / PACKAGES_FILE).read_text() == "numpy\npandas\n"
    assert json.loads((workspace / "info.json").read_text())["question"] == "Does x raise y?"
    instructions = (workspace / INSTRUCTIONS_FILE).read_text()
    assert str(workspace.resolve()) in instructions
    assert "Use them." in instructions
    assert dataset_name_in(workspace) == "crime"


def test_existing_workspace_requires_resume(tmp_path):
    _prepare(tmp_path)
    with pytest.raises(WorkspaceError, match="--resume"):
        _prepare(tmp_path)


def test_resume_keeps_completed_and_rebuilds_incomplete_workspaces(tmp_path):
    workspace = _prepare(tmp_path)
    (workspace / "scratch.py").write_text("print(1)")
    _prepare(tmp_path, resume=True)
    assert not (workspace / "scratch.py").exists()

    (workspace / CONCLUSION_FILE).write_text('{"response": 60, "explanation": "x"}')
    (workspace / "scratch.py").write_text("print(1)")
    _prepare(tmp_path, resume=True)
    assert (workspace / "scratch.py").exists()
    assert (workspace / CONCLUSION_FILE).exists()


def test_confidence_workspace_swaps_the_instructions(tmp_path):
    workspace = _prepare(tmp_path)
    with pytest.raises(WorkspaceError):
        prepare_confidence_workspace(workspace)

    (workspace / CONCLUSION_FILE).write_text('{"response": 60, "explanation": "x"}')
    (workspace / CONFIDENCE_FILE).write_text("stale")
    prepare_confidence_workspace(workspace)

    instructions = (workspace / INSTRUCTIONS_FILE).read_text()
    assert instructions.startswith(CONFIDENCE_PROMPT.splitlines()[0])
    assert "`crime.csv'" in instructions
    assert not (workspace / CONFIDENCE_FILE).exists()
