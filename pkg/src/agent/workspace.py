"""
Per-run agent workspaces.

Each run gets ``<root>/<run_id>/`` holding the perturbed dataset, its
info.json, the AGENTS.md instructions and packages.txt. Agents are launched
with that directory as their working directory and must stay inside it.
"""

import logging
import shutil
from pathlib import Path
from typing import Optional, Sequence

from src.errors import TabularError, WorkspaceError
from src.types import DatasetMetadata, RunCondition, TabularDataset
from src.agent.prompts import render_analysis_prompt, render_confidence_prompt
from src.processors.tabular import METADATA_FILE, read_metadata, write_dataset
from src.utils.files import safe_name

logger = logging.getLogger(__name__)

INSTRUCTIONS_FILE = "AGENTS.md"
PACKAGES_FILE = "packages.txt"
CONCLUSION_FILE = "conclusion.txt"
CONFIDENCE_FILE = "confidence.txt"


def workspace_dir(root: Path, condition: RunCondition) -> Path:
    return Path(root) / safe_name(condition.run_id)


def has_conclusion(workspace: Path) -> bool:
    return (Path(workspace) / CONCLUSION_FILE).is_file()


def prepare_workspace(
    dataset: TabularDataset,
    metadata: DatasetMetadata,
    condition: RunCondition,
    root: Path,
    packages: Sequence[str] = (),
    packages_note: str = "",
    template: Optional[str] = None,
    resume: bool = False,
) -> Path:
    """
    Create the workspace of one run.

    Args:
        dataset: Perturbed dataset for the condition.
        metadata: Perturbed metadata for the condition.
        condition: Planned run.
        root: Parent directory of all workspaces.
        packages: Lines of packages.txt.
        packages_note: Extra sentence for the packages instruction.
        template: Analysis prompt override.
        resume: Reuse a completed workspace and rebuild an incomplete one.

    Returns:
        Path of the workspace directory.
    """
    workspace = workspace_dir(root, condition)
    if workspace.exists():
        if not resume:
            raise WorkspaceError(f"workspace {workspace} already exists (use --resume)")
        if has_conclusion(workspace):
            logger.info(f"Reusing completed workspace {workspace}")
            return workspace
        logger.info(f"Rebuilding incomplete workspace {workspace}")
        shutil.rmtree(workspace)

    prompt = render_analysis_prompt(
        metadata, dataset.name, str(workspace.resolve()), packages_note, template
    )
    try:
        workspace.mkdir(parents=True)
        write_dataset(dataset, metadata, workspace)
        (workspace / INSTRUCTIONS_FILE).write_text(prompt, encoding="utf-8")
        (workspace / PACKAGES_FILE).write_text(
            "".join(f"{package}\n" for package in packages), encoding="utf-8"
        )
    except (OSError, TabularError) as e:
        raise WorkspaceError(f"cannot prepare workspace {workspace}: {e}") from e

    logger.debug(f"Prepared workspace {workspace}")
    return workspace


def dataset_name_in(workspace: Path) -> str:
    """Stem of the single CSV file in ``workspace``."""
    csv_files = sorted(Path(workspace).glob("*.csv"))
    if len(csv_files) != 1:
        raise WorkspaceError(f"expected exactly one CSV in {workspace}, found {len(csv_files)}")
    return csv_files[0].stem


def prepare_confidence_workspace(workspace: Path, template: Optional[str] = None) -> Path:
    """Rewrite AGENTS.md of a finished run with the supervisor instructions."""
    workspace = Path(workspace)
    if not has_conclusion(workspace):
        raise WorkspaceError(f"{workspace} has no {CONCLUSION_FILE} to review")
    try:
        metadata = read_metadata(workspace / METADATA_FILE)
    except (OSError, TabularError) as e:
        raise WorkspaceError(f"cannot read metadata in {workspace}: {e}") from e

    prompt = render_confidence_prompt(
        metadata, dataset_name_in(workspace), str(workspace.resolve()), template
    )
    (workspace / INSTRUCTIONS_FILE).write_text(prompt, encoding="utf-8")
    stale = workspace / CONFIDENCE_FILE
    if stale.exists():
        stale.unlink()
    return workspace
