"""
Plan execution.

Conditions are perturbed, staged into workspaces and handed to the backend
by a bounded thread pool; finished records are appended to the ledger from
the coordinating thread only.
"""

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from config.settings import HarnessConfig
from src.errors import ValidationError
from src.types import (
    ConfidenceRecord,
    DatasetMetadata,
    ResponseRecord,
    RunCondition,
    RunPlan,
    RunStatus,
    TabularDataset,
)
from src.agent.backends import AgentBackend, execute_agent
from src.agent.parsing import parse_conclusion, parse_confidence
from src.agent.workspace import (
    CONCLUSION_FILE,
    has_conclusion,
    prepare_confidence_workspace,
    prepare_workspace,
    workspace_dir,
)
from src.processors.perturbation import PerturbationOptions, perturb_for_condition
from src.processors.tabular import load_dataset
from src.utils.ledger import RunLedger

logger = logging.getLogger(__name__)


@dataclass
class RunSummary:
    planned: int = 0
    skipped: int = 0
    executed: int = 0
    statuses: Counter = field(default_factory=Counter)

    def to_dict(self) -> Dict:
        return {
            "planned": self.planned,
            "skipped": self.skipped,
            "executed": self.executed,
            "statuses": {status.value: self.statuses.get(status, 0) for status in RunStatus},
        }


class PlanRunner:
    """
    Executes the conditions of one plan against one backend.

    Args:
        config: Harness configuration (datasets, prompts, retries).
        backend: Agent backend.
        ledger: Ledger records are appended to.
        workspace_root: Parent directory of the run workspaces.
    """

    def __init__(self, config: HarnessConfig, backend: AgentBackend, ledger: RunLedger, workspace_root: Path):
        self.config = config
        self.backend = backend
        self.ledger = ledger
        self.workspace_root = Path(workspace_root)
        self.retries = config.backend.retries
        self.options = PerturbationOptions(
            noise_features=config.noise_features,
            positive_statement=config.prompts.positive_statement,
            negative_statement=config.prompts.negative_statement,
            scrub_descriptions=config.scrub_descriptions_on_anonymize,
        )
        self._sources: Dict[str, Tuple[TabularDataset, DatasetMetadata]] = {}

    def _load_sources(self, conditions: List[RunCondition]) -> None:
        for dataset_id in sorted({c.dataset_id for c in conditions}):
            if dataset_id in self._sources:
                continue
            try:
                spec = self.config.dataset(dataset_id)
            except KeyError:
                raise ValidationError(f"plan references dataset '{dataset_id}' missing from the config")
            self._sources[dataset_id] = load_dataset(spec.csv_path, spec.metadata_path)

    def _execute(self, condition: RunCondition, resume: bool) -> ResponseRecord:
        workspace = workspace_dir(self.workspace_root, condition)
        if resume and has_conclusion(workspace):
            return parse_conclusion(workspace, condition)

        dataset, metadata = self._sources[condition.dataset_id]
        dataset, metadata, _ = perturb_for_condition(dataset, metadata, condition, self.options)
        workspace = prepare_workspace(
            dataset,
            metadata,
            condition,
            self.workspace_root,
            packages=self.config.prompts.packages,
            packages_note=self.config.prompts.packages_note,
            template=self.config.prompts.analysis,
            resume=resume,
        )

        wall_time = 0.0
        record: Optional[ResponseRecord] = None
        for attempt in range(self.retries + 1):
            if attempt:
                logger.warning(f"{condition.run_id}: retrying ({record.status.value}: {record.error})")
                (workspace / CONCLUSION_FILE).unlink(missing_ok=True)
            outcome = execute_agent(self.backend, workspace, condition, "analysis", attempt)
            wall_time += outcome["duration"]
            if outcome["status"] is RunStatus.OK:
                record = parse_conclusion(workspace, condition, wall_time, attempt + 1)
            else:
                record = ResponseRecord(
                    run_id=condition.run_id,
                    condition=condition,
                    score=None,
                    explanation="",
                    status=outcome["status"],
                    wall_time=wall_time,
                    workspace=str(workspace),
                    error=outcome["error"],
                    attempts=attempt + 1,
                )
            if record.status is RunStatus.OK:
                break
        return record

    def run(self, plan: RunPlan, jobs: int = 1, resume: bool = False, max_runs: Optional[int] = None) -> RunSummary:
        """
        Execute every pending condition of ``plan``.

        Args:
            plan: Plan to execute.
            jobs: Maximum concurrent agent executions.
            resume: Skip run ids the ledger already holds.
            max_runs: Execute at most this many pending conditions.

        Returns:
            RunSummary with per-status counts of the executed runs.
        """
        if jobs < 1:
            raise ValidationError(f"jobs must be >= 1, got {jobs}")
        self.ledger.open_for(plan, resume)
        done = self.ledger.completed_run_ids() if resume else set()
        pending = [c for c in plan.conditions if c.run_id not in done]
        if max_runs is not None:
            pending = pending[:max_runs]

        summary = RunSummary(planned=len(plan.conditions), skipped=len(done))
        logger.info(f"Executing {len(pending)} of {len(plan.conditions)} conditions with {jobs} job(s)")
        self._load_sources(pending)

        # Records are appended in plan order so the ledger does not depend on scheduling.
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for record in pool.map(lambda c: self._execute(c, resume), pending):
                self.ledger.append(record)
                summary.executed += 1
                summary.statuses[record.status] += 1

        logger.info(f"Run finished: {summary.to_dict()['statuses']}")
        return summary


def run_confidence_pass(
    ledger: RunLedger,
    backend: AgentBackend,
    config: HarnessConfig,
    jobs: int = 1,
) -> List[ConfidenceRecord]:
    """
    Ask the supervisor for a confidence on every ok run lacking one.

    Returns:
        The confidence records appended by this call.
    """
    responses = [r for r in ledger.responses() if r.status is RunStatus.OK]
    reviewed = {c.run_id for c in ledger.confidences()}
    pending = [r for r in responses if r.run_id not in reviewed]
    logger.info(f"Confidence pass over {len(pending)} runs ({len(reviewed)} already reviewed)")

    def review(record: ResponseRecord) -> ConfidenceRecord:
        workspace = prepare_confidence_workspace(Path(record.workspace), config.prompts.confidence)
        outcome = execute_agent(backend, workspace, record.condition, "confidence")
        if outcome["status"] is not RunStatus.OK:
            return ConfidenceRecord(
                run_id=record.run_id,
                confidence=None,
                explanation="",
                status=outcome["status"],
                wall_time=outcome["duration"],
                error=outcome["error"],
            )
        return parse_confidence(workspace, record.run_id, outcome["duration"])

    appended: List[ConfidenceRecord] = []
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for confidence in pool.map(review, pending):
            ledger.append(confidence)
            appended.append(confidence)
    return appended
