"""
Agent backends.

CommandBackend launches an external agent CLI inside the workspace;
MockBackend writes synthetic conclusion / confidence files drawn from
per-arm Normal score models.
"""

import json
import logging
import os
import shlex
import subprocess
import time
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Dict, Literal, Optional, Sequence

import numpy as np

from config.settings import BackendSpec, MockArmModel
from src.errors import ValidationError
from src.types import Arm, RawOutcome, RunCondition, RunStatus
from src.agent.workspace import CONCLUSION_FILE, CONFIDENCE_FILE, dataset_name_in
from src.utils.seeding import derive_seed, rng_for

logger = logging.getLogger(__name__)

Task = Literal["analysis", "confidence"]

STDERR_TAIL = 500


class AgentBackend(ABC):
    """Something that can be pointed at a prepared workspace and run."""

    name: str = "backend"

    @abstractmethod
    def run(self, workspace: Path, condition: RunCondition, task: Task, seed: int) -> RawOutcome:
        """Execute one task in ``workspace``; ``seed`` is the attempt's seed."""


# =============================================================================
# COMMAND BACKEND
# =============================================================================

class CommandBackend(AgentBackend):
    name = "command"

    def __init__(self, command: str, timeout: float, env_allowlist: Sequence[str] = ()):
        if "{workspace}" not in command:
            raise ValidationError("command template must contain the {workspace} placeholder")
        self.command = command
        self.timeout = timeout
        self.env_allowlist = tuple(env_allowlist)

    def argv(self, workspace: Path) -> list:
        """Split the command template after substituting the placeholders."""
        text = self.command.replace("{workspace}", shlex.quote(str(workspace)))
        if "{dataset_name}" in text:
            text = text.replace("{dataset_name}", shlex.quote(dataset_name_in(workspace)))
        return shlex.split(text)

    def environment(self) -> Dict[str, str]:
        return {key: os.environ[key] for key in self.env_allowlist if key in os.environ}

    def run(self, workspace: Path, condition: RunCondition, task: Task, seed: int) -> RawOutcome:
        argv = self.argv(workspace)
        logger.debug(f"Running {argv} in {workspace}")
        start = time.monotonic()
        try:
            proc = subprocess.run(
                argv,
                cwd=workspace,
                env=self.environment(),
                timeout=self.timeout,
                capture_output=True,
                text=True,
            )
        except subprocess.TimeoutExpired:
            logger.warning(f"{condition.run_id}: agent timed out after {self.timeout}s")
            return RawOutcome(
                exit_status=None,
                duration=time.monotonic() - start,
                status=RunStatus.TIMEOUT,
                error=f"timed out after {self.timeout}s",
            )
        except OSError as e:
            logger.warning(f"{condition.run_id}: agent could not be started: {e}")
            return RawOutcome(
                exit_status=None,
                duration=time.monotonic() - start,
                status=RunStatus.AGENT_ERROR,
                error=f"could not start agent: {e}",
            )

        duration = time.monotonic() - start
        if proc.returncode != 0:
            tail = (proc.stderr or "")[-STDERR_TAIL:]
            logger.warning(f"{condition.run_id}: agent exited with {proc.returncode}")
            return RawOutcome(
                exit_status=proc.returncode,
                duration=duration,
                status=RunStatus.AGENT_ERROR,
                error=f"exit status {proc.returncode}: {tail}".strip(),
            )
        return RawOutcome(exit_status=0, duration=duration, status=RunStatus.OK, error=None)


# =============================================================================
# MOCK BACKEND
# =============================================================================

def _likert(rng: np.random.Generator, mean: float, sd: float) -> int:
    return int(np.clip(np.rint(rng.normal(mean, sd)), 0, 100))


class MockBackend(AgentBackend):
    """
    Deterministic stand-in for an agent.

    The score of a run is clamp(round(Normal(mean, sd)), 0, 100) with the
    model chosen by (arm, kind) and the draw seeded by the attempt seed.
    """

    name = "mock"

    def __init__(self, models: Dict[Arm, MockArmModel]):
        self.models = {arm: models.get(arm, MockArmModel()) for arm in Arm}

    def score_for(self, condition: RunCondition, seed: int) -> int:
        model = self.models[condition.arm].model_for(condition.kind)
        return _likert(rng_for(seed, "mock", "analysis"), model.mean, model.sd)

    def confidence_for(self, condition: RunCondition, seed: int) -> int:
        model = self.models[condition.arm]
        return _likert(rng_for(seed, "mock", "confidence"), model.confidence_mean, model.confidence_sd)

    def run(self, workspace: Path, condition: RunCondition, task: Task, seed: int) -> RawOutcome:
        start = time.monotonic()
        if task == "analysis":
            score = self.score_for(condition, seed)
            content = {
                "response": score,
                "explanation": f"Mock analysis of {condition.run_id} ({condition.kind.value}, {condition.arm.value} arm).",
            }
            target = Path(workspace) / CONCLUSION_FILE
        else:
            confidence = self.confidence_for(condition, seed)
            content = {
                "confidence": confidence,
                "explanation": f"Mock review of {condition.run_id}.",
            }
            target = Path(workspace) / CONFIDENCE_FILE
        target.write_text(json.dumps(content) + "\n", encoding="utf-8")
        return RawOutcome(exit_status=0, duration=time.monotonic() - start, status=RunStatus.OK, error=None)


def make_backend(spec: BackendSpec) -> AgentBackend:
    if spec.type == "command":
        return CommandBackend(spec.command, spec.timeout, spec.env_allowlist)
    return MockBackend(spec.mock)


def attempt_seed(seed: int, attempt: int) -> int:
    """First attempt uses the condition seed; retries derive a fresh one."""
    return seed if attempt == 0 else derive_seed(seed, "retry", attempt)


def execute_agent(
    backend: AgentBackend,
    workspace: Path,
    condition: RunCondition,
    task: Task = "analysis",
    attempt: int = 0,
) -> RawOutcome:
    """
    Run ``backend`` for one condition.

    Args:
        backend: Backend to launch.
        workspace: Prepared workspace.
        condition: Run being executed.
        task: "analysis" writes conclusion.txt, "confidence" writes confidence.txt.
        attempt: Zero-based attempt number.

    Returns:
        RawOutcome with exit status, duration and status.
    """
    seed = attempt_seed(condition.seed, attempt)
    logger.debug(f"{condition.run_id}: {task} attempt {attempt} on {backend.name} backend (seed {seed})")
    return backend.run(Path(workspace), condition, task, seed)
