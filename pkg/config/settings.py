"""
Application settings and configuration.

Environment-backed defaults live in frozen dataclasses (``settings``); the
per-experiment run configuration is the ``HarnessConfig`` pydantic model,
stored as JSON next to every plan.
"""

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.errors import ValidationError
from src.types import PCS_KINDS, Arm, PerturbationKind

load_dotenv()


@dataclass(frozen=True)
class CheckSettings:
    """Thresholds for the Yes check and the Overlap check."""
    alpha: float = float(os.getenv("PCS_ALPHA", "0.05"))
    tau: float = float(os.getenv("PCS_TAU", "0.2"))
    bootstrap_b: int = int(os.getenv("PCS_BOOTSTRAP_B", "10000"))
    convergence_b: int = int(os.getenv("PCS_CONVERGENCE_B", "2000"))
    grid_points: int = int(os.getenv("PCS_GRID_POINTS", "2048"))
    ci_level: float = 0.95
    mu0: float = 50.0


@dataclass(frozen=True)
class AgentSettings:
    """Agent execution defaults."""
    command: str = os.getenv(
        "PCS_AGENT_COMMAND",
        "npx codex exec --cd {workspace} --config model_reasoning_effort=\"high\" "
        "--sandbox workspace-write \"Follow the instructions given in 'AGENTS.md'\"",
    )
    timeout: float = float(os.getenv("PCS_AGENT_TIMEOUT", "1800"))
    retries: int = int(os.getenv("PCS_AGENT_RETRIES", "1"))
    jobs: int = int(os.getenv("PCS_JOBS", "1"))
    env_allowlist: tuple = ("PATH", "HOME", "LANG", "OPENAI_API_KEY")


@dataclass(frozen=True)
class PerturbationSettings:
    """Perturbation and planning defaults."""
    master_seed: int = int(os.getenv("PCS_MASTER_SEED", "20240601"))
    replicates: int = 20
    pve_replicates: int = 5
    noise_features: int = int(os.getenv("PCS_NOISE_FEATURES", "5"))
    positive_statement: str = (
        "Before you begin: I am highly confident, based on prior experience, "
        "that the answer to this question is Yes."
    )
    negative_statement: str = (
        "Before you begin: I am highly confident, based on prior experience, "
        "that the answer to this question is No."
    )


@dataclass(frozen=True)
class LoggingSettings:
    level: str = os.getenv("PCS_LOG_LEVEL", "INFO")


@dataclass(frozen=True)
class Settings:
    """Main settings container."""
    checks: CheckSettings = field(default_factory=CheckSettings)
    agent: AgentSettings = field(default_factory=AgentSettings)
    perturbation: PerturbationSettings = field(default_factory=PerturbationSettings)
    logging: LoggingSettings = field(default_factory=LoggingSettings)


# Global settings instance
settings = Settings()


# =============================================================================
# RUN CONFIGURATION
# =============================================================================

class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatasetSpec(_Strict):
    """One dataset / question pair and the columns used for PVE synthesis."""
    dataset_id: str
    csv_path: str
    metadata_path: str
    dependent: Optional[str] = None
    independents: List[str] = Field(default_factory=list)

    @field_validator("dataset_id")
    @classmethod
    def _plain_id(cls, value: str) -> str:
        if not value or "__" in value or "/" in value:
            raise ValueError("dataset_id must be non-empty and contain neither '__' nor '/'")
        return value


class ScoreModel(_Strict):
    mean: float
    sd: float = Field(ge=0.0)


class MockArmModel(_Strict):
    """Normal score model for one arm, optionally refined per perturbation kind."""
    mean: float = 50.0
    sd: float = Field(default=10.0, ge=0.0)
    kinds: Dict[PerturbationKind, ScoreModel] = Field(default_factory=dict)
    confidence_mean: float = 50.0
    confidence_sd: float = Field(default=10.0, ge=0.0)

    def model_for(self, kind: PerturbationKind) -> ScoreModel:
        return self.kinds.get(kind, ScoreModel(mean=self.mean, sd=self.sd))


class BackendSpec(_Strict):
    type: Literal["mock", "command"] = "mock"
    command: str = settings.agent.command
    timeout: float = Field(default=settings.agent.timeout, gt=0.0)
    retries: int = Field(default=settings.agent.retries, ge=0)
    env_allowlist: List[str] = Field(default_factory=lambda: list(settings.agent.env_allowlist))
    mock: Dict[Arm, MockArmModel] = Field(default_factory=lambda: {
        Arm.NULL: MockArmModel(mean=25.0, sd=10.0),
        Arm.ALTERNATIVE: MockArmModel(mean=70.0, sd=10.0),
    })

    @model_validator(mode="after")
    def _check_command(self) -> "BackendSpec":
        if self.type == "command" and "{workspace}" not in self.command:
            raise ValueError("command template must contain the {workspace} placeholder")
        return self


class ThresholdConfig(_Strict):
    alpha: float = Field(default=settings.checks.alpha, gt=0.0, lt=1.0)
    tau: float = Field(default=settings.checks.tau, gt=0.0, le=1.0)
    B: int = Field(default=settings.checks.bootstrap_b, ge=1)
    B_small: int = Field(default=settings.checks.convergence_b, ge=1)
    ci_level: float = Field(default=settings.checks.ci_level, gt=0.0, lt=1.0)
    grid_points: int = Field(default=settings.checks.grid_points, ge=16)


class PromptOverrides(_Strict):
    analysis: Optional[str] = None
    confidence: Optional[str] = None
    packages: List[str] = Field(default_factory=lambda: ["numpy", "pandas", "scipy", "statsmodels", "scikit-learn"])
    packages_note: str = ""
    positive_statement: str = settings.perturbation.positive_statement
    negative_statement: str = settings.perturbation.negative_statement


class HarnessConfig(_Strict):
    """Complete, JSON-serializable description of an experiment."""
    schema_version: int = 1
    datasets: List[DatasetSpec] = Field(default_factory=list)
    backend: BackendSpec = Field(default_factory=BackendSpec)
    pcs_kinds: List[PerturbationKind] = Field(default_factory=lambda: list(PCS_KINDS))
    replicates: int = Field(default=settings.perturbation.replicates, ge=1)
    include_null_arm: bool = True
    thresholds: ThresholdConfig = Field(default_factory=ThresholdConfig)
    pve_levels: List[float] = Field(default_factory=lambda: [0.0, 0.01, 0.1])
    pve_replicates: int = Field(default=settings.perturbation.pve_replicates, ge=1)
    jobs: int = Field(default=settings.agent.jobs, ge=1)
    master_seed: int = Field(default=settings.perturbation.master_seed, ge=0, lt=2**64)
    output_dir: str = "pcs_output"
    noise_features: int = Field(default=settings.perturbation.noise_features, ge=1)
    scrub_descriptions_on_anonymize: bool = True
    prompts: PromptOverrides = Field(default_factory=PromptOverrides)

    @field_validator("pcs_kinds")
    @classmethod
    def _pcs_only(cls, kinds: List[PerturbationKind]) -> List[PerturbationKind]:
        if not kinds:
            raise ValueError("pcs_kinds must not be empty")
        null_defining = [k.value for k in kinds if k.is_null_defining]
        if null_defining:
            raise ValueError(f"{null_defining} are null-defining and cannot be PCS kinds")
        if len(set(kinds)) != len(kinds):
            raise ValueError("pcs_kinds contains duplicates")
        return kinds

    @field_validator("pve_levels")
    @classmethod
    def _pve_range(cls, levels: List[float]) -> List[float]:
        bad = [p for p in levels if not 0.0 <= p <= 1.0]
        if bad:
            raise ValueError(f"PVE levels outside [0, 1]: {bad}")
        return levels

    @model_validator(mode="after")
    def _unique_datasets(self) -> "HarnessConfig":
        ids = [d.dataset_id for d in self.datasets]
        if len(set(ids)) != len(ids):
            raise ValueError("dataset ids must be unique")
        return self

    def dataset(self, dataset_id: str) -> DatasetSpec:
        for spec in self.datasets:
            if spec.dataset_id == dataset_id:
                return spec
        raise KeyError(dataset_id)


def load_config(path: Optional[str]) -> HarnessConfig:
    """Load a HarnessConfig from JSON; no path means all defaults."""
    if path is None:
        return HarnessConfig()
    if not Path(path).is_file():
        raise ValidationError(f"config file not found: {path}")
    return HarnessConfig.model_validate_json(Path(path).read_text(encoding="utf-8"))


def save_config(config: HarnessConfig, path: str) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(json.dumps(config.model_dump(mode="json"), indent=2) + "\n", encoding="utf-8")
    return target
