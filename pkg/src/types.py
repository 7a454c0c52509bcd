"""
Shared type definitions for the PCS sanity-check harness.

Contains the domain objects that flow between the tabular, perturbation,
agent, statistics and check stages.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple, TypedDict, Union

import numpy as np

from src.errors import SignalModelError, StatsError, TabularError

# A cell is numeric (float), categorical (str) or missing (None).
Cell = Union[float, str, None]


# =============================================================================
# ENUMERATIONS
# =============================================================================

class PerturbationKind(str, Enum):
    """Perturbations applied to a dataset / metadata pair before an agent run."""
    SHUFFLE_FEATURE_VALUES = "shuffle_feature_values"
    ADD_NONSIGNAL_FEATURES = "add_nonsignal_features"
    ANONYMIZE_FEATURE_NAMES = "anonymize_feature_names"
    SHUFFLE_FEATURE_NAMES = "shuffle_feature_names"
    POSITIVE_LEADING_STATEMENT = "positive_leading_statement"
    NEGATIVE_LEADING_STATEMENT = "negative_leading_statement"
    IDENTITY = "identity"

    @property
    def is_null_defining(self) -> bool:
        return self is PerturbationKind.SHUFFLE_FEATURE_VALUES


# The five signal-preserving perturbations used by default.
PCS_KINDS: Tuple[PerturbationKind, ...] = (
    PerturbationKind.ADD_NONSIGNAL_FEATURES,
    PerturbationKind.ANONYMIZE_FEATURE_NAMES,
    PerturbationKind.SHUFFLE_FEATURE_NAMES,
    PerturbationKind.POSITIVE_LEADING_STATEMENT,
    PerturbationKind.NEGATIVE_LEADING_STATEMENT,
)


class Arm(str, Enum):
    NULL = "null"
    ALTERNATIVE = "alternative"


class RunStatus(str, Enum):
    OK = "ok"
    AGENT_ERROR = "agent_error"
    PARSE_ERROR = "parse_error"
    TIMEOUT = "timeout"


class Regime(str, Enum):
    """The four outcomes of combining the Yes check and the Overlap check."""
    PASSED_BOTH = "PassedBoth"
    YES_ONLY = "YesOnly"
    OVERLAP_ONLY = "OverlapOnly"
    NEITHER = "Neither"

    @property
    def label(self) -> str:
        return _REGIME_LABELS[self]

    @property
    def passes_yes(self) -> bool:
        return self in (Regime.PASSED_BOTH, Regime.YES_ONLY)

    @property
    def passes_overlap(self) -> bool:
        return self in (Regime.PASSED_BOTH, Regime.OVERLAP_ONLY)


_REGIME_LABELS = {
    Regime.PASSED_BOTH: "Passed both checks",
    Regime.YES_ONLY: "Failed the Overlap check",
    Regime.OVERLAP_ONLY: "Failed the Yes check",
    Regime.NEITHER: "Failed both checks",
}


class Variant(str, Enum):
    STANDARD = "standard"
    PRECISE_NULL = "precise_null"


class SubsampleMode(str, Enum):
    RANDOM = "random"
    ALT_ONLY = "alt_only"


class CurveComponent(str, Enum):
    FULL = "full"
    BOOTSTRAP_ONLY = "bootstrap_only"
    OVERLAP_ONLY = "overlap_only"


# =============================================================================
# TABULAR
# =============================================================================

@dataclass(frozen=True)
class TabularDataset:
    """
    Named, ordered columns of cells.

    Numeric columns hold floats (or None), categorical columns hold strings
    (or None). Construction validates shape and name uniqueness.
    """
    name: str
    columns: Tuple[Tuple[str, Tuple[Cell, ...]], ...]

    def __post_init__(self):
        names = [name for name, _ in self.columns]
        if len(names) < 2:
            raise TabularError(f"dataset '{self.name}' needs at least 2 columns, got {len(names)}")
        duplicates = sorted({n for n in names if names.count(n) > 1})
        if duplicates:
            raise TabularError(f"duplicate column names: {duplicates}")
        lengths = {len(values) for _, values in self.columns}
        if len(lengths) != 1:
            raise TabularError(f"columns of '{self.name}' have unequal lengths {sorted(lengths)}")
        if lengths.pop() < 1:
            raise TabularError(f"dataset '{self.name}' is empty")

    @classmethod
    def from_mapping(cls, name: str, columns: Mapping[str, List[Cell]]) -> "TabularDataset":
        return cls(name=name, columns=tuple((k, tuple(v)) for k, v in columns.items()))

    @property
    def column_names(self) -> List[str]:
        return [name for name, _ in self.columns]

    @property
    def row_count(self) -> int:
        return len(self.columns[0][1])

    def column(self, name: str) -> Tuple[Cell, ...]:
        for column_name, values in self.columns:
            if column_name == name:
                return values
        raise TabularError(f"unknown column '{name}'")

    def is_numeric(self, name: str) -> bool:
        return all(v is None or isinstance(v, float) for v in self.column(name))

    def replace(self, **changes: Any) -> "TabularDataset":
        return TabularDataset(name=changes.get("name", self.name),
                              columns=changes.get("columns", self.columns))


@dataclass(frozen=True)
class DatasetMetadata:
    """Question-bearing metadata stored as info.json next to the CSV."""
    question: str
    dataset_name: str
    column_descriptions: Tuple[Tuple[str, str], ...] = ()
    extra: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.question.strip():
            raise TabularError("metadata question is empty")

    def replace(self, **changes: Any) -> "DatasetMetadata":
        values = {
            "question": self.question,
            "dataset_name": self.dataset_name,
            "column_descriptions": self.column_descriptions,
            "extra": self.extra,
        }
        values.update(changes)
        return DatasetMetadata(**values)


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Outcome vector and intercept-first design matrix built from a dataset."""
    outcome: np.ndarray
    design: np.ndarray
    encoded_names: Tuple[str, ...]
    used_rows: Tuple[int, ...] = ()
    dropped_columns: Tuple[str, ...] = ()
    dependent: str = ""


# =============================================================================
# SIGNAL
# =============================================================================

@dataclass(frozen=True, eq=False)
class SignalFit:
    """OLS fit of the outcome on the design, with population-convention moments."""
    beta: np.ndarray
    fitted: np.ndarray
    y_bar: float
    sigma_y: float
    var_yhat: float
    used_rows: Tuple[int, ...]
    column_names: Tuple[str, ...] = ()
    dropped_columns: Tuple[str, ...] = ()
    variance_convention: str = "population"


@dataclass(frozen=True)
class PveConfig:
    pve: float
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.pve <= 1.0:
            raise SignalModelError(f"pve must lie in [0, 1], got {self.pve}")


# =============================================================================
# PLANNING / AGENT
# =============================================================================

@dataclass(frozen=True)
class RunCondition:
    """One planned agent execution."""
    dataset_id: str
    kind: PerturbationKind
    arm: Arm
    replicate: int
    seed: int

    @property
    def run_id(self) -> str:
        return f"{self.dataset_id}__{self.kind.value}__{self.arm.value}__r{self.replicate:03d}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "run_id": self.run_id,
            "dataset_id": self.dataset_id,
            "kind": self.kind.value,
            "arm": self.arm.value,
            "replicate": self.replicate,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunCondition":
        return cls(
            dataset_id=data["dataset_id"],
            kind=PerturbationKind(data["kind"]),
            arm=Arm(data["arm"]),
            replicate=int(data["replicate"]),
            seed=int(data["seed"]),
        )


@dataclass(frozen=True)
class RunPlan:
    conditions: Tuple[RunCondition, ...]
    config: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ResponseRecord:
    """Parsed outcome of one analysis run."""
    run_id: str
    condition: RunCondition
    score: Optional[int]
    explanation: str
    status: RunStatus
    wall_time: float = 0.0
    workspace: str = ""
    raw_content: Optional[str] = None
    error: Optional[str] = None
    attempts: int = 1

    def to_dict(self) -> Dict[str, Any]:
        return {
            "record_type": "response",
            "run_id": self.run_id,
            "condition": self.condition.to_dict(),
            "status": self.status.value,
            "score": self.score,
            "explanation": self.explanation,
            "wall_time": self.wall_time,
            "workspace": self.workspace,
            "raw_content": self.raw_content,
            "error": self.error,
            "attempts": self.attempts,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ResponseRecord":
        return cls(
            run_id=data["run_id"],
            condition=RunCondition.from_dict(data["condition"]),
            score=data.get("score"),
            explanation=data.get("explanation", ""),
            status=RunStatus(data["status"]),
            wall_time=float(data.get("wall_time", 0.0)),
            workspace=data.get("workspace", ""),
            raw_content=data.get("raw_content"),
            error=data.get("error"),
            attempts=int(data.get("attempts", 1)),
        )


@dataclass(frozen=True)
class ConfidenceRecord:
    """Parsed outcome of one supervisor confidence pass."""
    run_id: str
    confidence: Optional[int]
    explanation: str
    status: RunStatus
    wall_time: float = 0.0
    raw_content: Optional[str] = None
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "record_type": "confidence",
            "run_id": self.run_id,
            "status": self.status.value,
            "confidence": self.confidence,
            "explanation": self.explanation,
            "wall_time": self.wall_time,
            "raw_content": self.raw_content,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ConfidenceRecord":
        return cls(
            run_id=data["run_id"],
            confidence=data.get("confidence"),
            explanation=data.get("explanation", ""),
            status=RunStatus(data["status"]),
            wall_time=float(data.get("wall_time", 0.0)),
            raw_content=data.get("raw_content"),
            error=data.get("error"),
        )


class RawOutcome(TypedDict):
    """Result of launching an agent backend in a workspace."""
    exit_status: Optional[int]
    duration: float
    status: RunStatus
    error: Optional[str]


# =============================================================================
# STATISTICS
# =============================================================================

@dataclass(frozen=True)
class ScoreSample:
    """Likert scores in [0, 100], optionally partitioned into blocks."""
    scores: Tuple[float, ...]
    blocks: Optional[Tuple[Tuple[str, Tuple[int, ...]], ...]] = None

    def __post_init__(self):
        if not self.scores:
            raise StatsError("score sample is empty")
        if any(not 0.0 <= s <= 100.0 for s in self.scores):
            raise StatsError("scores must lie in [0, 100]")
        if self.blocks is not None:
            indices = sorted(i for _, members in self.blocks for i in members)
            if indices != list(range(len(self.scores))):
                raise StatsError("blocks must partition the sample indices")

    @classmethod
    def of(cls, scores, blocks: Optional[Mapping[str, List[int]]] = None) -> "ScoreSample":
        block_tuple = None
        if blocks is not None:
            block_tuple = tuple((str(k), tuple(int(i) for i in v)) for k, v in blocks.items())
        return cls(scores=tuple(float(s) for s in scores), blocks=block_tuple)

    @classmethod
    def from_groups(cls, groups: Mapping[str, List[float]]) -> "ScoreSample":
        scores: List[float] = []
        blocks: Dict[str, List[int]] = {}
        for key, values in groups.items():
            blocks[key] = list(range(len(scores), len(scores) + len(values)))
            scores.extend(values)
        return cls.of(scores, blocks)

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.scores, dtype=float)

    @property
    def size(self) -> int:
        return len(self.scores)

    def block_arrays(self) -> List[np.ndarray]:
        if self.blocks is None:
            raise StatsError("sample has no blocks")
        values = self.values
        return [values[list(members)] for _, members in self.blocks]

    def subset(self, indices) -> "ScoreSample":
        values = self.values
        return ScoreSample.of(values[np.asarray(indices, dtype=int)])


@dataclass(frozen=True, eq=False)
class BootstrapResult:
    p_value: float
    ci_low: float
    ci_high: float
    B: int
    mu0: float
    blocked: bool
    ci_level: float = 0.95
    exceedances: int = 0
    bootstrap_means: Optional[np.ndarray] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p_value": self.p_value,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "ci_level": self.ci_level,
            "B": self.B,
            "mu0": self.mu0,
            "blocked": self.blocked,
            "means_at_or_below_mu0": self.exceedances,
        }


@dataclass(frozen=True, eq=False)
class OverlapResult:
    ovl: float
    ovl_raw: float
    grid: np.ndarray
    bandwidth_alt: float
    bandwidth_null: float
    density_alt: np.ndarray
    density_null: np.ndarray

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ovl": self.ovl,
            "ovl_raw": self.ovl_raw,
            "grid_points": int(self.grid.size),
            "bandwidth_alt": self.bandwidth_alt,
            "bandwidth_null": self.bandwidth_null,
        }


@dataclass(frozen=True)
class EtaSquaredResult:
    eta_squared: float
    ss_between: float
    ss_total: float
    group_means: Tuple[float, ...]
    group_sizes: Tuple[int, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eta_squared": self.eta_squared,
            "ss_between": self.ss_between,
            "ss_total": self.ss_total,
            "group_means": list(self.group_means),
            "group_sizes": list(self.group_sizes),
        }


# =============================================================================
# CHECKS
# =============================================================================

@dataclass(frozen=True)
class DistributionPair:
    alt: ScoreSample
    null: ScoreSample
    dataset_id: str
    # Per role ("alternative", "null"): source dataset, arm and the ledger run ids used.
    provenance: Mapping[str, Any] = field(default_factory=dict)


@dataclass(frozen=True, eq=False)
class CheckReport:
    bootstrap: BootstrapResult
    overlap: OverlapResult
    alpha: float
    tau: float
    regime: Regime
    alt_mean: float
    alt_sd: float
    null_mean: float
    null_sd: float
    variant: Variant = Variant.STANDARD
    override_applied: bool = False
    dataset_id: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset_id": self.dataset_id,
            "variant": self.variant.value,
            "regime": self.regime.value,
            "regime_label": self.regime.label,
            "override_applied": self.override_applied,
            "alpha": self.alpha,
            "tau": self.tau,
            "alt": {"mean": self.alt_mean, "sd": self.alt_sd},
            "null": {"mean": self.null_mean, "sd": self.null_sd},
            "bootstrap": self.bootstrap.to_dict(),
            "overlap": self.overlap.to_dict(),
        }


@dataclass(frozen=True)
class ConvergenceCurve:
    sizes: Tuple[int, ...]
    agreement: Tuple[float, ...]
    mode: SubsampleMode
    component: CurveComponent
    repetitions: Tuple[int, ...]
    reference_regime: Regime
    dataset_id: str = ""

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dataset_id": self.dataset_id,
            "mode": self.mode.value,
            "component": self.component.value,
            "reference_regime": self.reference_regime.value,
            "sizes": list(self.sizes),
            "agreement": list(self.agreement),
            "repetitions": list(self.repetitions),
        }


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    rejection_rate_blocked: float
    rejection_rate_unblocked: float
    p_values_blocked: np.ndarray
    p_values_unblocked: np.ndarray
    R: int
    alpha: float
    B: int = 0

    def qq_rows(self) -> List[Tuple[float, float, float]]:
        """(uniform quantile, sorted blocked p, sorted unblocked p) for QQ plots."""
        uniform = (np.arange(1, self.R + 1) - 0.5) / self.R
        blocked = np.sort(self.p_values_blocked)
        unblocked = np.sort(self.p_values_unblocked)
        return [(float(u), float(b), float(ub)) for u, b, ub in zip(uniform, blocked, unblocked)]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "R": self.R,
            "B": self.B,
            "alpha": self.alpha,
            "rejection_rate_blocked": self.rejection_rate_blocked,
            "rejection_rate_unblocked": self.rejection_rate_unblocked,
            "delta_unblocked_minus_blocked": self.rejection_rate_unblocked - self.rejection_rate_blocked,
        }
