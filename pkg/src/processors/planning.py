"""
Run planning.

Expands datasets x PCS kinds x replicates x arms into run conditions with
seeds derived from the master seed and each condition's identity.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from src.errors import PerturbationError, ValidationError
from src.types import Arm, PerturbationKind, RunCondition, RunPlan
from src.utils.files import SCHEMA_VERSION, read_json, write_json
from src.utils.seeding import derive_seed

logger = logging.getLogger(__name__)


def condition_seed(master_seed: int, dataset_id: str, kind: PerturbationKind, arm: Arm, replicate: int) -> int:
    return derive_seed(master_seed, dataset_id, kind.value, arm.value, replicate)


def build_run_plan(
    dataset_id: str,
    pcs_kinds: Sequence[PerturbationKind],
    replicates: int,
    master_seed: int,
    include_null_arm: bool = True,
    config: Optional[Dict[str, Any]] = None,
) -> RunPlan:
    """
    Plan |pcs_kinds| x replicates runs for the alternative arm, and as many
    for the null arm when requested.

    Args:
        dataset_id: Dataset the plan targets.
        pcs_kinds: Signal-preserving perturbations to apply.
        replicates: Runs per kind and arm.
        master_seed: Seed every condition seed is derived from.
        include_null_arm: Whether to plan the shuffled-data arm.
        config: Snapshot stored with the plan.

    Returns:
        RunPlan with deterministic, order-independent seeds.
    """
    if replicates < 1:
        raise PerturbationError(f"replicates must be >= 1, got {replicates}")
    if not pcs_kinds:
        raise PerturbationError("at least one PCS kind is required")
    try:
        kinds = [PerturbationKind(k) for k in pcs_kinds]
    except ValueError as e:
        raise PerturbationError(f"invalid perturbation kind: {e}") from e
    if any(k.is_null_defining for k in kinds):
        raise PerturbationError("shuffle_feature_values is null-defining, not a PCS kind")
    if len(set(kinds)) != len(kinds):
        raise PerturbationError("duplicate PCS kinds")

    arms = [Arm.ALTERNATIVE, Arm.NULL] if include_null_arm else [Arm.ALTERNATIVE]
    conditions = tuple(
        RunCondition(
            dataset_id=dataset_id,
            kind=kind,
            arm=arm,
            replicate=replicate,
            seed=condition_seed(master_seed, dataset_id, kind, arm, replicate),
        )
        for arm in arms
        for kind in kinds
        for replicate in range(replicates)
    )
    return RunPlan(conditions=conditions, config=dict(config or {}))


def merge_plans(plans: List[RunPlan], config: Dict[str, Any]) -> RunPlan:
    conditions = tuple(c for plan in plans for c in plan.conditions)
    run_ids = [c.run_id for c in conditions]
    if len(set(run_ids)) != len(run_ids):
        raise ValidationError("merged plan contains duplicate run ids")
    return RunPlan(conditions=conditions, config=config)


def save_plan(plan: RunPlan, path: Path) -> Path:
    data = {
        "schema_version": SCHEMA_VERSION,
        "config": plan.config,
        "conditions": [c.to_dict() for c in plan.conditions],
    }
    write_json(path, data)
    logger.info(f"Wrote plan with {len(plan.conditions)} conditions to {path}")
    return Path(path)


def load_plan(path: Path) -> RunPlan:
    if not Path(path).is_file():
        raise ValidationError(f"plan file not found: {path}")
    data = read_json(path)
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ValidationError(f"unsupported plan schema version {data.get('schema_version')}")
    conditions = tuple(RunCondition.from_dict(c) for c in data["conditions"])
    master_seed = data.get("config", {}).get("master_seed")
    if master_seed is not None:
        for c in conditions:
            if c.seed != condition_seed(master_seed, c.dataset_id, c.kind, c.arm, c.replicate):
                raise ValidationError(f"seed of {c.run_id} does not match the master seed")
    return RunPlan(conditions=conditions, config=data.get("config", {}))
