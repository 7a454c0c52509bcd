"""
Score samples rebuilt from ledger records.

Only ``ok`` records enter a sample; everything else is counted per arm and
listed by run id. Records are ordered by run id so a replayed ledger yields
exactly the same samples.
"""

import logging
from collections import Counter, defaultdict
from typing import Any, Dict, List, Optional, Sequence

from src.errors import InsufficientDataError, ValidationError
from src.types import (
    Arm,
    DistributionPair,
    ResponseRecord,
    RunStatus,
    ScoreSample,
)

logger = logging.getLogger(__name__)

PVE_MARKER = "@pve="
MIN_OK_PER_ARM = 2


def base_dataset(dataset_id: str) -> str:
    """``soccer@pve=0.1`` -> ``soccer``."""
    return dataset_id.split(PVE_MARKER, 1)[0]


def merge_records(batches: Sequence[Sequence[ResponseRecord]]) -> List[ResponseRecord]:
    """Concatenate records from several ledgers, rejecting repeated run ids."""
    merged: Dict[str, ResponseRecord] = {}
    for batch in batches:
        for record in batch:
            if record.run_id in merged:
                raise ValidationError(f"run id {record.run_id} appears in more than one ledger")
            merged[record.run_id] = record
    return [merged[run_id] for run_id in sorted(merged)]


def dataset_ids(records: Sequence[ResponseRecord]) -> List[str]:
    return sorted({r.condition.dataset_id for r in records})


def arm_records(records: Sequence[ResponseRecord], dataset_id: str, arm: Arm) -> List[ResponseRecord]:
    return sorted(
        (r for r in records if r.condition.dataset_id == dataset_id and r.condition.arm is arm),
        key=lambda r: r.run_id,
    )


def failure_accounting(records: Sequence[ResponseRecord], dataset_id: str) -> Dict[str, Dict]:
    """Per-arm status counts and the run ids left out of the samples."""
    accounting = {}
    for arm in Arm:
        members = arm_records(records, dataset_id, arm)
        counts = Counter(r.status for r in members)
        accounting[arm.value] = {
            "counts": {status.value: counts.get(status, 0) for status in RunStatus},
            "excluded_run_ids": [r.run_id for r in members if r.status is not RunStatus.OK],
        }
    return accounting


def _ok(records: Sequence[ResponseRecord], dataset_id: str, arm: Arm) -> List[ResponseRecord]:
    ok = [r for r in arm_records(records, dataset_id, arm) if r.status is RunStatus.OK]
    if len(ok) < MIN_OK_PER_ARM:
        raise InsufficientDataError(
            f"dataset '{dataset_id}': {arm.value} arm has {len(ok)} ok records, need at least {MIN_OK_PER_ARM}"
        )
    return ok


def _sample_records(records: Sequence[ResponseRecord], dataset_id: str, arm: Arm) -> List[ResponseRecord]:
    """Ok records of one arm in sample order; the alternative arm is grouped by kind."""
    ok = _ok(records, dataset_id, arm)
    if arm is Arm.ALTERNATIVE:
        return sorted(ok, key=lambda r: r.condition.kind.value)
    return ok


def alt_sample(records: Sequence[ResponseRecord], dataset_id: str) -> ScoreSample:
    """Alternative-arm scores, blocked by perturbation kind."""
    groups: Dict[str, List[float]] = defaultdict(list)
    for record in _sample_records(records, dataset_id, Arm.ALTERNATIVE):
        groups[record.condition.kind.value].append(float(record.score))
    return ScoreSample.from_groups(groups)


def arm_sample(records: Sequence[ResponseRecord], dataset_id: str, arm: Arm) -> ScoreSample:
    if arm is Arm.ALTERNATIVE:
        return alt_sample(records, dataset_id)
    return ScoreSample.of([float(r.score) for r in _sample_records(records, dataset_id, arm)])


def _source(records: Sequence[ResponseRecord], dataset_id: str, arm: Arm) -> Dict[str, Any]:
    return {
        "dataset_id": dataset_id,
        "arm": arm.value,
        "run_ids": [r.run_id for r in _sample_records(records, dataset_id, arm)],
    }


def resolve_null_id(dataset_id: str, null_source: Optional[str] = None) -> str:
    """Dataset id the null sample of ``dataset_id`` is drawn from."""
    if not null_source:
        return dataset_id
    try:
        return null_source.format(dataset_id=dataset_id, base_dataset=base_dataset(dataset_id))
    except (KeyError, IndexError, ValueError) as e:
        raise ValidationError(f"bad --null-source template '{null_source}': {e}") from e


def is_own_null(dataset_id: str, null_source: Optional[str], null_arm: Arm) -> bool:
    return null_arm is Arm.ALTERNATIVE and resolve_null_id(dataset_id, null_source) == dataset_id


def build_pair(
    records: Sequence[ResponseRecord],
    dataset_id: str,
    null_source: Optional[str] = None,
    null_arm: Arm = Arm.NULL,
) -> DistributionPair:
    """
    Assemble the alternative and null samples of one dataset.

    Args:
        records: Ledger records (any datasets).
        dataset_id: Dataset whose alternative arm is tested.
        null_source: Template naming the dataset the null sample comes from;
            may use ``{dataset_id}`` and ``{base_dataset}``. Defaults to the
            dataset itself.
        null_arm: Arm of the null-source dataset used as the null sample.

    Returns:
        DistributionPair with provenance entries.
    """
    null_id = resolve_null_id(dataset_id, null_source)
    if is_own_null(dataset_id, null_source, null_arm):
        raise ValidationError("the null sample cannot be the tested alternative arm itself")

    alt = alt_sample(records, dataset_id)
    null = arm_sample(records, null_id, null_arm)
    logger.debug(f"Pair for {dataset_id}: {alt.size} alternative, {null.size} null scores from {null_id}")
    return DistributionPair(
        alt=alt,
        null=null,
        dataset_id=dataset_id,
        provenance={
            "alternative": _source(records, dataset_id, Arm.ALTERNATIVE),
            "null": _source(records, null_id, null_arm),
        },
    )
