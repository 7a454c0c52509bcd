"""
Calibration of supervisor-reported confidence against empirical exceedance.
"""

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from src.errors import InsufficientDataError
from src.types import Arm, ConfidenceRecord, ResponseRecord, RunStatus, ScoreSample
from src.stats.association import empirical_exceedance, spearman_rho

logger = logging.getLogger(__name__)

MIN_PAIRS = 3


@dataclass(frozen=True)
class ConfidencePair:
    run_id: str
    dataset_id: str
    arm: Arm
    stated: float
    exceedance: float


@dataclass(frozen=True)
class ConfidenceCalibration:
    pairs: Tuple[ConfidencePair, ...]
    rho: Dict[Arm, Optional[float]]
    unjoined: Tuple[str, ...] = ()
    notes: Dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> Dict:
        return {
            "rho": {arm.value: value for arm, value in self.rho.items()},
            "defined": {arm.value: value is not None for arm, value in self.rho.items()},
            "pairs_per_arm": {
                arm.value: sum(p.arm is arm for p in self.pairs) for arm in self.rho
            },
            "unjoined_run_ids": list(self.unjoined),
            "notes": self.notes,
        }


def _exceedance_by_run(responses: Sequence[ResponseRecord]) -> Dict[str, float]:
    groups: Dict[Tuple[str, Arm], List[ResponseRecord]] = defaultdict(list)
    for record in responses:
        if record.status is RunStatus.OK:
            groups[(record.condition.dataset_id, record.condition.arm)].append(record)

    result: Dict[str, float] = {}
    for members in groups.values():
        if len(members) < 2:
            continue
        members = sorted(members, key=lambda r: r.run_id)
        sample = ScoreSample.of([r.score for r in members])
        for i, record in enumerate(members):
            result[record.run_id] = empirical_exceedance(i, sample)
    return result


def confidence_calibration(
    responses: Sequence[ResponseRecord],
    confidences: Sequence[ConfidenceRecord],
) -> ConfidenceCalibration:
    """
    Join confidences to responses by run id and correlate stated confidence
    with the exceedance observed among peer runs of the same dataset and arm.

    Args:
        responses: Analysis records.
        confidences: Supervisor records.

    Returns:
        ConfidenceCalibration with per-arm Spearman rho (None when undefined).
    """
    by_run = {r.run_id: r for r in responses}
    exceedance = _exceedance_by_run(responses)

    pairs: List[ConfidencePair] = []
    unjoined: List[str] = []
    for record in sorted(confidences, key=lambda c: c.run_id):
        response = by_run.get(record.run_id)
        if record.status is not RunStatus.OK or response is None or record.run_id not in exceedance:
            unjoined.append(record.run_id)
            continue
        pairs.append(ConfidencePair(
            run_id=record.run_id,
            dataset_id=response.condition.dataset_id,
            arm=response.condition.arm,
            stated=record.confidence / 100.0,
            exceedance=exceedance[record.run_id],
        ))
    if unjoined:
        logger.warning(f"{len(unjoined)} confidence records could not be joined and were excluded")
    if not pairs:
        raise InsufficientDataError("no confidence record could be joined to a response")

    rho: Dict[Arm, Optional[float]] = {}
    notes: Dict[str, str] = {}
    for arm in Arm:
        arm_pairs = [p for p in pairs if p.arm is arm]
        if len(arm_pairs) < MIN_PAIRS:
            rho[arm] = None
            notes[arm.value] = f"only {len(arm_pairs)} joined pairs"
            continue
        rho[arm] = spearman_rho([p.stated for p in arm_pairs], [p.exceedance for p in arm_pairs])
        if rho[arm] is None:
            notes[arm.value] = "zero rank variance"

    return ConfidenceCalibration(pairs=tuple(pairs), rho=rho, unjoined=tuple(unjoined), notes=notes)
