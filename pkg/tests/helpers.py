"""Builders shared by the test modules."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Dict, Iterable, List, Optional

import numpy as np
import pandas as pd

from config.settings import BackendSpec, DatasetSpec, HarnessConfig, MockArmModel, ThresholdConfig
from src.types import (
    Arm,
    PerturbationKind,
    ResponseRecord,
    RunCondition,
    RunPlan,
    RunStatus,
)
from src.utils.ledger import RunLedger
from src.utils.seeding import derive_seed


def write_source_dataset(directory: Path, name: str = "study", rows: int = 30, seed: int = 7) -> DatasetSpec:
    """CSV + info.json with a numeric outcome driven by ``hours`` and ``group``."""
    rng = np.random.default_rng(seed)
    hours = np.round(rng.uniform(0, 10, size=rows), 3)
    group = np.array(["a", "b", "c"])[np.arange(rows) % 3]
    score = np.round(2.0 * hours + (group == "b") * 3.0 + rng.normal(0, 1, size=rows), 3)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"{name}.csv"
    pd.DataFrame({"hours": hours, "group": group, "score": score}).to_csv(
        csv_path, index=False, lineterminator="\n"
    )
    info_path = directory / "info.json"
    info_path.write_text(json.dumps({
        "dataset_name": name,
        "question": "Do more study hours lead to a higher score?",
        "columns": [
            {"name": "hours", "description": "weekly study hours"},
            {"name": "group", "description": "tutoring group"},
            {"name": "score", "description": "exam score"},
        ],
    }), encoding="utf-8")
    return DatasetSpec(
        dataset_id=name,
        csv_path=str(csv_path),
        metadata_path=str(info_path),
        dependent="score",
        independents=["hours", "group"],
    )


def make_config(specs: List[DatasetSpec], **changes) -> HarnessConfig:
    values = dict(
        datasets=specs,
        replicates=4,
        backend=BackendSpec(retries=1),
        thresholds=ThresholdConfig(B=1000, B_small=200, grid_points=512),
        pve_replicates=2,
        noise_features=2,
    )
    values.update(changes)
    return HarnessConfig(**values)


def condition(
    dataset_id: str = "d",
    arm: Arm = Arm.ALTERNATIVE,
    replicate: int = 0,
    kind: PerturbationKind = PerturbationKind.ADD_NONSIGNAL_FEATURES,
    seed: Optional[int] = None,
) -> RunCondition:
    if seed is None:
        seed = derive_seed(0, dataset_id, kind.value, arm.value, replicate)
    return RunCondition(dataset_id=dataset_id, kind=kind, arm=arm, replicate=replicate, seed=seed)


def response(
    dataset_id: str,
    arm: Arm,
    replicate: int,
    score: Optional[int],
    kind: PerturbationKind = PerturbationKind.ADD_NONSIGNAL_FEATURES,
    status: RunStatus = RunStatus.OK,
) -> ResponseRecord:
    cond = condition(dataset_id, arm, replicate, kind)
    return ResponseRecord(
        run_id=cond.run_id,
        condition=cond,
        score=score if status is RunStatus.OK else None,
        explanation="stub" if status is RunStatus.OK else "",
        status=status,
    )


def arm_responses(
    dataset_id: str,
    arm: Arm,
    scores: Iterable[int],
    kinds: Iterable[PerturbationKind] = (PerturbationKind.ADD_NONSIGNAL_FEATURES,),
) -> List[ResponseRecord]:
    kinds = list(kinds)
    return [
        response(dataset_id, arm, i, int(s), kinds[i % len(kinds)])
        for i, s in enumerate(scores)
    ]


def normal_scores(mean: float, sd: float, n: int, seed: int) -> List[int]:
    rng = np.random.default_rng(seed)
    return [int(v) for v in np.clip(np.rint(rng.normal(mean, sd, size=n)), 0, 100)]


def write_ledger(path: Path, records: List[ResponseRecord], config: Optional[HarnessConfig] = None) -> Path:
    config = config or HarnessConfig(thresholds=ThresholdConfig(B=2000, B_small=200, grid_points=512))
    ledger = RunLedger(path)
    ledger.write_header(RunPlan(
        conditions=tuple(r.condition for r in records),
        config=config.model_dump(mode="json"),
    ))
    for record in records:
        ledger.append(record)
    return Path(path)


def mock_models(null=(25.0, 10.0), alt=(70.0, 10.0)) -> Dict[Arm, MockArmModel]:
    return {
        Arm.NULL: MockArmModel(mean=null[0], sd=null[1]),
        Arm.ALTERNATIVE: MockArmModel(mean=alt[0], sd=alt[1]),
    }
