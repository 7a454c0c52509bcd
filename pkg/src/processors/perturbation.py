"""
Perturbation Processor.

Implements the null-defining value shuffle and the five signal-preserving
PCS perturbations, and composes them for a planned run condition.
"""

import logging
from dataclasses import dataclass
from typing import Dict, Literal, Tuple

import numpy as np

from config.settings import settings
from src.errors import PerturbationError
from src.types import (
    Arm,
    DatasetMetadata,
    PerturbationKind,
    RunCondition,
    TabularDataset,
)
from src.utils.seeding import derive_seed

logger = logging.getLogger(__name__)

NOISE_LEVELS = ("level_a", "level_b", "level_c")


@dataclass(frozen=True)
class PerturbationOptions:
    """Knobs shared by every perturbation of a plan."""
    noise_features: int = settings.perturbation.noise_features
    positive_statement: str = settings.perturbation.positive_statement
    negative_statement: str = settings.perturbation.negative_statement
    scrub_descriptions: bool = True


def shuffle_feature_values(dataset: TabularDataset, seed: int) -> TabularDataset:
    """
    Permute every column independently, breaking all associations.

    Args:
        dataset: Source dataset.
        seed: Seed; each column gets its own child stream.

    Returns:
        Dataset with the same names and per-column value multisets.
    """
    children = np.random.SeedSequence(seed).spawn(len(dataset.columns))
    columns = []
    for child, (name, values) in zip(children, dataset.columns):
        order = np.random.default_rng(child).permutation(len(values))
        columns.append((name, tuple(values[i] for i in order)))
    return dataset.replace(columns=tuple(columns))


def _fresh_name(base: str, taken: set) -> str:
    name = base
    suffix = 1
    while name in taken:
        name = f"{base}_{suffix}"
        suffix += 1
    return name


def add_nonsignal_features(dataset: TabularDataset, count: int, seed: int) -> TabularDataset:
    """
    Append ``count`` columns generated independently of the data.

    Odd-numbered columns are standard normal, even-numbered columns draw
    uniformly from three categorical levels.

    Args:
        dataset: Source dataset (left bit-identical).
        count: Number of noise columns, at least 1.
        seed: Generator seed.

    Returns:
        Dataset with ``noise_1`` ... ``noise_k`` appended.
    """
    if count < 1:
        raise PerturbationError(f"noise feature count must be >= 1, got {count}")

    rng = np.random.default_rng(seed)
    taken = set(dataset.column_names)
    n = dataset.row_count
    appended = []
    for k in range(1, count + 1):
        name = _fresh_name(f"noise_{k}", taken)
        taken.add(name)
        if k % 2 == 1:
            values = tuple(float(v) for v in rng.standard_normal(n))
        else:
            values = tuple(NOISE_LEVELS[i] for i in rng.integers(0, len(NOISE_LEVELS), size=n))
        appended.append((name, values))
    return dataset.replace(columns=dataset.columns + tuple(appended))


def anonymize_feature_names(
    dataset: TabularDataset,
    metadata: DatasetMetadata,
    scrub_descriptions: bool = True,
) -> Tuple[TabularDataset, DatasetMetadata, Dict[str, str]]:
    """
    Rename column i to ``feature{i+1}`` in the data and the metadata.

    Per-column descriptions are removed when ``scrub_descriptions`` is set,
    otherwise they are kept under the generic names.

    Returns:
        Tuple of (dataset, metadata, original-to-generic name map).
    """
    name_map = {name: f"feature{i + 1}" for i, name in enumerate(dataset.column_names)}
    columns = tuple((name_map[name], values) for name, values in dataset.columns)
    if scrub_descriptions:
        descriptions: Tuple[Tuple[str, str], ...] = ()
    else:
        descriptions = tuple((name_map.get(n, n), d) for n, d in metadata.column_descriptions)
    return (
        dataset.replace(columns=columns),
        metadata.replace(column_descriptions=descriptions),
        name_map,
    )


def shuffle_feature_names(
    dataset: TabularDataset,
    metadata: DatasetMetadata,
    seed: int,
) -> Tuple[TabularDataset, DatasetMetadata]:
    """
    Apply a uniform random permutation to the CSV header only.

    Data values and metadata stay as they are, so names and descriptions no
    longer line up with the columns they describe.
    """
    names = dataset.column_names
    if len(names) < 2:
        raise PerturbationError("shuffling names needs at least 2 columns")
    order = np.random.default_rng(seed).permutation(len(names))
    columns = tuple((names[j], values) for j, (_, values) in zip(order, dataset.columns))
    return dataset.replace(columns=columns), metadata


def apply_leading_statement(
    metadata: DatasetMetadata,
    polarity: Literal["positive", "negative"],
    options: PerturbationOptions = PerturbationOptions(),
) -> DatasetMetadata:
    """Prepend the polarity's leading statement to the question."""
    if polarity == "positive":
        statement = options.positive_statement
    elif polarity == "negative":
        statement = options.negative_statement
    else:
        raise PerturbationError(f"unknown polarity '{polarity}'")
    return metadata.replace(question=f"{statement} {metadata.question}")


def apply_pcs_perturbation(
    dataset: TabularDataset,
    metadata: DatasetMetadata,
    kind: PerturbationKind,
    seed: int,
    options: PerturbationOptions = PerturbationOptions(),
) -> Tuple[TabularDataset, DatasetMetadata, Dict]:
    """
    Apply one signal-preserving perturbation.

    Returns:
        Tuple of (dataset, metadata, notes) where notes record choices made
        (e.g. the anonymization name map).
    """
    notes: Dict = {"kind": kind.value}
    if kind is PerturbationKind.IDENTITY:
        pass
    elif kind is PerturbationKind.ADD_NONSIGNAL_FEATURES:
        dataset = add_nonsignal_features(dataset, options.noise_features, seed)
        notes["noise_features"] = options.noise_features
    elif kind is PerturbationKind.ANONYMIZE_FEATURE_NAMES:
        dataset, metadata, name_map = anonymize_feature_names(
            dataset, metadata, options.scrub_descriptions
        )
        notes["name_map"] = name_map
        notes["descriptions_scrubbed"] = options.scrub_descriptions
    elif kind is PerturbationKind.SHUFFLE_FEATURE_NAMES:
        dataset, metadata = shuffle_feature_names(dataset, metadata, seed)
    elif kind is PerturbationKind.POSITIVE_LEADING_STATEMENT:
        metadata = apply_leading_statement(metadata, "positive", options)
    elif kind is PerturbationKind.NEGATIVE_LEADING_STATEMENT:
        metadata = apply_leading_statement(metadata, "negative", options)
    else:
        raise PerturbationError(f"{kind.value} is not a PCS perturbation")
    return dataset, metadata, notes


def perturb_for_condition(
    dataset: TabularDataset,
    metadata: DatasetMetadata,
    condition: RunCondition,
    options: PerturbationOptions = PerturbationOptions(),
) -> Tuple[TabularDataset, DatasetMetadata, Dict]:
    """
    Build the dataset an agent sees for ``condition``.

    The PCS perturbation is applied first; on the null arm the value shuffle
    follows it.
    """
    dataset, metadata, notes = apply_pcs_perturbation(
        dataset, metadata, condition.kind, derive_seed(condition.seed, "pcs"), options
    )
    if condition.arm is Arm.NULL:
        dataset = shuffle_feature_values(dataset, derive_seed(condition.seed, "null"))
        notes["null_defining"] = PerturbationKind.SHUFFLE_FEATURE_VALUES.value
    logger.debug(f"Perturbed {condition.run_id}: {notes}")
    return dataset, metadata, notes
