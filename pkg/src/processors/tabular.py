"""
Tabular Processor.

Loads, validates, writes and one-hot encodes datasets together with their
question-bearing ``info.json`` metadata.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from src.errors import EncodingError, TabularError
from src.types import Cell, DatasetMetadata, DesignMatrix, TabularDataset

logger = logging.getLogger(__name__)

METADATA_FILE = "info.json"
MIN_COMPLETE_ROWS = 5


def _parse_number(token: str):
    try:
        value = float(token)
    except ValueError:
        return None
    return value if np.isfinite(value) else None


def _infer_column(raw: Sequence[str]) -> Tuple[Cell, ...]:
    """
    Type a raw column: numeric if every non-empty token parses, else categorical.

    Args:
        raw: Cell tokens as read from the CSV.

    Returns:
        Tuple of floats / strings, with None for empty cells.
    """
    present = [token for token in raw if token != ""]
    parsed = [_parse_number(token) for token in present]
    if all(value is not None for value in parsed):
        numbers = iter(parsed)
        return tuple(next(numbers) if token != "" else None for token in raw)
    return tuple(token if token != "" else None for token in raw)


def read_metadata(metadata_path: Path) -> DatasetMetadata:
    try:
        with open(metadata_path, encoding="utf-8") as f:
            info = json.load(f)
    except json.JSONDecodeError as e:
        raise TabularError(f"invalid metadata JSON in {metadata_path}: {e}") from e

    if not isinstance(info, dict) or not isinstance(info.get("question"), str):
        raise TabularError(f"metadata {metadata_path} must be an object with a 'question' string")

    columns = info.get("columns", [])
    if not isinstance(columns, list) or not all(isinstance(e, dict) and "name" in e for e in columns):
        raise TabularError(f"metadata {metadata_path}: 'columns' must be a list of objects with a 'name'")
    extra = info.get("extra", {})
    if not isinstance(extra, dict):
        raise TabularError(f"metadata {metadata_path}: 'extra' must be an object")

    descriptions = tuple(
        (str(entry["name"]), str(entry.get("description", ""))) for entry in columns
    )
    return DatasetMetadata(
        question=info["question"],
        dataset_name=str(info.get("dataset_name", "")),
        column_descriptions=descriptions,
        extra=dict(extra),
    )


def load_dataset(csv_path: str, metadata_path: str) -> Tuple[TabularDataset, DatasetMetadata]:
    """
    Load a CSV file and its info.json into a validated dataset / metadata pair.

    Args:
        csv_path: Path to the CSV (header row required).
        metadata_path: Path to the info.json file.

    Returns:
        Tuple of (TabularDataset, DatasetMetadata).
    """
    csv_file, metadata_file = Path(csv_path), Path(metadata_path)
    for path in (csv_file, metadata_file):
        if not path.is_file():
            raise TabularError(f"file not found: {path}")

    try:
        frame = pd.read_csv(
            csv_file, header=None, dtype=str, keep_default_na=False,
            na_filter=False, encoding="utf-8",
        )
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise TabularError(f"malformed CSV {csv_file}: {e}") from e

    frame = frame.fillna("")
    if frame.shape[0] < 2:
        raise TabularError(f"dataset {csv_file} is empty")

    header = [str(h) for h in frame.iloc[0].tolist()]
    body = frame.iloc[1:]
    columns = tuple(
        (name, _infer_column(body.iloc[:, i].tolist())) for i, name in enumerate(header)
    )
    dataset = TabularDataset(name=csv_file.stem, columns=columns)

    metadata = read_metadata(metadata_file)
    known = set(dataset.column_names)
    unknown = [name for name, _ in metadata.column_descriptions if name not in known]
    if unknown:
        raise TabularError(f"unknown column in metadata: {unknown}")
    if not metadata.dataset_name:
        metadata = metadata.replace(dataset_name=dataset.name)

    logger.info(f"Loaded dataset '{dataset.name}': {dataset.row_count} rows, {len(known)} columns")
    return dataset, metadata


def _format_cell(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return value


def metadata_to_info(metadata: DatasetMetadata) -> Dict:
    return {
        "dataset_name": metadata.dataset_name,
        "question": metadata.question,
        "columns": [{"name": n, "description": d} for n, d in metadata.column_descriptions],
        "extra": metadata.extra,
    }


def write_dataset(dataset: TabularDataset, metadata: DatasetMetadata, directory: str) -> List[Path]:
    """
    Write ``<name>.csv`` and ``info.json`` into ``directory``.

    Args:
        dataset: Dataset to write.
        metadata: Metadata to write.
        directory: Target directory (created if needed).

    Returns:
        Paths of the two written files.
    """
    if dataset.row_count < 1:
        raise TabularError("cannot write a dataset without rows")

    target = Path(directory)
    try:
        target.mkdir(parents=True, exist_ok=True)
        csv_path = target / f"{dataset.name}.csv"
        frame = pd.DataFrame(
            {i: [_format_cell(v) for v in values] for i, (_, values) in enumerate(dataset.columns)}
        )
        frame.columns = dataset.column_names
        frame.to_csv(csv_path, index=False, lineterminator="\n", encoding="utf-8")

        info_path = target / METADATA_FILE
        info_path.write_text(
            json.dumps(metadata_to_info(metadata), indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    except OSError as e:
        raise TabularError(f"failed to write dataset to {target}: {e}") from e

    return [csv_path, info_path]


# =============================================================================
# ONE-HOT ENCODING
# =============================================================================

def _encode_dependent(dataset: TabularDataset, dependent: str, rows: List[int]) -> np.ndarray:
    values = dataset.column(dependent)
    if dataset.is_numeric(dependent):
        return np.array([values[i] for i in rows], dtype=float)

    levels = sorted({values[i] for i in rows})
    if len(levels) != 2:
        raise EncodingError(
            f"dependent '{dependent}' is categorical with {len(levels)} levels; only binary can be encoded"
        )
    return np.array([0.0 if values[i] == levels[0] else 1.0 for i in rows])


def one_hot_encode(dataset: TabularDataset, dependent: str, independents: List[str]) -> DesignMatrix:
    """
    Build an intercept-first design matrix with drop-first categorical encoding.

    Rows with a missing value in any used column are dropped. Reference level
    of each categorical is its lexicographically smallest value.

    Args:
        dataset: Source dataset.
        dependent: Outcome column (numeric or binary categorical).
        independents: Predictor columns.

    Returns:
        DesignMatrix with intercept, encoded predictors and retained row indices.
    """
    if not independents:
        raise EncodingError("at least one independent column is required")
    for name in [dependent, *independents]:
        if name not in dataset.column_names:
            raise EncodingError(f"unknown column '{name}'")

    used = [dataset.column(name) for name in (dependent, *independents)]
    rows = [i for i in range(dataset.row_count) if all(values[i] is not None for values in used)]

    outcome = _encode_dependent(dataset, dependent, rows) if rows else np.empty(0)

    blocks: List[np.ndarray] = [np.ones(len(rows))]
    names: List[str] = ["intercept"]
    dropped: List[str] = []
    for name in independents:
        values = dataset.column(name)
        if dataset.is_numeric(name):
            column = np.array([values[i] for i in rows], dtype=float)
            if rows and np.ptp(column) == 0:
                dropped.append(name)
                continue
            blocks.append(column)
            names.append(name)
            continue
        levels = sorted({values[i] for i in rows})
        for level in levels[1:]:
            blocks.append(np.array([1.0 if values[i] == level else 0.0 for i in rows]))
            names.append(f"{name}={level}")

    needed = max(MIN_COMPLETE_ROWS, len(names) + 1)
    if len(rows) < needed:
        raise EncodingError(f"too few complete rows: {len(rows)} < {needed}")

    if dropped:
        logger.info(f"Dropped constant columns from design: {dropped}")

    return DesignMatrix(
        outcome=outcome,
        design=np.column_stack(blocks),
        encoded_names=tuple(names),
        used_rows=tuple(rows),
        dropped_columns=tuple(dropped),
        dependent=dependent,
    )
