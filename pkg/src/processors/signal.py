"""
Signal Processor.

Fits the OLS signal model on an encoded design and synthesizes outcomes whose
proportion of variance explained (PVE) is set by the caller.
"""

import logging
import math
from typing import List, Tuple

import numpy as np
from scipy.linalg import solve_triangular

from src.errors import SignalModelError
from src.types import DatasetMetadata, DesignMatrix, PveConfig, SignalFit, TabularDataset

logger = logging.getLogger(__name__)


def _drop_duplicate_columns(design: np.ndarray, names: Tuple[str, ...]) -> Tuple[List[int], List[str]]:
    kept: List[int] = []
    dropped: List[str] = []
    for j in range(design.shape[1]):
        if any(np.array_equal(design[:, j], design[:, i]) for i in kept):
            dropped.append(names[j] if j < len(names) else f"column_{j}")
        else:
            kept.append(j)
    return kept, dropped


def fit_signal_model(design: DesignMatrix) -> SignalFit:
    """
    Least-squares fit of the outcome on the design via QR.

    Exactly duplicated columns are dropped first; any remaining rank
    deficiency is an error. Moments use the population (1/n) convention.

    Args:
        design: Encoded outcome and intercept-first design.

    Returns:
        SignalFit with coefficients of the kept columns and fitted values.
    """
    X = np.asarray(design.design, dtype=float)
    y = np.asarray(design.outcome, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise SignalModelError("design rows must match outcome length")

    kept, dropped = _drop_duplicate_columns(X, design.encoded_names)
    X = X[:, kept]
    n, k = X.shape
    if n <= k:
        raise SignalModelError(f"need more rows than columns, got n={n}, k={k}")
    if np.linalg.matrix_rank(X) < k:
        raise SignalModelError("design is rank deficient beyond duplicated columns")
    if dropped:
        logger.info(f"Dropped duplicated design columns: {dropped}")

    q, r = np.linalg.qr(X)
    beta = solve_triangular(r, q.T @ y)
    fitted = X @ beta

    names = tuple(design.encoded_names[j] for j in kept) if design.encoded_names else ()
    return SignalFit(
        beta=beta,
        fitted=fitted,
        y_bar=float(y.mean()),
        sigma_y=float(y.std()),
        var_yhat=float(fitted.var()),
        used_rows=tuple(design.used_rows) if design.used_rows else tuple(range(n)),
        column_names=names,
        dropped_columns=tuple(dropped),
    )


def noise_scale_for_pve(var_yhat: float, pve: float) -> float:
    """sigma_eps = sqrt(Var(Y_hat) * (1 - PVE) / PVE) for PVE in (0, 1]."""
    if not 0.0 < pve <= 1.0:
        raise SignalModelError(f"pve must lie in (0, 1], got {pve}")
    if var_yhat < 0:
        raise SignalModelError(f"var_yhat must be non-negative, got {var_yhat}")
    return math.sqrt(var_yhat * (1.0 - pve) / pve)


def synthesize_outcome(fit: SignalFit, config: PveConfig) -> np.ndarray:
    """
    Draw a synthetic outcome Z with the configured PVE.

    PVE = 0 is pure noise around the observed mean and SD; PVE = 1 returns
    the fitted values; otherwise Gaussian noise is added to the fitted values.
    """
    n = len(fit.fitted)
    rng = np.random.default_rng(config.seed)
    if config.pve == 0.0:
        return rng.normal(fit.y_bar, fit.sigma_y, size=n)
    if config.pve == 1.0:
        return np.array(fit.fitted, dtype=float, copy=True)
    sigma = noise_scale_for_pve(fit.var_yhat, config.pve)
    return fit.fitted + rng.normal(0.0, sigma, size=n)


def synthesize_dataset(
    dataset: TabularDataset,
    metadata: DatasetMetadata,
    design: DesignMatrix,
    fit: SignalFit,
    config: PveConfig,
) -> Tuple[TabularDataset, DatasetMetadata]:
    """
    Replace the dependent column by a synthetic outcome.

    Rows dropped while encoding are dropped from the result as well. The
    provenance block lands in ``extra["synthetic"]``.
    """
    z = synthesize_outcome(fit, config)
    rows = list(fit.used_rows)
    dependent = design.dependent
    was_binary = not dataset.is_numeric(dependent)

    columns = []
    for name, values in dataset.columns:
        if name == dependent:
            columns.append((name, tuple(float(v) for v in z)))
        else:
            columns.append((name, tuple(values[i] for i in rows)))

    provenance = {
        "original_column": dependent,
        "pve": config.pve,
        "seed": config.seed,
        "variance_convention": fit.variance_convention,
        "rows_used": len(rows),
    }
    if was_binary:
        provenance["note"] = (
            "binary outcome fitted as a linear probability model; "
            "the synthetic outcome is continuous"
        )
    extra = dict(metadata.extra)
    extra["synthetic"] = provenance
    logger.info(f"Synthesized '{dependent}' for {dataset.name} at PVE={config.pve}")
    return dataset.replace(columns=tuple(columns)), metadata.replace(extra=extra)
