"""
Variance decomposition, rank correlation and empirical exceedance.
"""

from typing import Optional, Sequence

import numpy as np
from scipy.stats import spearmanr

from src.errors import StatsError
from src.types import EtaSquaredResult, ScoreSample


def eta_squared(groups: Sequence[ScoreSample]) -> EtaSquaredResult:
    """
    Fraction of total variance attributable to group membership.

    SS_between = sum_k n_k (mean_k - mean)^2, SS_total = sum (y - mean)^2.
    """
    if len(groups) < 2:
        raise StatsError(f"eta squared needs at least 2 groups, got {len(groups)}")
    arrays = [g.values for g in groups]
    pooled = np.concatenate(arrays)
    if pooled.size < 3:
        raise StatsError("eta squared needs at least 3 scores in total")

    grand_mean = pooled.mean()
    means = [float(a.mean()) for a in arrays]
    ss_between = float(sum(a.size * (m - grand_mean) ** 2 for a, m in zip(arrays, means)))
    ss_total = float(np.sum((pooled - grand_mean) ** 2))
    if ss_total == 0.0:
        raise StatsError("degenerate: all scores identical")

    return EtaSquaredResult(
        eta_squared=min(ss_between / ss_total, 1.0),
        ss_between=ss_between,
        ss_total=ss_total,
        group_means=tuple(means),
        group_sizes=tuple(int(a.size) for a in arrays),
    )


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> Optional[float]:
    """
    Spearman correlation with average ranks for ties.

    Returns None when either vector has zero rank variance.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise StatsError("spearman_rho needs vectors of equal length")
    if x.size < 3:
        raise StatsError(f"spearman_rho needs at least 3 pairs, got {x.size}")
    if np.ptp(x) == 0.0 or np.ptp(y) == 0.0:
        return None
    rho = float(spearmanr(x, y)[0])
    return max(-1.0, min(1.0, rho))


def empirical_exceedance(index: int, sample: ScoreSample) -> float:
    """Share of the other runs whose score is strictly higher than run ``index``."""
    values = sample.values
    n = values.size
    if n < 2:
        raise StatsError("exceedance needs at least 2 scores")
    if not 0 <= index < n:
        raise StatsError(f"index {index} out of range for {n} scores")
    higher = int(np.count_nonzero(values > values[index]))
    return higher / (n - 1)
