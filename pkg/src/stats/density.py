"""
Gaussian kernel density estimates and the overlap coefficient.
"""

import logging
from typing import Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.stats import gaussian_kde, norm

from config.settings import settings
from src.errors import StatsError
from src.types import OverlapResult, ScoreSample

logger = logging.getLogger(__name__)

SCORE_RANGE = (0.0, 100.0)

# Bandwidth for a constant sample: half a Likert point.
MIN_BANDWIDTH = 0.5


def scott_bandwidth(values: np.ndarray) -> float:
    """sigma_hat * n^(-1/5) with the n - 1 standard deviation."""
    if np.ptp(values) == 0.0:
        return MIN_BANDWIDTH
    return float(np.std(values, ddof=1)) * values.size ** (-0.2)


def kde_density(sample: ScoreSample, grid: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    Evaluate a Gaussian KDE with Scott's bandwidth on ``grid``.

    Args:
        sample: At least two scores.
        grid: Abscissae to evaluate at.

    Returns:
        Tuple of (density values, bandwidth).
    """
    values = sample.values
    if values.size < 2:
        raise StatsError(f"KDE needs at least 2 scores, got {values.size}")
    grid = np.asarray(grid, dtype=float)

    bandwidth = scott_bandwidth(values)
    if np.ptp(values) == 0.0:
        logger.debug(f"Constant sample at {values[0]}; using bandwidth {bandwidth}")
        return norm.pdf(grid, loc=values[0], scale=bandwidth), bandwidth

    # gaussian_kde scales its factor by the sample SD.
    kde = gaussian_kde(values, bw_method=bandwidth / np.std(values, ddof=1))
    return kde(grid), bandwidth


def score_grid(grid_points: int = settings.checks.grid_points) -> np.ndarray:
    return np.linspace(SCORE_RANGE[0], SCORE_RANGE[1], grid_points)


def overlap_coefficient(
    alt: ScoreSample,
    null: ScoreSample,
    grid_points: int = settings.checks.grid_points,
) -> OverlapResult:
    """
    OVL = integral over [0, 100] of min(f_alt, f_null), by the trapezoid rule.

    The reported value is clamped to [0, 1]; the raw integral is kept.
    """
    grid = score_grid(grid_points)
    density_alt, bandwidth_alt = kde_density(alt, grid)
    density_null, bandwidth_null = kde_density(null, grid)
    raw = float(trapezoid(np.minimum(density_alt, density_null), grid))
    return OverlapResult(
        ovl=min(max(raw, 0.0), 1.0),
        ovl_raw=raw,
        grid=grid,
        bandwidth_alt=bandwidth_alt,
        bandwidth_null=bandwidth_null,
        density_alt=density_alt,
        density_null=density_null,
    )
