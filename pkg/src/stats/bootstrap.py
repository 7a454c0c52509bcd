"""
One-sided bootstrap tests of a mean against the Likert midpoint.

p-values use the (b + 1) / (B + 1) correction, so they are never zero.
Resampling is sequential and chunked; a given seed always produces the same
bootstrap means.
"""

import logging
from typing import List

import numpy as np

from config.settings import settings
from src.errors import StatsError
from src.types import BootstrapResult, ScoreSample

logger = logging.getLogger(__name__)

# Upper bound on resample cells materialized at once.
CHUNK_CELLS = 1_000_000


def _chunks(B: int, n: int):
    rows = max(1, CHUNK_CELLS // max(n, 1))
    start = 0
    while start < B:
        size = min(rows, B - start)
        yield size
        start += size


def pooled_resample_means(values: np.ndarray, B: int, rng: np.random.Generator) -> np.ndarray:
    """Means of B with-replacement resamples of size n from ``values``."""
    n = values.size
    means = np.empty(B)
    offset = 0
    for size in _chunks(B, n):
        idx = rng.integers(0, n, size=(size, n))
        means[offset:offset + size] = values[idx].mean(axis=1)
        offset += size
    return means


def blocked_resample_means(blocks: List[np.ndarray], B: int, rng: np.random.Generator) -> np.ndarray:
    """Means of B resamples drawn within each block, block sizes preserved."""
    n = sum(block.size for block in blocks)
    means = np.empty(B)
    offset = 0
    for size in _chunks(B, n):
        totals = np.zeros(size)
        for block in blocks:
            idx = rng.integers(0, block.size, size=(size, block.size))
            totals += block[idx].sum(axis=1)
        means[offset:offset + size] = totals / n
        offset += size
    return means


def _summarize(
    means: np.ndarray,
    mu0: float,
    ci_level: float,
    blocked: bool,
    keep_means: bool,
) -> BootstrapResult:
    B = means.size
    at_or_below = int(np.count_nonzero(means <= mu0))
    tail = (1.0 - ci_level) / 2.0
    ci_low, ci_high = np.quantile(means, [tail, 1.0 - tail])
    return BootstrapResult(
        p_value=(at_or_below + 1) / (B + 1),
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        B=B,
        mu0=mu0,
        blocked=blocked,
        ci_level=ci_level,
        exceedances=at_or_below,
        bootstrap_means=means if keep_means else None,
    )


def _check_args(sample: ScoreSample, B: int, ci_level: float) -> None:
    if sample.size < 2:
        raise StatsError(f"bootstrap needs at least 2 scores, got {sample.size}")
    if B < 1:
        raise StatsError(f"B must be >= 1, got {B}")
    if not 0.0 < ci_level < 1.0:
        raise StatsError(f"ci_level must lie in (0, 1), got {ci_level}")


def bootstrap_mean_test(
    sample: ScoreSample,
    mu0: float = settings.checks.mu0,
    B: int = settings.checks.bootstrap_b,
    seed: int = 0,
    ci_level: float = settings.checks.ci_level,
    keep_means: bool = False,
) -> BootstrapResult:
    """
    Test H0: mu = mu0 against H1: mu > mu0 by pooled resampling.

    Args:
        sample: Scores (blocks, if any, are ignored).
        mu0: Null mean, the scale midpoint by default.
        B: Number of bootstrap resamples.
        seed: Generator seed.
        ci_level: Level of the percentile confidence interval.
        keep_means: Retain the bootstrap means on the result.

    Returns:
        BootstrapResult with p = (#{means <= mu0} + 1) / (B + 1).
    """
    _check_args(sample, B, ci_level)
    rng = np.random.default_rng(seed)
    means = pooled_resample_means(sample.values, B, rng)
    return _summarize(means, mu0, ci_level, blocked=False, keep_means=keep_means)


def blocked_bootstrap_mean_test(
    sample: ScoreSample,
    mu0: float = settings.checks.mu0,
    B: int = settings.checks.bootstrap_b,
    seed: int = 0,
    ci_level: float = settings.checks.ci_level,
    keep_means: bool = False,
) -> BootstrapResult:
    """Same test as bootstrap_mean_test, resampling within each block."""
    _check_args(sample, B, ci_level)
    if sample.blocks is None:
        raise StatsError("blocked bootstrap requires blocks")
    blocks = sample.block_arrays()
    if any(block.size < 1 for block in blocks):
        raise StatsError("every block needs at least one score")
    rng = np.random.default_rng(seed)
    means = blocked_resample_means(blocks, B, rng)
    return _summarize(means, mu0, ci_level, blocked=True, keep_means=keep_means)
