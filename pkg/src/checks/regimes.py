"""
The Yes check, the Overlap check, and the four-regime classification.
"""

import logging
from typing import Tuple

import numpy as np

from config.settings import settings
from src.types import CheckReport, DistributionPair, Regime, ScoreSample, Variant
from src.stats.bootstrap import bootstrap_mean_test
from src.stats.density import overlap_coefficient

logger = logging.getLogger(__name__)

MIDPOINT = 50.0


def regime_for(p_value: float, ovl: float, alpha: float, tau: float) -> Regime:
    """Strict inequalities pass: p < alpha passes Yes, ovl < tau passes Overlap."""
    passed_yes = p_value < alpha
    passed_overlap = ovl < tau
    if passed_yes and passed_overlap:
        return Regime.PASSED_BOTH
    if passed_yes:
        return Regime.YES_ONLY
    if passed_overlap:
        return Regime.OVERLAP_ONLY
    return Regime.NEITHER


def precise_null_regime(
    p_value: float,
    ovl: float,
    null_mean: float,
    alpha: float,
    tau: float,
) -> Tuple[Regime, bool]:
    """
    Regime rule for a null built from a weak-signal synthesis.

    High overlap with a null already in the Yes range (mean above the
    midpoint) is labelled "Failed the Yes check".

    Returns:
        Tuple of (regime, whether the override fired).
    """
    if ovl >= tau and null_mean > MIDPOINT:
        return Regime.OVERLAP_ONLY, True
    return regime_for(p_value, ovl, alpha, tau), False


def describe(sample: ScoreSample) -> Tuple[float, float]:
    """Mean and (n - 1) standard deviation."""
    values = sample.values
    sd = float(np.std(values, ddof=1)) if values.size > 1 else 0.0
    return float(values.mean()), sd


def _run_checks(pair: DistributionPair, B: int, seed: int, grid_points: int):
    bootstrap = bootstrap_mean_test(pair.alt, mu0=MIDPOINT, B=B, seed=seed)
    overlap = overlap_coefficient(pair.alt, pair.null, grid_points=grid_points)
    return bootstrap, overlap


def classify(
    pair: DistributionPair,
    alpha: float = settings.checks.alpha,
    tau: float = settings.checks.tau,
    B: int = settings.checks.bootstrap_b,
    seed: int = 0,
    grid_points: int = settings.checks.grid_points,
) -> CheckReport:
    """
    Run the Yes check on the alternative sample and the Overlap check on the
    pair, and place the pair in one of the four regimes.
    """
    bootstrap, overlap = _run_checks(pair, B, seed, grid_points)
    alt_mean, alt_sd = describe(pair.alt)
    null_mean, null_sd = describe(pair.null)
    regime = regime_for(bootstrap.p_value, overlap.ovl, alpha, tau)
    logger.info(
        f"{pair.dataset_id}: p={bootstrap.p_value:.4f}, OVL={overlap.ovl:.3f} -> {regime.label}"
    )
    return CheckReport(
        bootstrap=bootstrap,
        overlap=overlap,
        alpha=alpha,
        tau=tau,
        regime=regime,
        alt_mean=alt_mean,
        alt_sd=alt_sd,
        null_mean=null_mean,
        null_sd=null_sd,
        variant=Variant.STANDARD,
        dataset_id=pair.dataset_id,
    )


def classify_precise_null(
    pair: DistributionPair,
    alpha: float = settings.checks.alpha,
    tau: float = settings.checks.tau,
    B: int = settings.checks.bootstrap_b,
    seed: int = 0,
    grid_points: int = settings.checks.grid_points,
) -> CheckReport:
    """classify() with the precise-null override applied."""
    bootstrap, overlap = _run_checks(pair, B, seed, grid_points)
    alt_mean, alt_sd = describe(pair.alt)
    null_mean, null_sd = describe(pair.null)
    regime, override = precise_null_regime(bootstrap.p_value, overlap.ovl, null_mean, alpha, tau)
    if override:
        logger.info(f"{pair.dataset_id}: null mean {null_mean:.2f} in the Yes range, overlap override applied")
    return CheckReport(
        bootstrap=bootstrap,
        overlap=overlap,
        alpha=alpha,
        tau=tau,
        regime=regime,
        alt_mean=alt_mean,
        alt_sd=alt_sd,
        null_mean=null_mean,
        null_sd=null_sd,
        variant=Variant.PRECISE_NULL,
        override_applied=override,
        dataset_id=pair.dataset_id,
    )


def classify_variant(pair: DistributionPair, variant: Variant, **kwargs) -> CheckReport:
    if variant is Variant.PRECISE_NULL:
        return classify_precise_null(pair, **kwargs)
    return classify(pair, **kwargs)
