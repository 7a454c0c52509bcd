"""
Convergence of the classification with the number of agent runs.

For each sample size the pools are subsampled without replacement many
times, the checks are recomputed, and agreement with the full-sample regime
is recorded for the combined regime and for each check on its own. The
per-check verdicts are read off the regime, so under the precise-null rule
an override counts against the Yes check, as its label says, and every full
disagreement shows up in at least one component.
"""

import logging
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from config.settings import settings
from src.errors import ValidationError
from src.types import (
    ConvergenceCurve,
    CurveComponent,
    DistributionPair,
    ScoreSample,
    SubsampleMode,
    Variant,
)
from src.checks.regimes import MIDPOINT, describe, precise_null_regime, regime_for
from src.stats.bootstrap import bootstrap_mean_test
from src.stats.density import overlap_coefficient
from src.utils.seeding import derive_seed

logger = logging.getLogger(__name__)

DEFAULT_SIZES = (2, 3, 4, 5, 6, 7, 8, 9, 10, 15, 20, 25, 50, 75, 100)


def default_repetitions(n: int) -> int:
    """1000 repetitions up to n = 10, 500 up to 25, 200 beyond."""
    if n <= 10:
        return 1000
    if n <= 25:
        return 500
    return 200


def _decide(alt: ScoreSample, null: ScoreSample, alpha, tau, B, seed, grid_points, variant):
    """Regime plus its Yes and Overlap verdicts."""
    p_value = bootstrap_mean_test(alt, mu0=MIDPOINT, B=B, seed=seed).p_value
    ovl = overlap_coefficient(alt, null, grid_points=grid_points).ovl
    if variant is Variant.PRECISE_NULL:
        regime, _ = precise_null_regime(p_value, ovl, describe(null)[0], alpha, tau)
    else:
        regime = regime_for(p_value, ovl, alpha, tau)
    return regime, regime.passes_yes, regime.passes_overlap


def convergence_analysis(
    pair: DistributionPair,
    sizes: Optional[Sequence[int]] = None,
    mode: SubsampleMode = SubsampleMode.RANDOM,
    seed: int = 0,
    alpha: float = settings.checks.alpha,
    tau: float = settings.checks.tau,
    B_small: int = settings.checks.convergence_b,
    grid_points: int = settings.checks.grid_points,
    repetitions: Callable[[int], int] = default_repetitions,
    variant: Variant = Variant.STANDARD,
) -> List[ConvergenceCurve]:
    """
    Agreement-with-reference curves for one distribution pair.

    Args:
        pair: Alternative and null samples.
        sizes: Subsample sizes; defaults to the standard grid clipped to the pool.
        mode: RANDOM subsamples both pools, ALT_ONLY keeps the full null pool.
        seed: Seed every repetition's streams are derived from.
        alpha: Yes check level.
        tau: Overlap threshold.
        B_small: Bootstrap resamples per repetition (and for the reference).
        grid_points: KDE grid resolution.
        repetitions: Repetition count as a function of n.
        variant: Regime rule to apply.

    Returns:
        Three curves: full regime, bootstrap-only, overlap-only.
    """
    alt_values, null_values = pair.alt.values, pair.null.values
    pool = alt_values.size if mode is SubsampleMode.ALT_ONLY else min(alt_values.size, null_values.size)
    if sizes is None:
        sizes = [n for n in DEFAULT_SIZES if n <= pool]
    sizes = sorted(set(int(n) for n in sizes))
    bad = [n for n in sizes if n < 2 or n > pool]
    if bad:
        raise ValidationError(f"subsample sizes outside [2, {pool}]: {bad}")

    ref_regime, ref_yes, ref_overlap = _decide(
        pair.alt, pair.null, alpha, tau, B_small, derive_seed(seed, "reference"), grid_points, variant
    )
    logger.info(f"{pair.dataset_id} ({mode.value}): reference regime {ref_regime.value}")

    agreement: Dict[CurveComponent, List[float]] = {c: [] for c in CurveComponent}
    counts: List[int] = []
    for n in sizes:
        full_alt = n == alt_values.size
        full_null = mode is SubsampleMode.ALT_ONLY or n == null_values.size
        reps = 1 if (full_alt and full_null) else repetitions(n)
        hits = {c: 0 for c in CurveComponent}
        for rep in range(reps):
            if full_alt and full_null:
                regime, yes, overlap = ref_regime, ref_yes, ref_overlap
            else:
                rng = np.random.default_rng(derive_seed(seed, mode.value, n, rep))
                alt = pair.alt.subset(rng.choice(alt_values.size, size=n, replace=False))
                if mode is SubsampleMode.ALT_ONLY:
                    null = pair.null
                else:
                    null = pair.null.subset(rng.choice(null_values.size, size=n, replace=False))
                regime, yes, overlap = _decide(
                    alt, null, alpha, tau, B_small,
                    derive_seed(seed, mode.value, n, rep, "bootstrap"), grid_points, variant,
                )
            hits[CurveComponent.FULL] += regime is ref_regime
            hits[CurveComponent.BOOTSTRAP_ONLY] += yes == ref_yes
            hits[CurveComponent.OVERLAP_ONLY] += overlap == ref_overlap
        for component in CurveComponent:
            agreement[component].append(hits[component] / reps)
        counts.append(reps)
        logger.debug(f"{pair.dataset_id} n={n}: full agreement {agreement[CurveComponent.FULL][-1]:.3f}")

    return [
        ConvergenceCurve(
            sizes=tuple(sizes),
            agreement=tuple(agreement[component]),
            mode=mode,
            component=component,
            repetitions=tuple(counts),
            reference_regime=ref_regime,
            dataset_id=pair.dataset_id,
        )
        for component in CurveComponent
    ]
