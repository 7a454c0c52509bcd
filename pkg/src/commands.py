"""
Command bodies behind the CLI.

Each command takes already-parsed options, does its work through the
processors / agent / checks packages, writes its files under ``out`` and
returns a small JSON-serializable summary.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from config.settings import DatasetSpec, HarnessConfig, save_config
from src.errors import HarnessFault, StatsError, ValidationError
from src.types import (
    Arm,
    CheckReport,
    PveConfig,
    ResponseRecord,
    RunPlan,
    ScoreSample,
    SubsampleMode,
    Variant,
)
from src.agent.backends import make_backend
from src.agent.runner import PlanRunner, run_confidence_pass
from src.checks.calibration import calibration_simulation
from src.checks.confidence import confidence_calibration
from src.checks.convergence import convergence_analysis
from src.checks.regimes import classify_variant
from src.processors.output import (
    generate_report,
    write_analysis_plots,
    write_calibration,
    write_confidence,
    write_convergence,
    write_summary,
)
from src.processors.planning import build_run_plan, load_plan, merge_plans, save_plan
from src.processors.samples import (
    alt_sample,
    build_pair,
    dataset_ids,
    failure_accounting,
    is_own_null,
    merge_records,
)
from src.processors.signal import fit_signal_model, synthesize_dataset
from src.processors.tabular import load_dataset, one_hot_encode, write_dataset
from src.stats.association import eta_squared
from src.utils.files import safe_name, write_json
from src.utils.ledger import RunLedger
from src.utils.seeding import derive_seed

logger = logging.getLogger(__name__)

PLAN_FILE = "plan.json"
CONFIG_FILE = "config.json"
LEDGER_FILE = "ledger.jsonl"
RUNS_DIR = "runs"


# =============================================================================
# HELPERS
# =============================================================================

def _plan_for(config: HarnessConfig, replicates: Optional[int] = None, include_null_arm: Optional[bool] = None) -> RunPlan:
    snapshot = config.model_dump(mode="json")
    plans = [
        build_run_plan(
            spec.dataset_id,
            config.pcs_kinds,
            replicates or config.replicates,
            config.master_seed,
            config.include_null_arm if include_null_arm is None else include_null_arm,
            snapshot,
        )
        for spec in config.datasets
    ]
    return merge_plans(plans, snapshot)


def _check_dataset_files(config: HarnessConfig) -> None:
    missing = [
        f"{spec.dataset_id}: {path}"
        for spec in config.datasets
        for path in (spec.csv_path, spec.metadata_path)
        if not Path(path).is_file()
    ]
    if missing:
        raise ValidationError("dataset files not found: " + "; ".join(missing))


def _ledger_records(ledger_paths: Sequence[Path]) -> List[ResponseRecord]:
    if not ledger_paths:
        raise ValidationError("at least one ledger is required")
    batches = []
    for path in ledger_paths:
        if not Path(path).is_file():
            raise ValidationError(f"ledger not found: {path}")
        batches.append(RunLedger(path).responses())
    return merge_records(batches)


def _ledger_config(ledger_path: Path) -> HarnessConfig:
    return HarnessConfig.model_validate(RunLedger(ledger_path).config())


def _selected(records: Sequence[ResponseRecord], datasets: Optional[Sequence[str]]) -> List[str]:
    available = [
        d for d in dataset_ids(records)
        if any(r.condition.arm is Arm.ALTERNATIVE and r.condition.dataset_id == d for r in records)
    ]
    if not datasets:
        return available
    unknown = sorted(set(datasets) - set(dataset_ids(records)))
    if unknown:
        raise ValidationError(f"datasets not in the ledger: {unknown}")
    return list(datasets)



def _paired(
    records: Sequence[ResponseRecord],
    datasets: Optional[Sequence[str]],
    null_source: Optional[str],
    null_arm: Arm,
) -> List[str]:
    """Datasets to analyze against a null; the null source itself is left out unless named."""
    selected = _selected(records, datasets)
    if datasets:
        return selected
    skipped = [d for d in selected if is_own_null(d, null_source, null_arm)]
    if skipped:
        logger.info(f"Skipping {skipped}: they are their own null source")
    return [d for d in selected if d not in skipped]


def _eta_by_kind(sample: ScoreSample) -> Dict[str, Any]:
    """η² of alternative scores grouped by perturbation kind, or why it is undefined."""
    groups = [ScoreSample.of(block) for block in sample.block_arrays()]
    try:
        result = eta_squared(groups)
    except StatsError as e:
        return {"defined": False, "reason": str(e)}
    return {"defined": True, "groups": [key for key, _ in sample.blocks], **result.to_dict()}


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_plan(config: HarnessConfig, out: Path) -> Dict[str, Any]:
    """Write the run plan and its config snapshot."""
    if not config.datasets:
        raise ValidationError("config lists no datasets")
    _check_dataset_files(config)
    plan = _plan_for(config)
    out = Path(out)
    save_plan(plan, out / PLAN_FILE)
    save_config(config, str(out / CONFIG_FILE))
    return {"plan": str(out / PLAN_FILE), "conditions": len(plan.conditions)}


def cmd_run(
    plan_path: Path,
    out: Path,
    jobs: Optional[int] = None,
    resume: bool = False,
    max_runs: Optional[int] = None,
    config_override: Optional[HarnessConfig] = None,
) -> Dict[str, Any]:
    """
    Execute a plan, appending to ``<out>/ledger.jsonl``.

    ``config_override`` replaces the backend of the plan's config snapshot;
    everything that shapes the perturbations stays as planned.
    """
    plan = load_plan(plan_path)
    config = HarnessConfig.model_validate(plan.config)
    if config_override is not None:
        config = config.model_copy(update={"backend": config_override.backend})
    if max_runs is not None and max_runs < 0:
        raise ValidationError(f"--max-runs must be >= 0, got {max_runs}")

    out = Path(out)
    ledger = RunLedger(out / LEDGER_FILE)
    runner = PlanRunner(config, make_backend(config.backend), ledger, out / RUNS_DIR)
    summary = runner.run(plan, jobs=jobs or config.jobs, resume=resume, max_runs=max_runs)
    return {"ledger": str(ledger.path), **summary.to_dict()}


def cmd_analyze(
    ledger_paths: Sequence[Path],
    out: Path,
    alpha: Optional[float] = None,
    tau: Optional[float] = None,
    variant: Variant = Variant.STANDARD,
    null_source: Optional[str] = None,
    null_arm: Arm = Arm.NULL,
    seed: Optional[int] = None,
    B: Optional[int] = None,
    datasets: Optional[Sequence[str]] = None,
) -> Dict[str, Any]:
    """
    Classify every dataset of the ledger(s) and write reports.

    Args:
        ledger_paths: Ledgers to read; the first supplies the defaults.
        out: Output directory.
        alpha: Yes check level.
        tau: Overlap threshold.
        variant: Standard or precise-null regime rule.
        null_source: Template naming the dataset the null sample comes from.
        null_arm: Arm of the null-source dataset used as null sample.
        seed: Master seed override.
        B: Bootstrap resamples.
        datasets: Restrict to these dataset ids.

    Returns:
        Dict with the regime of each dataset.
    """
    config = _ledger_config(ledger_paths[0])
    thresholds = config.thresholds
    alpha = thresholds.alpha if alpha is None else alpha
    tau = thresholds.tau if tau is None else tau
    B = thresholds.B if B is None else B
    master_seed = config.master_seed if seed is None else seed
    if not 0.0 < alpha < 1.0 or not 0.0 < tau <= 1.0:
        raise ValidationError(f"alpha must lie in (0, 1) and tau in (0, 1], got {alpha}, {tau}")

    records = _ledger_records(ledger_paths)
    reports: List[CheckReport] = []
    out = Path(out)
    for dataset_id in _paired(records, datasets, null_source, null_arm):
        pair = build_pair(records, dataset_id, null_source, null_arm)
        report = classify_variant(
            pair,
            variant,
            alpha=alpha,
            tau=tau,
            B=B,
            seed=derive_seed(master_seed, dataset_id, "analyze"),
            grid_points=thresholds.grid_points,
        )
        generate_report(
            report,
            out,
            eta=_eta_by_kind(pair.alt),
            failures=failure_accounting(records, dataset_id),
            provenance=pair.provenance,
        )
        reports.append(report)

    if not reports:
        raise StatsError("ledger holds no alternative-arm records to analyze")
    write_summary(reports, out)
    write_analysis_plots(reports, records, out)
    return {r.dataset_id: r.regime.label for r in reports}


def cmd_simulate_pve(
    config: HarnessConfig,
    out: Path,
    pve_levels: Optional[Sequence[float]] = None,
    seed: Optional[int] = None,
) -> Dict[str, Any]:
    """
    Synthesize PVE-controlled variants of every dataset with a named
    dependent column, and plan their alternative-arm runs.

    Returns:
        Dict mapping synthetic dataset ids to their provenance.
    """
    levels = list(config.pve_levels if pve_levels is None else pve_levels)
    bad = [p for p in levels if not 0.0 <= p <= 1.0]
    if bad or not levels:
        raise ValidationError(f"PVE levels must be a non-empty list within [0, 1], got {levels}")
    master_seed = config.master_seed if seed is None else seed
    sources = [spec for spec in config.datasets if spec.dependent and spec.independents]
    if not sources:
        raise ValidationError("no dataset names a dependent column and independents")
    _check_dataset_files(config)

    out = Path(out)
    synthetic_specs: List[DatasetSpec] = []
    provenance: Dict[str, Any] = {}
    for spec in sources:
        dataset, metadata = load_dataset(spec.csv_path, spec.metadata_path)
        design = one_hot_encode(dataset, spec.dependent, spec.independents)
        fit = fit_signal_model(design)
        for pve in levels:
            synthetic_id = f"{spec.dataset_id}@pve={pve:g}"
            pve_config = PveConfig(pve=pve, seed=derive_seed(master_seed, spec.dataset_id, "pve", f"{pve:g}"))
            synthetic, synthetic_metadata = synthesize_dataset(dataset, metadata, design, fit, pve_config)
            csv_path, info_path = write_dataset(
                synthetic, synthetic_metadata, out / "synthetic" / safe_name(synthetic_id)
            )
            synthetic_specs.append(DatasetSpec(
                dataset_id=synthetic_id,
                csv_path=str(csv_path),
                metadata_path=str(info_path),
            ))
            provenance[synthetic_id] = synthetic_metadata.extra["synthetic"]

    derived = config.model_copy(update={
        "datasets": synthetic_specs,
        "replicates": config.pve_replicates,
        "include_null_arm": False,
        "master_seed": master_seed,
    })
    plan = _plan_for(derived)
    save_plan(plan, out / PLAN_FILE)
    save_config(derived, str(out / CONFIG_FILE))
    write_json(out / "provenance.json", provenance)
    logger.info(f"Synthesized {len(synthetic_specs)} datasets; plan has {len(plan.conditions)} conditions")
    return {"plan": str(out / PLAN_FILE), "conditions": len(plan.conditions), "datasets": provenance}


def cmd_calibrate(
    ledger_paths: Sequence[Path],
    out: Path,
    replicates: int = 1000,
    B: Optional[int] = None,
    alpha: Optional[float] = None,
    seed: Optional[int] = None,
    datasets: Optional[Sequence[str]] = None,
) -> Dict[str, Any]:
    """Null-calibration simulation and η² diagnostics per dataset."""
    config = _ledger_config(ledger_paths[0])
    B = config.thresholds.B if B is None else B
    alpha = config.thresholds.alpha if alpha is None else alpha
    master_seed = config.master_seed if seed is None else seed
    if replicates < 1:
        raise ValidationError(f"--replicates must be >= 1, got {replicates}")

    records = _ledger_records(ledger_paths)
    results = {}
    eta: Dict[str, Any] = {}
    pooled: Dict[str, List[float]] = {}
    for dataset_id in _selected(records, datasets):
        sample = alt_sample(records, dataset_id)
        results[dataset_id] = calibration_simulation(
            sample, R=replicates, B=B, alpha=alpha,
            seed=derive_seed(master_seed, dataset_id, "calibrate"),
        )
        eta[dataset_id] = _eta_by_kind(sample)
        values = sample.values
        for key, members in sample.blocks:
            pooled.setdefault(key, []).extend(float(values[i]) for i in members)

    if not results:
        raise StatsError("ledger holds no alternative-arm records to calibrate")
    eta["pooled"] = _eta_by_kind(ScoreSample.from_groups({k: pooled[k] for k in sorted(pooled)}))
    write_calibration(results, eta, Path(out))
    return {
        dataset_id: {
            "blocked": r.rejection_rate_blocked,
            "unblocked": r.rejection_rate_unblocked,
        }
        for dataset_id, r in results.items()
    }


def cmd_converge(
    ledger_paths: Sequence[Path],
    out: Path,
    sizes: Optional[Sequence[int]] = None,
    modes: Sequence[SubsampleMode] = (SubsampleMode.RANDOM, SubsampleMode.ALT_ONLY),
    repetitions: Optional[int] = None,
    B_small: Optional[int] = None,
    alpha: Optional[float] = None,
    tau: Optional[float] = None,
    variant: Variant = Variant.STANDARD,
    null_source: Optional[str] = None,
    null_arm: Arm = Arm.NULL,
    seed: Optional[int] = None,
    datasets: Optional[Sequence[str]] = None,
) -> Dict[str, Any]:
    """Agreement curves for each dataset and subsampling mode."""
    config = _ledger_config(ledger_paths[0])
    thresholds = config.thresholds
    master_seed = config.master_seed if seed is None else seed
    options: Dict[str, Any] = {
        "alpha": thresholds.alpha if alpha is None else alpha,
        "tau": thresholds.tau if tau is None else tau,
        "B_small": thresholds.B_small if B_small is None else B_small,
        "grid_points": thresholds.grid_points,
        "variant": variant,
    }
    if repetitions is not None:
        if repetitions < 1:
            raise ValidationError(f"--repetitions must be >= 1, got {repetitions}")
        options["repetitions"] = lambda n: repetitions

    records = _ledger_records(ledger_paths)
    curves = []
    for dataset_id in _paired(records, datasets, null_source, null_arm):
        pair = build_pair(records, dataset_id, null_source, null_arm)
        for mode in modes:
            curves.extend(convergence_analysis(
                pair,
                sizes=sizes,
                mode=mode,
                seed=derive_seed(master_seed, dataset_id, "converge"),
                **options,
            ))
    if not curves:
        raise StatsError("ledger holds no alternative-arm records for convergence")
    write_convergence(curves, Path(out))
    return {"curves": len(curves)}


def cmd_confidence(
    ledger_path: Path,
    out: Path,
    jobs: Optional[int] = None,
    config_override: Optional[HarnessConfig] = None,
) -> Dict[str, Any]:
    """
    Run the supervisor pass over every ok run of a ledger, then correlate
    stated confidence with empirical exceedance.
    """
    if not Path(ledger_path).is_file():
        raise ValidationError(f"ledger not found: {ledger_path}")
    ledger = RunLedger(ledger_path)
    config = _ledger_config(ledger_path)
    if config_override is not None:
        config = config.model_copy(update={"backend": config_override.backend})

    try:
        run_confidence_pass(ledger, make_backend(config.backend), config, jobs or config.jobs)
    except OSError as e:
        raise HarnessFault(f"confidence pass failed: {e}") from e

    calibration = confidence_calibration(ledger.responses(), ledger.confidences())
    write_confidence(calibration, Path(out))
    return calibration.to_dict()
