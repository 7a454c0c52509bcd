"""
Output Processor.

Writes check reports, the Markdown summary table and plot-ready CSV files.
Nothing here records timestamps, so replaying a ledger rewrites identical
bytes.
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Sequence

from src.types import CalibrationResult, CheckReport, ConvergenceCurve, ResponseRecord
from src.utils.files import SCHEMA_VERSION, safe_name, write_csv, write_json

logger = logging.getLogger(__name__)

REPORTS_DIR = "reports"
PLOTS_DIR = "plots"
SUMMARY_FILE = "summary.md"


# =============================================================================
# CHECK REPORTS
# =============================================================================

def generate_report(
    report: CheckReport,
    out_dir: Path,
    eta: Dict[str, Any],
    failures: Dict[str, Any],
    provenance: Optional[Mapping[str, Any]] = None,
) -> Dict[str, str]:
    """
    Write the JSON report and KDE plot data of one dataset.

    Args:
        report: Classification of the dataset.
        out_dir: Output root.
        eta: Homogeneity diagnostic of the alternative arm.
        failures: Per-arm status counts.
        provenance: Source dataset, arm and run ids of each sample.

    Returns:
        Dict with paths to the generated files.
    """
    out_dir = Path(out_dir)
    name = safe_name(report.dataset_id)
    data = {
        "schema_version": SCHEMA_VERSION,
        **report.to_dict(),
        "eta_squared": eta,
        "failures": failures,
        "provenance": dict(provenance or {}),
    }
    json_path = write_json(out_dir / REPORTS_DIR / f"{name}.json", data)

    overlap = report.overlap
    kde_path = write_csv(
        out_dir / PLOTS_DIR / f"kde_{name}.csv",
        ["score", "density_alternative", "density_null", "density_min"],
        (
            (float(x), float(a), float(n), float(min(a, n)))
            for x, a, n in zip(overlap.grid, overlap.density_alt, overlap.density_null)
        ),
    )
    logger.info(f"Generated report for {report.dataset_id}: {report.regime.label}")
    return {"json_report": str(json_path), "kde_csv": str(kde_path)}


def _mean_sd(mean: float, sd: float) -> str:
    return f"{mean:.2f} ({sd:.2f})"


def write_summary(reports: Sequence[CheckReport], out_dir: Path) -> Path:
    """Markdown table with one row per dataset."""
    lines = [
        "| Dataset | Null mean (SD) | Alternative mean (SD) | p-value | OVL | Regime |",
        "|---|---|---|---|---|---|",
    ]
    for report in reports:
        regime = report.regime.label
        if report.override_applied:
            regime += " (null mean above 50)"
        lines.append(
            f"| {report.dataset_id} | {_mean_sd(report.null_mean, report.null_sd)} | "
            f"{_mean_sd(report.alt_mean, report.alt_sd)} | {report.bootstrap.p_value:.4f} | "
            f"{report.overlap.ovl:.3f} | {regime} |"
        )
    if reports:
        first = reports[0]
        lines.append("")
        lines.append(
            f"Yes check: one-sided bootstrap, B = {first.bootstrap.B}, alpha = {first.alpha}. "
            f"Overlap check: Gaussian KDE overlap, tau = {first.tau}. Variant: {first.variant.value}."
        )
    path = Path(out_dir) / SUMMARY_FILE
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info(f"Wrote summary of {len(reports)} datasets to {path}")
    return path


def write_analysis_plots(
    reports: Sequence[CheckReport],
    records: Sequence[ResponseRecord],
    out_dir: Path,
) -> List[Path]:
    """Scatter data of OVL against alternative mean, and the raw scores."""
    plots = Path(out_dir) / PLOTS_DIR
    ovl_path = write_csv(
        plots / "ovl_vs_mean.csv",
        ["dataset_id", "alt_mean", "null_mean", "p_value", "ovl", "regime"],
        (
            (r.dataset_id, r.alt_mean, r.null_mean, r.bootstrap.p_value, r.overlap.ovl, r.regime.value)
            for r in reports
        ),
    )
    scores_path = write_csv(
        plots / "scores.csv",
        ["run_id", "dataset_id", "arm", "kind", "status", "score"],
        (
            (
                r.run_id,
                r.condition.dataset_id,
                r.condition.arm.value,
                r.condition.kind.value,
                r.status.value,
                "" if r.score is None else r.score,
            )
            for r in sorted(records, key=lambda r: r.run_id)
        ),
    )
    return [ovl_path, scores_path]


# =============================================================================
# CONVERGENCE / CALIBRATION / CONFIDENCE
# =============================================================================

def write_convergence(curves: Sequence[ConvergenceCurve], out_dir: Path) -> List[Path]:
    json_path = write_json(
        Path(out_dir) / "convergence.json",
        {"schema_version": SCHEMA_VERSION, "curves": [c.to_dict() for c in curves]},
    )
    rows = [
        (c.dataset_id, c.mode.value, c.component.value, n, agreement, reps)
        for c in curves
        for n, agreement, reps in zip(c.sizes, c.agreement, c.repetitions)
    ]
    csv_path = write_csv(
        Path(out_dir) / PLOTS_DIR / "convergence.csv",
        ["dataset_id", "mode", "component", "n", "agreement", "repetitions"],
        rows,
    )
    return [json_path, csv_path]


def write_calibration(
    results: Dict[str, CalibrationResult],
    eta: Dict[str, Any],
    out_dir: Path,
) -> List[Path]:
    """Rejection rates per dataset, η² diagnostics and one QQ CSV per dataset."""
    paths = [write_json(
        Path(out_dir) / "calibration.json",
        {
            "schema_version": SCHEMA_VERSION,
            "datasets": {dataset_id: r.to_dict() for dataset_id, r in results.items()},
            "eta_squared": eta,
        },
    )]
    for dataset_id, result in results.items():
        paths.append(write_csv(
            Path(out_dir) / PLOTS_DIR / f"qq_{safe_name(dataset_id)}.csv",
            ["uniform_quantile", "p_blocked", "p_unblocked"],
            result.qq_rows(),
        ))
    return paths


def write_confidence(calibration: Any, out_dir: Path) -> List[Path]:
    json_path = write_json(
        Path(out_dir) / "confidence.json",
        {"schema_version": SCHEMA_VERSION, **calibration.to_dict()},
    )
    csv_path = write_csv(
        Path(out_dir) / PLOTS_DIR / "confidence_vs_exceedance.csv",
        ["run_id", "dataset_id", "arm", "stated_confidence", "empirical_exceedance"],
        ((p.run_id, p.dataset_id, p.arm.value, p.stated, p.exceedance) for p in calibration.pairs),
    )
    return [json_path, csv_path]
