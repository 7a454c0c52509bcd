import numpy as np
import pytest

from src.errors import SignalModelError
from src.processors.signal import (
    fit_signal_model,
    noise_scale_for_pve,
    synthesize_dataset,
    synthesize_outcome,
)
from src.processors.tabular import one_hot_encode
from src.types import DatasetMetadata, DesignMatrix, PveConfig, TabularDataset


def _design(x_columns, y, names=None):
    X = np.column_stack([np.ones(len(y)), *x_columns])
    names = names or tuple(["intercept"] + [f"x{i}" for i in range(len(x_columns))])
    return DesignMatrix(outcome=np.asarray(y, dtype=float), design=X, encoded_names=names)


def _linear(n=1000, seed=0):
    rng = np.random.default_rng(seed)
    x1 = rng.normal(size=n)
    x2 = rng.normal(size=n)
    y = 1.0 + 2.0 * x1 - 0.5 * x2 + rng.normal(size=n)
    return _design([x1, x2], y)


def _r_squared(design, z):
    beta, *_ = np.linalg.lstsq(design, z, rcond=None)
    residual = z - design @ beta
    return 1.0 - residual @ residual / np.sum((z - z.mean()) ** 2)


def test_exact_linear_outcome_is_recovered():
    x = np.arange(10, dtype=float)
    fit = fit_signal_model(_design([x], 1.0 + 2.0 * x))

    np.testing.assert_allclose(fit.beta, [1.0, 2.0], atol=1e-10)
    assert fit.var_yhat == pytest.approx(np.var(1.0 + 2.0 * x))
    assert fit.sigma_y == pytest.approx(np.std(1.0 + 2.0 * x))
    assert fit.variance_convention == "population"


def test_duplicated_columns_are_dropped_and_collinear_ones_rejected():
    x = np.arange(12, dtype=float)
    z = np.sin(x)
    fit = fit_signal_model(_design([x, z, x], 3.0 + x, names=("intercept", "x", "z", "x_copy")))
    assert fit.dropped_columns == ("x_copy",)
    assert fit.column_names == ("intercept", "x", "z")

    with pytest.raises(SignalModelError, match="rank deficient"):
        fit_signal_model(_design([x, z, x + z], 3.0 + x))


def test_noise_scale_matches_closed_form():
    assert noise_scale_for_pve(4.0, 0.5) == pytest.approx(2.0)
    assert noise_scale_for_pve(4.0, 1.0) == 0.0
    with pytest.raises(SignalModelError):
        noise_scale_for_pve(4.0, 0.0)


def test_full_pve_returns_fitted_values():
    fit = fit_signal_model(_linear())
    np.testing.assert_array_equal(synthesize_outcome(fit, PveConfig(pve=1.0, seed=3)), fit.fitted)


def test_zero_pve_is_noise_around_the_observed_moments():
    design = _linear()
    fit = fit_signal_model(design)
    z = synthesize_outcome(fit, PveConfig(pve=0.0, seed=4))

    assert abs(z.mean() - fit.y_bar) < 4 * fit.sigma_y / np.sqrt(z.size)
    assert z.std() == pytest.approx(fit.sigma_y, rel=0.1)
    assert _r_squared(design.design, z) < 0.02


def test_intermediate_pve_controls_variance_explained():
    design = _linear()
    fit = fit_signal_model(design)
    hits = 0
    for seed in range(20):
        z = synthesize_outcome(fit, PveConfig(pve=0.1, seed=seed))
        hits += 0.05 <= _r_squared(design.design, z) <= 0.15
    assert hits >= 18


def test_pve_outside_unit_interval_is_rejected():
    with pytest.raises(SignalModelError):
        PveConfig(pve=1.5, seed=0)


def test_synthesized_dataset_keeps_encoded_rows_and_records_provenance():
    dataset = TabularDataset.from_mapping("toy", {
        "y": ["no", "yes", None, "yes", "no", "yes", "no", "yes"],
        "x": [1.0, 2.0, 3.0, 4.0, 5.5, 6.0, 7.0, 8.5],
    })
    metadata = DatasetMetadata(question="Is x related to y?", dataset_name="toy")
    design = one_hot_encode(dataset, "y", ["x"])
    fit = fit_signal_model(design)

    synthetic, synthetic_metadata = synthesize_dataset(dataset, metadata, design, fit, PveConfig(pve=0.5, seed=1))

    assert synthetic.row_count == 7
    assert synthetic.column("x") == (1.0, 2.0, 4.0, 5.5, 6.0, 7.0, 8.5)
    assert synthetic.is_numeric("y")
    provenance = synthetic_metadata.extra["synthetic"]
    assert provenance["pve"] == 0.5
    assert provenance["original_column"] == "y"
    assert provenance["rows_used"] == 7
    assert "linear probability" in provenance["note"]
