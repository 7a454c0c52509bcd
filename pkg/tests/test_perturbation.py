from collections import Counter

import pytest

from src.errors import PerturbationError
from src.processors.perturbation import (
    NOISE_LEVELS,
    PerturbationOptions,
    add_nonsignal_features,
    anonymize_feature_names,
    apply_leading_statement,
    apply_pcs_perturbation,
    perturb_for_condition,
    shuffle_feature_names,
    shuffle_feature_values,
)
from src.types import Arm, DatasetMetadata, PerturbationKind, TabularDataset
from src.utils.seeding import derive_seed
from tests.helpers import condition


def _dataset(rows=40):
    return TabularDataset.from_mapping("toy", {
        "age": [float(i) for i in range(rows)],
        "city": [f"c{i % 4}" for i in range(rows)],
        "income": [float(100 + 3 * i) for i in range(rows)],
    })


def _metadata():
    return DatasetMetadata(
        question="Does age predict income?",
        dataset_name="toy",
        column_descriptions=(("age", "years"), ("income", "dollars")),
    )


def test_value_shuffle_keeps_each_column_multiset():
    dataset = _dataset()
    shuffled = shuffle_feature_values(dataset, seed=3)

    assert shuffled.column_names == dataset.column_names
    for name in dataset.column_names:
        assert Counter(shuffled.column(name)) == Counter(dataset.column(name))
    assert shuffled.column("age") != dataset.column("age")
    # Columns are permuted independently, so row pairings break.
    pairs = set(zip(dataset.column("age"), dataset.column("income")))
    assert set(zip(shuffled.column("age"), shuffled.column("income"))) != pairs


def test_value_shuffle_is_seeded():
    dataset = _dataset()
    assert shuffle_feature_values(dataset, 11) == shuffle_feature_values(dataset, 11)
    assert shuffle_feature_values(dataset, 11) != shuffle_feature_values(dataset, 12)


def test_noise_features_are_appended_without_touching_the_data():
    dataset = _dataset()
    noisy = add_nonsignal_features(dataset, count=3, seed=5)

    assert noisy.column_names == ["age", "city", "income", "noise_1", "noise_2", "noise_3"]
    assert noisy.columns[:3] == dataset.columns
    assert noisy.is_numeric("noise_1")
    assert set(noisy.column("noise_2")) <= set(NOISE_LEVELS)
    assert noisy.row_count == dataset.row_count


def test_noise_feature_names_avoid_collisions():
    dataset = TabularDataset.from_mapping("toy", {"noise_1": [1.0, 2.0], "y": [3.0, 4.0]})
    noisy = add_nonsignal_features(dataset, count=1, seed=0)
    assert noisy.column_names == ["noise_1", "y", "noise_1_1"]

    with pytest.raises(PerturbationError):
        add_nonsignal_features(dataset, count=0, seed=0)


def test_anonymize_renames_data_and_metadata():
    dataset, metadata, name_map = anonymize_feature_names(_dataset(), _metadata())

    assert dataset.column_names == ["feature1", "feature2", "feature3"]
    assert name_map == {"age": "feature1", "city": "feature2", "income": "feature3"}
    assert metadata.column_descriptions == ()
    assert dataset.column("feature3") == _dataset().column("income")

    _, kept, _ = anonymize_feature_names(_dataset(), _metadata(), scrub_descriptions=False)
    assert kept.column_descriptions == (("feature1", "years"), ("feature3", "dollars"))


def test_name_shuffle_moves_headers_only():
    dataset = _dataset()
    shuffled, metadata = shuffle_feature_names(dataset, _metadata(), seed=1)

    assert sorted(shuffled.column_names) == sorted(dataset.column_names)
    assert [values for _, values in shuffled.columns] == [values for _, values in dataset.columns]
    assert metadata == _metadata()


def test_leading_statements_prefix_the_question():
    options = PerturbationOptions(positive_statement="Surely yes.", negative_statement="Surely no.")
    assert apply_leading_statement(_metadata(), "positive", options).question == "Surely yes. Does age predict income?"
    assert apply_leading_statement(_metadata(), "negative", options).question == "Surely no. Does age predict income?"
    with pytest.raises(PerturbationError):
        apply_leading_statement(_metadata(), "neutral", options)


def test_value_shuffle_is_not_a_pcs_perturbation():
    with pytest.raises(PerturbationError):
        apply_pcs_perturbation(_dataset(), _metadata(), PerturbationKind.SHUFFLE_FEATURE_VALUES, 0)


def test_null_arm_shuffles_after_the_pcs_perturbation():
    cond = condition("toy", Arm.NULL, 2, PerturbationKind.ADD_NONSIGNAL_FEATURES)
    options = PerturbationOptions(noise_features=2)
    dataset, metadata, notes = perturb_for_condition(_dataset(), _metadata(), cond, options)

    noisy = add_nonsignal_features(_dataset(), 2, derive_seed(cond.seed, "pcs"))
    assert dataset == shuffle_feature_values(noisy, derive_seed(cond.seed, "null"))
    assert notes["null_defining"] == PerturbationKind.SHUFFLE_FEATURE_VALUES.value
    assert metadata == _metadata()


def test_alternative_arm_is_deterministic_and_unshuffled():
    cond = condition("toy", Arm.ALTERNATIVE, 0, PerturbationKind.POSITIVE_LEADING_STATEMENT)
    first = perturb_for_condition(_dataset(), _metadata(), cond)
    second = perturb_for_condition(_dataset(), _metadata(), cond)

    assert first[0] == second[0] == _dataset()
    assert first[1] == second[1]
    assert first[1].question.endswith("Does age predict income?")
    assert "null_defining" not in first[2]
