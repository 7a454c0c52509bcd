import numpy as np
import pytest

from src.errors import StatsError
from src.stats.association import empirical_exceedance, eta_squared, spearman_rho
from src.types import ScoreSample


def _groups(*values):
    return [ScoreSample.of(v) for v in values]


def test_equal_group_means_explain_nothing():
    assert eta_squared(_groups([10, 20, 30], [30, 20, 10])).eta_squared == pytest.approx(0.0)


def test_constant_groups_explain_everything():
    result = eta_squared(_groups([10, 10], [20, 20]))
    assert result.eta_squared == pytest.approx(1.0)
    assert result.group_means == (10.0, 20.0)
    assert result.group_sizes == (2, 2)


def test_eta_squared_is_invariant_to_shift_and_scale():
    rng = np.random.default_rng(0)
    raw = [rng.uniform(0, 40, size=8) for _ in range(4)]
    base = eta_squared([ScoreSample.of(v) for v in raw]).eta_squared
    moved = eta_squared([ScoreSample.of(2.0 * v + 10.0) for v in raw]).eta_squared
    assert moved == pytest.approx(base, abs=1e-12)


def test_eta_squared_rejects_degenerate_input():
    with pytest.raises(StatsError):
        eta_squared(_groups([10, 20, 30]))
    with pytest.raises(StatsError, match="identical"):
        eta_squared(_groups([5, 5], [5, 5]))


def test_spearman_rho():
    assert spearman_rho([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)
    assert spearman_rho([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)
    assert spearman_rho([1, 2, 3], [5, 5, 5]) is None
    with pytest.raises(StatsError):
        spearman_rho([1, 2], [1, 2])


def test_empirical_exceedance_counts_strictly_higher_peers():
    sample = ScoreSample.of([10, 20, 20, 30])
    assert empirical_exceedance(0, sample) == 1.0
    assert empirical_exceedance(1, sample) == pytest.approx(1 / 3)
    assert empirical_exceedance(3, sample) == 0.0
    with pytest.raises(StatsError):
        empirical_exceedance(4, sample)


def test_spearman_rho_ranks_by_hand():
    assert spearman_rho([1, 2, 3, 4], [10, 30, 20, 40]) == pytest.approx(0.8)


def test_spearman_rho_ignores_monotone_transforms():
    rng = np.random.default_rng(5)
    x = rng.uniform(0, 10, size=30)
    y = x + rng.normal(0, 3, size=30)
    assert spearman_rho(np.exp(x / 2), y ** 3) == pytest.approx(spearman_rho(x, y), abs=1e-12)
