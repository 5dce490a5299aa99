from __future__ import annotations

import math

from hypothesis import given, settings
from hypothesis import strategies as st
import numpy as np
import pytest

from infoset_eval.errors import InsufficientSampleError, InvalidArgumentError
from infoset_eval.garch import empirical_quantile, order_statistic_index
from infoset_eval.scoring import (
    ExpectileScorer,
    MonotoneFamily,
    MonotoneFunction,
    QuantileForm,
    QuantileScorer,
    compensated_mean,
    compute_expectile,
    expectile_score,
    log_score_gaussian,
    log_score_gaussian_mixture,
    mean_score,
    quantile_score_general,
    quantile_score_sstar,
    scorer_from_dict,
)

finite = st.floats(min_value=-1e3, max_value=1e3, allow_subnormal=False)
levels = st.floats(min_value=0.001, max_value=0.999)


def test_sstar_matches_hand_evaluation() -> None:
    # Hit: x >= y, so S* = x(1/alpha - 1) - y/alpha.
    assert quantile_score_sstar(-1.0, -2.0, 0.1) == pytest.approx(11.0)
    # Miss: S* = -x.
    assert quantile_score_sstar(-1.0, 0.0, 0.1) == pytest.approx(1.0)
    # The indicator is weak on the forecast side.
    assert quantile_score_sstar(0.5, 0.5, 0.2) == pytest.approx(0.5 * 4.0 - 0.5 * 5.0)


def test_scores_broadcast_and_return_arrays() -> None:
    x = np.array([-1.0, -1.0])
    y = np.array([-2.0, 0.0])
    scores = quantile_score_sstar(x, y, 0.1)
    assert isinstance(scores, np.ndarray)
    np.testing.assert_allclose(scores, [11.0, 1.0])
    assert isinstance(quantile_score_sstar(0.0, 1.0, 0.5), float)


@given(x=finite, y=finite, alpha=levels)
def test_sstar_is_the_rescaled_general_score_minus_y(x: float, y: float, alpha: float) -> None:
    general = quantile_score_general(x, y, alpha)
    assert quantile_score_sstar(x, y, alpha) == pytest.approx(
        general / alpha - y, rel=1e-9, abs=1e-6
    )


@given(x=finite, y=finite, alpha=levels)
def test_general_score_is_nonnegative_and_zero_only_on_the_diagonal(
    x: float, y: float, alpha: float
) -> None:
    score = quantile_score_general(x, y, alpha)
    assert score >= 0.0
    if abs(x - y) > 1e-300:
        assert score > 0.0
    assert quantile_score_general(x, x, alpha) == 0.0


@given(x=st.floats(min_value=-40, max_value=40), y=st.floats(min_value=-40, max_value=40))
@settings(max_examples=50)
def test_general_score_with_exp_transform_is_nonnegative(x: float, y: float) -> None:
    g = MonotoneFunction(MonotoneFamily.EXP)
    assert quantile_score_general(x, y, 0.05, g) >= 0.0


def test_inverse_level_transform_divides_the_identity_score() -> None:
    g = MonotoneFunction(MonotoneFamily.INVERSE_LEVEL)
    assert quantile_score_general(-1.0, -3.0, 0.25, g) == pytest.approx(
        quantile_score_general(-1.0, -3.0, 0.25) / 0.25
    )


def test_tabulated_transform_rejects_points_outside_its_knots() -> None:
    g = MonotoneFunction(MonotoneFamily.TABULATED, knots=(-1.0, 0.0, 1.0), values=(-2.0, 0.0, 1.0))
    assert g.support == (-1.0, 1.0)
    assert quantile_score_general(0.5, -0.5, 0.5, g) == pytest.approx(0.5 * (0.5 + 1.0))
    with pytest.raises(InvalidArgumentError):
        quantile_score_general(2.0, 0.0, 0.5, g)


def test_non_increasing_table_is_refused_by_the_scorer() -> None:
    g = MonotoneFunction(MonotoneFamily.TABULATED, knots=(0.0, 1.0, 2.0), values=(0.0, 1.0, 1.0))
    with pytest.raises(InvalidArgumentError, match="strictly increasing"):
        QuantileScorer(0.1, QuantileForm.GENERAL_G, g)


def test_sstar_scorer_takes_no_transform() -> None:
    with pytest.raises(InvalidArgumentError):
        QuantileScorer(0.1, QuantileForm.SSTAR, MonotoneFunction())


@pytest.mark.parametrize("alpha", (0.0, 1.0, -0.5, math.nan))
def test_levels_outside_the_open_unit_interval_are_refused(alpha: float) -> None:
    with pytest.raises(InvalidArgumentError):
        quantile_score_sstar(0.0, 0.0, alpha)


def test_non_finite_inputs_are_refused() -> None:
    with pytest.raises(InvalidArgumentError):
        quantile_score_sstar(math.inf, 0.0, 0.1)
    with pytest.raises(InvalidArgumentError):
        mean_score([0.0, math.nan], [0.0, 0.0], QuantileScorer(0.1))


def test_expectile_score_and_expectile() -> None:
    assert expectile_score(0.0, 1.0, 0.3) == pytest.approx(0.3)
    assert expectile_score(2.0, 1.0, 0.3) == pytest.approx(0.7)
    assert compute_expectile([0.0, 1.0], 0.25) == pytest.approx(0.25, abs=1e-9)
    sample = np.random.default_rng(7).normal(size=1001)
    assert compute_expectile(sample, 0.5) == pytest.approx(float(sample.mean()))
    assert compute_expectile([3.0, 3.0, 3.0], 0.1) == 3.0


def test_expectile_minimises_the_mean_expectile_score() -> None:
    sample = np.random.default_rng(11).standard_t(5, size=5000)
    tau = compute_expectile(sample, 0.1)
    best = float(np.mean(expectile_score(tau, sample, 0.1)))
    for shift in (-0.05, 0.05):
        assert float(np.mean(expectile_score(tau + shift, sample, 0.1))) > best


def test_expectile_agrees_with_a_grid_minimiser_on_a_large_normal_sample() -> None:
    sample = np.random.default_rng(2016).standard_normal(1_000_000)
    tau = compute_expectile(sample, 0.9)

    def mean_loss(candidate: float) -> float:
        return float(np.mean(expectile_score(candidate, sample, 0.9)))

    coarse = np.linspace(-3.0, 3.0, 61)
    coarse_best = coarse[np.argmin([mean_loss(point) for point in coarse])]
    assert abs(coarse_best - tau) <= 0.05

    fine = tau + 1e-4 * np.arange(-20, 21)
    fine_best = fine[np.argmin([mean_loss(point) for point in fine])]
    assert abs(fine_best - tau) <= 1e-4


def test_gaussian_log_score_is_minimised_by_the_true_distribution() -> None:
    y = np.random.default_rng(5).standard_normal(100_000)
    grid = [(mu, var) for mu in (-0.1, 0.0, 0.1) for var in (0.8, 1.0, 1.25)]
    means = {point: float(np.mean(log_score_gaussian(point[0], point[1], y))) for point in grid}
    assert min(means, key=means.__getitem__) == (0.0, 1.0)


def test_gaussian_log_score() -> None:
    assert log_score_gaussian(0.0, 1.0, 0.0) == pytest.approx(0.5 * math.log(2.0 * math.pi))
    assert log_score_gaussian(1.0, 4.0, 3.0) == pytest.approx(
        0.5 * math.log(2.0 * math.pi) + 0.5 + math.log(2.0)
    )
    with pytest.raises(InvalidArgumentError):
        log_score_gaussian(0.0, 0.0, 1.0)


def test_mixture_log_score_reduces_to_a_single_component() -> None:
    y = np.linspace(-3.0, 3.0, 7)
    single = log_score_gaussian(0.5, 2.0, y)
    np.testing.assert_allclose(log_score_gaussian_mixture([1.0], [0.5], [2.0], y), single)
    np.testing.assert_allclose(
        log_score_gaussian_mixture([0.5, 0.5], [0.5, 0.5], [2.0, 2.0], y), single
    )
    with pytest.raises(InvalidArgumentError):
        log_score_gaussian_mixture([0.6, 0.6], [0.0, 0.0], [1.0, 1.0], 0.0)


def test_compensated_mean_is_exactly_rounded() -> None:
    values = [1e16, 1.0, -1e16, 1.0]
    assert compensated_mean(values) == 0.5
    with pytest.raises(InvalidArgumentError):
        compensated_mean([])


def test_mean_score_checks_lengths_and_keeps_the_series() -> None:
    result = mean_score([-1.0, -1.0], [-2.0, 0.0], QuantileScorer(0.1))
    assert result.mean == pytest.approx(6.0)
    assert result.score_series.n == 2
    with pytest.raises(InvalidArgumentError, match="equal lengths"):
        mean_score([0.0], [0.0, 1.0], QuantileScorer(0.1))
    with pytest.raises(InsufficientSampleError):
        mean_score([], [], QuantileScorer(0.1))


def test_score_series_does_not_freeze_the_callers_array() -> None:
    values = np.array([1.0, 2.0])
    result = mean_score(values, values, QuantileScorer(0.5))
    values[0] = 3.0
    assert not result.score_series.values.flags.writeable


def test_scorer_specifications_round_trip() -> None:
    general = QuantileScorer(0.05, QuantileForm.GENERAL_G, MonotoneFunction(MonotoneFamily.EXP))
    assert scorer_from_dict(general.to_dict()) == general
    assert scorer_from_dict({"type": "quantile_sstar", "alpha": 0.01}) == QuantileScorer(0.01)
    assert scorer_from_dict({"type": "expectile", "alpha": 0.2}) == ExpectileScorer(0.2)
    with pytest.raises(InvalidArgumentError):
        scorer_from_dict({"type": "crps", "alpha": 0.2})


@pytest.mark.parametrize("alpha", (0.01, 0.05, 0.5))
@pytest.mark.parametrize("distribution", ("normal", "student_t5", "lognormal"))
def test_grid_minimiser_of_mean_sstar_is_the_empirical_quantile(
    alpha: float, distribution: str
) -> None:
    rng = np.random.default_rng(2016)
    n = 100_000
    if distribution == "normal":
        sample = rng.standard_normal(n)
    elif distribution == "student_t5":
        sample = rng.standard_t(5, size=n)
    else:
        sample = rng.lognormal(size=n)
    quantile = empirical_quantile(sample, alpha)
    step = 1e-3
    grid = quantile + step * np.arange(-100, 101)
    means = [float(np.mean(quantile_score_sstar(x, sample, alpha))) for x in grid]
    best = float(grid[int(np.argmin(means))])

    ordered = np.sort(sample)
    k = order_statistic_index(alpha, n)
    # Mean S* is flat between the k-th and (k+1)-th order statistics when alpha n is whole.
    upper = ordered[min(k, n - 1)]
    assert ordered[k - 1] - step <= best <= upper + step
