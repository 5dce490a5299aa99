from __future__ import annotations

import math

import numpy as np
import pandas as pd
import pytest

from infoset_eval.errors import DegenerateVarianceError, InsufficientSampleError, InvalidArgumentError
from infoset_eval.garch import (
    GARCH_CONFIGS,
    ForecastMethod,
    GarchParams,
    aggregate_h_step,
    empirical_quantile,
    fit_garch_qmle,
    forecast_quantile_h1,
    forecast_quantile_mc,
    forecast_quantiles_mc,
    forecast_quantiles_mc_levels,
    garch_variance_path,
    order_statistic_index,
    simulate_garch,
    sqrt_time_rule,
    unconditional_quantile,
)
from infoset_eval.seeding import derive_rng


def test_parameters_enforce_positivity_and_stationarity() -> None:
    with pytest.raises(InvalidArgumentError):
        GarchParams(0.0, 0.1, 0.8)
    with pytest.raises(InvalidArgumentError):
        GarchParams(0.01, -0.1, 0.8)
    with pytest.raises(InvalidArgumentError, match="stationarity"):
        GarchParams(0.01, 0.2, 0.8)
    params = GARCH_CONFIGS[1]
    assert params.unconditional_variance == pytest.approx(0.01 / 0.01)
    assert GarchParams.from_dict(params.to_dict()) == params


def test_simulation_follows_the_recursion() -> None:
    params = GARCH_CONFIGS[2]
    path = simulate_garch(params, 2000, seed=4)
    r, v = path.returns, path.cond_var
    expected = params.kappa + params.phi * r[:-1] ** 2 + params.beta * v[:-1]
    np.testing.assert_allclose(v[1:], expected, rtol=1e-12)
    assert np.all(v >= params.kappa)


def test_simulation_is_reproducible_per_seed() -> None:
    params = GARCH_CONFIGS[1]
    first = simulate_garch(params, 500, seed=9)
    again = simulate_garch(params, 500, seed=9)
    other = simulate_garch(params, 500, seed=10)
    np.testing.assert_array_equal(first.returns, again.returns)
    assert not np.array_equal(first.returns, other.returns)


def test_filtering_reproduces_the_simulated_variances() -> None:
    params = GARCH_CONFIGS[3]
    path = simulate_garch(params, 1000, seed=1)
    filtered = garch_variance_path(params, path.returns, path.cond_var[0])
    assert filtered.shape == (1001,)
    np.testing.assert_allclose(filtered[:-1], path.cond_var, rtol=1e-10)
    assert filtered[-1] == pytest.approx(params.next_variance(path.cond_var[-1], path.returns[-1]))


def test_path_csv_has_the_documented_columns(tmp_path) -> None:
    path = simulate_garch(GARCH_CONFIGS[1], 20, seed=0, burn_in=0)
    written = path.to_csv(tmp_path / "nested" / "garch_path.csv")
    frame = pd.read_csv(written)
    assert list(frame.columns) == ["t", "return", "cond_var"]
    np.testing.assert_array_equal(frame["return"].to_numpy(), path.returns)


def test_empirical_quantile_is_the_ceil_order_statistic() -> None:
    sample = np.arange(1.0, 101.0)[::-1]
    assert empirical_quantile(sample, 0.05) == 5.0
    assert empirical_quantile(sample, 0.051) == 6.0
    assert order_statistic_index(0.001, 100) == 1
    assert order_statistic_index(0.999, 100) == 100


def test_aggregation_modes() -> None:
    np.testing.assert_array_equal(aggregate_h_step([1, 2, 3, 4], 2), [3, 5, 7])
    np.testing.assert_array_equal(aggregate_h_step([1, 2, 3, 4], 2, "disjoint"), [3, 7])
    np.testing.assert_array_equal(aggregate_h_step([1, 2, 3], 1), [1, 2, 3])
    with pytest.raises(InvalidArgumentError):
        aggregate_h_step([1, 2], 3)
    with pytest.raises(InvalidArgumentError):
        aggregate_h_step([1, 2, 3], 2, "blocks")


def test_one_step_forecast_is_the_scaled_normal_quantile() -> None:
    forecast = forecast_quantile_h1(4.0, 0.05, t=7)
    assert forecast.value == pytest.approx(-3.289707, abs=1e-6)
    assert forecast.method is ForecastMethod.EXACT_NORMAL
    assert forecast.t == 7
    with pytest.raises(InvalidArgumentError):
        forecast_quantile_h1(0.0, 0.05)


def test_monte_carlo_levels_share_draws_with_single_level_forecasts() -> None:
    params = GARCH_CONFIGS[1]
    starts = np.array([0.5, 1.0, 2.0])
    levels = forecast_quantiles_mc_levels(params, starts, 5, (0.01, 0.2), 1000, derive_rng(3, "mc"))
    single = forecast_quantiles_mc(params, starts, 5, 0.2, 1000, derive_rng(3, "mc"))
    assert levels.shape == (2, 3)
    np.testing.assert_array_equal(levels[1], single)
    assert np.all(levels[0] < levels[1])


def test_monte_carlo_with_one_step_matches_the_normal_quantile() -> None:
    params = GARCH_CONFIGS[1]
    value = forecast_quantiles_mc(params, np.array([1.0]), 1, 0.05, 200_000, derive_rng(0, "mc"))[0]
    assert value == pytest.approx(-1.6449, abs=0.02)


def test_monte_carlo_forecast_checks_its_arguments() -> None:
    params = GARCH_CONFIGS[1]
    forecast = forecast_quantile_mc(params, (1.0, 0.5), 2, 0.05, m=500, seed=1, t=3)
    assert forecast.method is ForecastMethod.MONTE_CARLO
    assert forecast.mc_size == 500
    assert forecast.value < 0
    again = forecast_quantile_mc(params, (1.0, 0.5), 2, 0.05, m=500, seed=1, t=3)
    assert again == forecast
    with pytest.raises(InvalidArgumentError):
        forecast_quantile_mc(params, (1.0, 0.5), 1, 0.05)
    with pytest.raises(InvalidArgumentError):
        forecast_quantile_mc(params, (1.0, 0.5), 2, 0.05, m=50)


def test_reference_forecasters() -> None:
    assert unconditional_quantile(np.arange(1.0, 101.0), 0.05).value == 5.0
    rule = sqrt_time_rule(0.1, 2.0, 4, 0.05)
    assert rule.value == pytest.approx(2.0 * 2.0 * -1.6448536 + 0.4, abs=1e-6)
    assert rule.method is ForecastMethod.SQRT_TIME_RULE
    with pytest.raises(InvalidArgumentError):
        sqrt_time_rule(0.0, 0.0, 1, 0.05)


def test_qmle_refuses_short_or_constant_series() -> None:
    with pytest.raises(InsufficientSampleError):
        fit_garch_qmle(np.ones(50))
    with pytest.raises(DegenerateVarianceError):
        fit_garch_qmle(np.ones(200))


def test_qmle_recovers_the_generating_parameters() -> None:
    params = GARCH_CONFIGS[1]
    path = simulate_garch(params, 20_000, seed=2016)
    fit = fit_garch_qmle(path.returns)
    assert fit.params.phi == pytest.approx(params.phi, abs=0.03)
    assert fit.params.beta == pytest.approx(params.beta, abs=0.05)
    assert fit.params.persistence < 1.0
    assert fit.cond_var_path.shape == path.returns.shape
    assert math.isfinite(fit.loglik)
    assert fit.next_var == pytest.approx(
        fit.params.next_variance(fit.cond_var_path[-1], path.returns[-1])
    )


def test_qmle_with_a_warm_start_stays_stationary() -> None:
    path = simulate_garch(GARCH_CONFIGS[3], 1000, seed=8)
    fit = fit_garch_qmle(path.returns, start=GARCH_CONFIGS[3])
    assert fit.params.phi + fit.params.beta < 1.0
    assert fit.params.kappa > 0


def test_monte_carlo_quantile_error_shrinks_with_the_square_root_of_m() -> None:
    params = GARCH_CONFIGS[1]
    state = (params.unconditional_variance, 0.0)
    sizes = (1000, 4000, 16000)
    spreads = []
    centres = []
    for m in sizes:
        values = np.array(
            [forecast_quantile_mc(params, state, 10, 0.05, m=m, seed=seed).value for seed in range(60)]
        )
        spreads.append(float(values.std(ddof=1)))
        centres.append(float(values.mean()))
    slope = np.polyfit(np.log(sizes), np.log(spreads), 1)[0]
    assert -0.7 < slope < -0.3
    assert centres[0] == pytest.approx(centres[-1], abs=4 * spreads[0] / math.sqrt(60))
