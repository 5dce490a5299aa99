from __future__ import annotations

import json
import math
from pathlib import Path

from jsonschema import Draft202012Validator
import numpy as np
import pytest

from infoset_eval.config import ExperimentConfig, MethodPair, MixtureSpec, preset_config
from infoset_eval.dcc import DCC_CONFIGS, simulate_dcc
from infoset_eval.errors import ConfigError, DegenerateVarianceError, InsufficientSampleError
from infoset_eval.garch import GARCH_CONFIGS, aggregate_h_step, normal_quantile, simulate_garch
from infoset_eval.pipeline import (
    ReplicationOutcome,
    power_rows,
    rolling_comparison,
    run_application,
    run_mean_score_experiment,
    run_mixture_demo,
    run_power_study,
    simulate_mixture,
)
from infoset_eval.prices import prices_from_returns, write_prices_csv
from infoset_eval.scoring import QuantileScorer, mean_score

ROOT = Path(__file__).resolve().parents[1]


def _validate(artifact: dict) -> None:
    schema = json.loads((ROOT / "schemas" / "experiment-report.schema.json").read_text(encoding="utf-8"))
    Draft202012Validator(schema).validate(artifact)


def _small_garch(**overrides) -> ExperimentConfig:
    options = dict(
        horizons=(1, 2),
        alphas=(0.05, 0.20),
        n=2000,
        window=100,
        mc_size=200,
        reference_n=5000,
        burn_in=100,
        seed=11,
    )
    options.update(overrides)
    return ExperimentConfig(GARCH_CONFIGS[1], **options)


def test_mean_score_experiment_reports_every_cell() -> None:
    config = _small_garch()
    report = run_mean_score_experiment(config)
    assert [(row.h, row.alpha) for row in report.rows] == [(1, 0.05), (1, 0.20), (2, 0.05), (2, 0.20)]
    for row in report.rows:
        assert row.n == 2000
        assert row.method_f == "unconditional_empirical"
        assert row.method_g == "garch_true"
    assert len(report.backtests) == 8
    assert report.provenance["config_sha256"] == config.sha256
    _validate(report.to_artifact())


def test_mean_score_experiment_is_reproducible() -> None:
    config = _small_garch(horizons=(1,), alphas=(0.05,))
    first = run_mean_score_experiment(config).to_artifact()
    again = run_mean_score_experiment(config.replace(workers=3)).to_artifact()
    assert first["rows"] == again["rows"]
    changed = run_mean_score_experiment(config.replace(seed=12)).to_artifact()
    assert changed["rows"] != first["rows"]


def test_identical_methods_give_identical_forecasts() -> None:
    config = _small_garch(horizons=(1,), alphas=(0.05,), methods=MethodPair("garch_true", "garch_true"))
    row = run_mean_score_experiment(config).row(1, 0.05)
    assert row.identical_forecasts
    assert row.diff == 0.0
    assert row.p_value == 1.0


def test_true_conditional_forecasts_beat_the_unconditional_quantile() -> None:
    config = _small_garch(horizons=(1,), alphas=(0.05,), n=100_000, reference_n=100_000)
    row = run_mean_score_experiment(config).row(1, 0.05)
    assert row.m_g < row.m_f
    assert row.t_stat > 0


def test_dcc_mean_scores_use_the_portfolio_series() -> None:
    config = ExperimentConfig(
        DCC_CONFIGS[1], alphas=(0.05,), n=2000, reference_n=3000, window=200, burn_in=100, seed=4
    )
    report = run_mean_score_experiment(config)
    row = report.row(1, 0.05)
    assert row.method_f == "portfolio_garch_fitted"
    assert row.method_g == "dcc_true"
    assert math.isfinite(row.t_stat)


def test_rolling_comparison_aligns_origins_and_realizations() -> None:
    path = simulate_garch(GARCH_CONFIGS[2], 400, seed=3)
    config = _small_garch(horizons=(1, 2), alphas=(0.05,))
    comparison = rolling_comparison(
        path.returns, config, MethodPair("sqrt_time", "unconditional_empirical")
    )
    pair = comparison.pair(2, 0.05)
    assert pair.n == 400 - 100 - 2 + 1
    np.testing.assert_allclose(pair.realizations, aggregate_h_step(path.returns[100:], 2)[: pair.n])

    window = path.returns[:100]
    expected = math.sqrt(2) * np.std(window, ddof=1) * normal_quantile(0.05) + 2 * np.mean(window)
    assert pair.forecasts_f[0] == pytest.approx(expected)
    pooled = aggregate_h_step(window, 2)
    assert pair.forecasts_g[0] == np.sort(pooled)[math.ceil(0.05 * pooled.shape[0]) - 1]
    assert comparison.fits == 0


def test_rolling_true_forecasts_use_the_known_variances() -> None:
    path = simulate_garch(GARCH_CONFIGS[1], 300, seed=5)
    config = _small_garch(horizons=(1,), alphas=(0.05,))
    comparison = rolling_comparison(
        path.returns, config, MethodPair("sqrt_time", "garch_true"), cond_var=path.cond_var
    )
    pair = comparison.pair(1, 0.05)
    np.testing.assert_allclose(
        pair.forecasts_g, np.sqrt(path.cond_var[100 : 100 + pair.n]) * normal_quantile(0.05)
    )
    filtered = rolling_comparison(path.returns, config, MethodPair("sqrt_time", "garch_true"))
    assert filtered.pair(1, 0.05).forecasts_g.shape == pair.forecasts_g.shape


def test_rolling_fits_are_counted() -> None:
    path = simulate_garch(GARCH_CONFIGS[1], 260, seed=6)
    config = _small_garch(horizons=(1,), alphas=(0.05,), refit_every=50)
    comparison = rolling_comparison(path.returns, config)
    assert comparison.methods == MethodPair("sqrt_time", "garch_fitted")
    assert comparison.fits == math.ceil(comparison.pair(1, 0.05).n / 50)


def test_rolling_comparison_needs_enough_data() -> None:
    config = _small_garch(horizons=(1,), alphas=(0.05,))
    with pytest.raises(InsufficientSampleError):
        rolling_comparison(np.random.default_rng(0).normal(size=100), config)
    with pytest.raises(InsufficientSampleError):
        rolling_comparison(np.random.default_rng(0).normal(size=150), config, n_origins=100)


def test_rolling_comparison_on_asset_pairs() -> None:
    path = simulate_dcc(DCC_CONFIGS[2], 260, seed=7)
    config = ExperimentConfig(DCC_CONFIGS[2], alphas=(0.05,), window=200, refit_every=100)
    comparison = rolling_comparison(path.returns, config, MethodPair("sqrt_time", "dcc_true"))
    assert comparison.pair(1, 0.05).n == 60


def test_power_rows_count_rejections_and_failures() -> None:
    config = _small_garch(horizons=(1,), alphas=(0.05,), sample_sizes=(250,), levels=(0.05, 1.0))
    outcomes = [ReplicationOutcome(250, i, {(1, 0.05): 3.0 if i < 6 else 0.0}) for i in range(10)]
    outcomes.append(ReplicationOutcome(250, 10, error="DEGENERATE_VARIANCE"))
    rows = power_rows(config, outcomes)
    at_five, at_one = rows
    assert at_five.power == pytest.approx(0.6)
    assert at_five.completed == 10
    assert at_five.failures == 1
    assert at_five.flagged
    assert at_one.power == 1.0


def test_power_rows_without_completed_replications() -> None:
    config = _small_garch(horizons=(1,), alphas=(0.05,), sample_sizes=(250,), levels=(0.05,))
    (row,) = power_rows(config, [ReplicationOutcome(250, 0, error="X")])
    assert row.power is None


def test_power_studies_need_enough_replications() -> None:
    with pytest.raises(ConfigError):
        run_power_study(_small_garch(replications=10))


def test_power_study_is_independent_of_the_worker_count() -> None:
    config = _small_garch(
        horizons=(1,),
        alphas=(0.05,),
        sample_sizes=(120,),
        replications=50,
        levels=(0.05,),
    )
    methods = MethodPair("sqrt_time", "garch_true")
    serial = run_power_study(config, methods)
    parallel = run_power_study(config.replace(workers=2), methods)
    assert serial.power == parallel.power
    (row,) = serial.power
    assert row.completed == 50
    assert 0.0 <= row.power <= 1.0
    _validate(serial.to_artifact())


def test_application_matches_a_direct_rolling_comparison(tmp_path) -> None:
    path = simulate_garch(GARCH_CONFIGS[1], 300, seed=8)
    prices = prices_from_returns(path.returns, "log", scale=100.0)
    csv = write_prices_csv(tmp_path / "prices.csv", prices)
    config = _small_garch(horizons=(1,), alphas=(0.05,), refit_every=100, return_scale=100.0)
    report = run_application(csv, config)
    _validate(report.to_artifact())
    assert report.provenance["return_kind"] == "log"
    assert report.provenance["skipped_rows"] == 0

    direct = rolling_comparison(path.returns, config)
    pair = direct.pair(1, 0.05)
    row = report.row(1, 0.05)
    assert row.n == pair.n
    expected = mean_score(pair.forecasts_f, pair.realizations, QuantileScorer(0.05)).mean
    assert row.m_f == pytest.approx(expected, rel=1e-6)


def test_application_checks_the_study_kind(tmp_path) -> None:
    csv = write_prices_csv(tmp_path / "prices.csv", np.linspace(100.0, 120.0, 300))
    with pytest.raises(ConfigError, match="\\[garch\\]"):
        run_application(csv, preset_config("dcc-1").replace(window=100))


def test_application_reports_degenerate_data_with_the_file(tmp_path) -> None:
    csv = write_prices_csv(tmp_path / "flat.csv", np.full(300, 100.0))
    config = _small_garch(horizons=(1,), alphas=(0.05,))
    with pytest.raises(DegenerateVarianceError) as raised:
        run_application(csv, config)
    assert raised.value.context["path"] == str(csv)
    assert "config_sha256" in raised.value.context


def test_application_needs_enough_rows(tmp_path) -> None:
    csv = write_prices_csv(tmp_path / "short.csv", np.linspace(100.0, 101.0, 50))
    with pytest.raises(InsufficientSampleError):
        run_application(csv, _small_garch(horizons=(1,), alphas=(0.05,)))


def test_mixture_components_share_the_quantile() -> None:
    spec = MixtureSpec(0.05, 2.0)
    sample = simulate_mixture(spec, 200_000, seed=1)
    q = normal_quantile(0.05)
    assert np.mean(sample.y[sample.component] < q) == pytest.approx(0.05, abs=0.004)
    assert np.mean(sample.y[~sample.component] < q) == pytest.approx(0.05, abs=0.004)
    assert np.mean(sample.y < q) == pytest.approx(0.05, abs=0.003)


def test_mixture_demo_separates_log_scores_only() -> None:
    report = run_mixture_demo(MixtureSpec(0.05, 2.0), 50_000, seed=2016)
    extras = report.extras
    quantile = extras["quantile_score"]
    assert quantile["diff"] == 0.0
    assert quantile["dm_test"]["identical_forecasts"]
    log = extras["log_score"]
    assert log["diff"] > 3.0 * log["standard_error"]
    assert extras["component_quantiles"][0] == pytest.approx(extras["quantile_value"])
    _validate(report.to_artifact())


def test_mixture_demo_needs_a_large_sample() -> None:
    with pytest.raises(InsufficientSampleError):
        run_mixture_demo(MixtureSpec(), 1000)


@pytest.mark.slow
def test_one_step_mean_scores_match_reference_values() -> None:
    config = preset_config("garch-1").replace(horizons=(1,), n=300_000)
    report = run_mean_score_experiment(config)
    expected = {0.01: (3.627, 2.511), 0.05: (2.225, 1.895), 0.20: (1.354, 1.303)}
    for alpha, (m_f, m_g) in expected.items():
        row = report.row(1, alpha)
        assert row.m_f == pytest.approx(m_f, abs=0.05)
        assert row.m_g == pytest.approx(m_g, abs=0.05)
    assert 0.29 <= report.row(1, 0.01).rel_diff <= 0.33


@pytest.mark.slow
def test_mean_scores_improve_with_the_information_set() -> None:
    config = preset_config("garch-1").replace(
        horizons=(1,), alphas=(0.01, 0.05, 0.20), n=100_000, reference_n=100_000
    )
    naive = run_mean_score_experiment(config.replace(methods=MethodPair("sqrt_time", "garch_fitted")))
    gains = []
    for alpha in config.alphas:
        row = naive.row(1, alpha)
        assert row.diff > 0
        assert row.p_value < 0.01
        gains.append(row.rel_diff)
    assert gains == sorted(gains, reverse=True)

    known = run_mean_score_experiment(config.replace(methods=MethodPair("garch_fitted", "garch_true")))
    for alpha in config.alphas:
        row = known.row(1, alpha)
        assert abs(row.diff) < 0.02 * row.m_f


@pytest.mark.slow
def test_dcc_mean_score_gap_matches_reference_value() -> None:
    report = run_mean_score_experiment(preset_config("dcc-1"))
    assert report.row(1, 0.01).diff == pytest.approx(0.031, abs=0.010)


@pytest.mark.slow
def test_power_matches_reference_value_and_grows_with_the_sample() -> None:
    config = preset_config("garch-1").replace(
        horizons=(1,), alphas=(0.01,), levels=(0.05,), refit_every=10, workers=4
    )
    report = run_power_study(config)
    powers = [report.power_cell(1, 0.01, n, 0.05).power for n in config.sample_sizes]
    assert powers[2] == pytest.approx(0.863, abs=0.08)
    se = math.sqrt(0.25 / config.replications)
    assert all(later >= earlier - se for earlier, later in zip(powers, powers[1:]))


@pytest.mark.slow
def test_null_calibration_of_the_power_study() -> None:
    config = preset_config("garch-1").replace(
        horizons=(1,), alphas=(0.05,), levels=(0.05,), sample_sizes=(1000,), workers=4
    )
    report = run_power_study(config, MethodPair("garch_true_mc", "garch_true_mc"))
    assert 0.03 <= report.power_cell(1, 0.05, 1000, 0.05).power <= 0.08
