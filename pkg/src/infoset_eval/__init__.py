"""Public package surface for infoset-eval.

Quantile (VaR) forecasts built on nested information sets are compared by
their mean scores under consistent scoring functions, with a
Diebold-Mariano-type test for the improvement, GARCH(1,1) and bivariate
DCC-GARCH data generating processes, exceedance backtests, and reproducible
experiment pipelines.
"""

from __future__ import annotations

from ._version import __version__
from .backtest import (
    BacktestReport,
    CoverageResult,
    EsIdentityCheck,
    ExceedanceSeries,
    IndependenceResult,
    IndependenceScan,
    Orientation,
    backtest_report,
    coverage_test,
    es_identity_check,
    exceedance_indicators,
    independence_scan,
    independence_test,
    indicator_autocorrelations,
    normal_tail_expectation,
)
from .config import (
    ExperimentConfig,
    Forecaster,
    MethodPair,
    MixtureSpec,
    ScorerSpec,
    load_config,
    preset_config,
)
from .dcc import (
    DCC_CONFIGS,
    DccFit,
    DccParams,
    DccPath,
    PortfolioSpec,
    filter_dcc,
    fit_dcc_two_step,
    forecast_portfolio_quantile_h1,
    portfolio_returns,
    portfolio_variance,
    simulate_dcc,
    symmetric_sqrt_2x2,
)
from .dmtest import (
    DmTestResult,
    LongRunEstimator,
    LongRunVariance,
    ScoreDifferentialSeries,
    dm_test,
    long_run_variance,
    score_differentials,
)
from .errors import (
    AlignmentError,
    ConfigError,
    DataFileError,
    DegenerateVarianceError,
    InfosetError,
    InsufficientSampleError,
    InvalidArgumentError,
    NumericalFailure,
)
from .garch import (
    GARCH_CONFIGS,
    ForecastMethod,
    GarchFit,
    GarchParams,
    GarchPath,
    QuantileForecast,
    aggregate_h_step,
    empirical_quantile,
    fit_garch_qmle,
    forecast_quantile_h1,
    forecast_quantile_mc,
    forecast_quantiles_mc,
    forecast_quantiles_mc_levels,
    garch_variance_path,
    simulate_garch,
    sqrt_time_rule,
    unconditional_quantile,
)
from .pipeline import (
    Comparison,
    ForecastPair,
    rolling_comparison,
    run_application,
    run_mean_score_experiment,
    run_mixture_demo,
    run_power_study,
    simulate_mixture,
)
from .prices import (
    PriceTable,
    ReturnSeries,
    load_forecasts_csv,
    load_prices_csv,
    prices_from_returns,
    to_log_returns,
    to_relative_returns,
    write_prices_csv,
)
from .report import ExperimentReport, PowerRow, ScoreRow
from .scoring import (
    ExpectileScorer,
    MeanScore,
    MonotoneFamily,
    MonotoneFunction,
    QuantileForm,
    QuantileScorer,
    ScoreSeries,
    compute_expectile,
    expectile_score,
    log_score_gaussian,
    log_score_gaussian_mixture,
    mean_score,
    quantile_score_general,
    quantile_score_sstar,
    scorer_from_dict,
)
from .seeding import derive_rng, derive_seed

__all__ = [
    "__version__",
    # scoring
    "ExpectileScorer",
    "MeanScore",
    "MonotoneFamily",
    "MonotoneFunction",
    "QuantileForm",
    "QuantileScorer",
    "ScoreSeries",
    "compute_expectile",
    "expectile_score",
    "log_score_gaussian",
    "log_score_gaussian_mixture",
    "mean_score",
    "quantile_score_general",
    "quantile_score_sstar",
    "scorer_from_dict",
    # comparison test
    "DmTestResult",
    "LongRunEstimator",
    "LongRunVariance",
    "ScoreDifferentialSeries",
    "dm_test",
    "long_run_variance",
    "score_differentials",
    # GARCH(1,1)
    "GARCH_CONFIGS",
    "ForecastMethod",
    "GarchFit",
    "GarchParams",
    "GarchPath",
    "QuantileForecast",
    "aggregate_h_step",
    "empirical_quantile",
    "fit_garch_qmle",
    "forecast_quantile_h1",
    "forecast_quantile_mc",
    "forecast_quantiles_mc",
    "forecast_quantiles_mc_levels",
    "garch_variance_path",
    "simulate_garch",
    "sqrt_time_rule",
    "unconditional_quantile",
    # DCC-GARCH
    "DCC_CONFIGS",
    "DccFit",
    "DccParams",
    "DccPath",
    "PortfolioSpec",
    "filter_dcc",
    "fit_dcc_two_step",
    "forecast_portfolio_quantile_h1",
    "portfolio_returns",
    "portfolio_variance",
    "simulate_dcc",
    "symmetric_sqrt_2x2",
    # backtests
    "BacktestReport",
    "CoverageResult",
    "EsIdentityCheck",
    "ExceedanceSeries",
    "IndependenceResult",
    "IndependenceScan",
    "Orientation",
    "backtest_report",
    "coverage_test",
    "es_identity_check",
    "exceedance_indicators",
    "independence_scan",
    "independence_test",
    "indicator_autocorrelations",
    "normal_tail_expectation",
    # experiments
    "Comparison",
    "ExperimentConfig",
    "ExperimentReport",
    "ForecastPair",
    "Forecaster",
    "MethodPair",
    "MixtureSpec",
    "PowerRow",
    "ScoreRow",
    "ScorerSpec",
    "load_config",
    "preset_config",
    "rolling_comparison",
    "run_application",
    "run_mean_score_experiment",
    "run_mixture_demo",
    "run_power_study",
    "simulate_mixture",
    # data files
    "PriceTable",
    "ReturnSeries",
    "load_forecasts_csv",
    "load_prices_csv",
    "prices_from_returns",
    "to_log_returns",
    "to_relative_returns",
    "write_prices_csv",
    # errors
    "AlignmentError",
    "ConfigError",
    "DataFileError",
    "DegenerateVarianceError",
    "InfosetError",
    "InsufficientSampleError",
    "InvalidArgumentError",
    "NumericalFailure",
    # seeding
    "derive_rng",
    "derive_seed",
]
