"""Experiments: huge-sample mean scores, rolling-window power studies, the
price-file application and the equal-mixture demonstration.

Every experiment draws from streams derived from the configured master seed
(see :mod:`infoset_eval.seeding`), so reports are reproducible and power
studies give the same numbers with any number of workers.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import norm

from .backtest import (
    INDEPENDENCE_MIN_OBSERVATIONS,
    backtest_report,
    exceedance_indicators,
)
from .config import ExperimentConfig, Forecaster, MethodPair, MixtureSpec
from .dcc import (
    DccParams,
    PortfolioSpec,
    filter_dcc,
    fit_dcc_two_step,
    portfolio_returns,
    portfolio_variances,
    simulate_dcc,
)
from .dmtest import dm_test
from .errors import (
    ConfigError,
    InfosetError,
    InsufficientSampleError,
    InvalidArgumentError,
    NumericalFailure,
)
from .garch import (
    GarchParams,
    aggregate_h_step,
    empirical_quantile,
    fit_garch_qmle,
    forecast_quantiles_mc_levels,
    garch_variance_path,
    normal_quantile,
    simulate_garch,
)
from .prices import load_prices_csv, to_log_returns, to_relative_returns
from .report import ExperimentReport, PowerRow, ScoreRow, build_provenance
from .scoring import (
    QuantileScorer,
    compensated_mean,
    log_score_gaussian,
    log_score_gaussian_mixture,
    mean_score,
)
from .seeding import derive_rng, derive_seed
from .validation import finite_array, integer

logger = logging.getLogger(__name__)

MIXTURE_MIN_OBSERVATIONS = 10_000
SIDES = ("f", "g")


@dataclass(frozen=True)
class ForecastPair:
    """F and G forecasts of ``Y = R_{t+1} + ... + R_{t+h}`` at each origin."""

    h: int
    alpha: float
    forecasts_f: NDArray[np.float64] = field(repr=False)
    forecasts_g: NDArray[np.float64] = field(repr=False)
    realizations: NDArray[np.float64] = field(repr=False)

    @property
    def n(self) -> int:
        return int(self.realizations.shape[0])


@dataclass(frozen=True)
class Comparison:
    pairs: Mapping[tuple[int, float], ForecastPair]
    methods: MethodPair
    fits: int = 0
    boundary_fits: int = 0

    def pair(self, h: int, alpha: float) -> ForecastPair:
        return self.pairs[(h, alpha)]


@dataclass(frozen=True)
class _Sample:
    """A univariate target series with whatever the true model knows about it."""

    returns: NDArray[np.float64] = field(repr=False)
    asset_returns: NDArray[np.float64] | None = field(default=None, repr=False)
    cond_var: NDArray[np.float64] | None = field(default=None, repr=False)
    h_path: NDArray[np.float64] | None = field(default=None, repr=False)


def _simulate_sample(config: ExperimentConfig, n: int, seed: int) -> _Sample:
    dgp = config.dgp
    if isinstance(dgp, GarchParams):
        path = simulate_garch(dgp, n, seed, config.burn_in)
        return _Sample(path.returns, cond_var=path.cond_var)
    if isinstance(dgp, DccParams):
        bivariate = simulate_dcc(dgp, n, seed, config.burn_in)
        portfolio = portfolio_returns(bivariate.returns, config.portfolio, config.return_scale)
        return _Sample(portfolio, bivariate.returns, h_path=bivariate.h_path)
    raise ConfigError("simulation experiments need a [garch] or [dcc] study")


def _scorers(config: ExperimentConfig) -> dict[float, QuantileScorer]:
    return {alpha: config.scorer.for_level(alpha) for alpha in config.alphas}


def _with_context(exc: InfosetError, config: ExperimentConfig, **items: Any) -> InfosetError:
    return exc.with_context(config_sha256=config.sha256[:12], **items)


# ---------------------------------------------------------------------------
# Huge-sample mean scores


class _HugeSampleForecaster:
    """Forecasts over a long evaluation path with parameters fixed in advance.

    Fitted methods are estimated once on the independent reference path and
    then filtered along the evaluation path.
    """

    def __init__(self, config: ExperimentConfig, reference: _Sample) -> None:
        self.config = config
        self.reference = reference
        self._garch_fit: GarchParams | None = None
        self._dcc_fit: DccParams | None = None

    def fitted_garch(self) -> GarchParams:
        if self._garch_fit is None:
            fit = fit_garch_qmle(self.reference.returns)
            logger.info("reference GARCH fit: %s", fit.params.to_dict())
            self._garch_fit = fit.params
        return self._garch_fit

    def fitted_dcc(self) -> DccParams:
        if self._dcc_fit is None:
            assert self.reference.asset_returns is not None
            fit = fit_dcc_two_step(self.reference.asset_returns)
            logger.info("reference DCC fit: %s", fit.params.to_dict())
            self._dcc_fit = fit.params
        return self._dcc_fit

    def _one_step(self, next_vars: NDArray[np.float64]) -> NDArray[np.float64]:
        q = np.array([normal_quantile(alpha) for alpha in self.config.alphas])
        return q[:, None] * np.sqrt(next_vars)[None, :]

    def _normal_or_mc(
        self,
        params: GarchParams,
        next_vars: NDArray[np.float64],
        h: int,
        rng_keys: tuple[int | str, ...],
        force_mc: bool = False,
    ) -> NDArray[np.float64]:
        if h == 1 and not force_mc:
            return self._one_step(next_vars)
        rng = derive_rng(self.config.seed, *rng_keys)
        return forecast_quantiles_mc_levels(
            params, next_vars, h, self.config.alphas, self.config.mc_size, rng
        )

    def forecast(
        self,
        method: Forecaster,
        side: int,
        sample: _Sample,
        h: int,
        n: int,
    ) -> NDArray[np.float64]:
        """Forecasts for origins ``0..n-1``, shape ``(len(alphas), n)``."""

        config = self.config
        alphas = config.alphas
        if method == Forecaster.UNCONDITIONAL_EMPIRICAL:
            pooled = aggregate_h_step(self.reference.returns, h, config.aggregation)
            values = [empirical_quantile(pooled, alpha) for alpha in alphas]
            return np.repeat(np.array(values)[:, None], n, axis=1)
        if method == Forecaster.SQRT_TIME:
            m_hat = compensated_mean(self.reference.returns)
            s_hat = float(np.std(self.reference.returns, ddof=1))
            values = [
                math.sqrt(h) * s_hat * normal_quantile(alpha) + h * m_hat for alpha in alphas
            ]
            return np.repeat(np.array(values)[:, None], n, axis=1)
        if method in (Forecaster.GARCH_TRUE, Forecaster.GARCH_TRUE_MC):
            assert sample.cond_var is not None and isinstance(config.dgp, GarchParams)
            next_vars = sample.cond_var[1 : n + 1]
            if method == Forecaster.GARCH_TRUE:
                return self._normal_or_mc(config.dgp, next_vars, h, ("mc", h))
            return self._normal_or_mc(config.dgp, next_vars, h, ("mc", h, side), force_mc=True)
        if method in (Forecaster.GARCH_FITTED, Forecaster.PORTFOLIO_GARCH_FITTED):
            params = self.fitted_garch()
            filtered = garch_variance_path(params, sample.returns, params.unconditional_variance)
            return self._normal_or_mc(params, filtered[1 : n + 1], h, ("mc-fitted", h))
        if method == Forecaster.DCC_TRUE:
            assert sample.h_path is not None
            variances = portfolio_variances(sample.h_path[1 : n + 1], config.portfolio.weights)
            return self._one_step(variances)
        if method == Forecaster.DCC_FITTED:
            assert sample.asset_returns is not None
            covariances = filter_dcc(self.fitted_dcc(), sample.asset_returns)
            variances = portfolio_variances(covariances[1 : n + 1], config.portfolio.weights)
            return self._one_step(variances)
        raise ConfigError(f"forecaster {method.value!r} is not available here")


def _backtest_entries(
    forecasts: NDArray[np.float64],
    realizations: NDArray[np.float64],
    side: str,
    method: Forecaster,
    alpha: float,
    h: int,
) -> list[dict[str, Any]]:
    if realizations.shape[0] < INDEPENDENCE_MIN_OBSERVATIONS:
        return []
    series = exceedance_indicators(forecasts, realizations, "lower_tail", alpha=alpha, h=h)
    report = backtest_report(series)
    return [{"side": side, "method": method.value, **report.to_dict()}]


def run_mean_score_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Mean scores of F and G forecasts on one long simulated path per horizon.

    The unconditional forecasts come from an independent reference path of
    length ``reference_n``. All levels of one horizon share the same path.
    """

    methods = config.methods_for("mean_scores")
    scorers = _scorers(config)
    reference = _simulate_sample(
        config, config.reference_n, derive_seed(config.seed, "reference")
    )
    forecaster = _HugeSampleForecaster(config, reference)
    rows: list[ScoreRow] = []
    backtests: list[dict[str, Any]] = []
    for h in config.horizons:
        n = config.sample_size(h)
        logger.info("mean scores: h=%d, N=%d, F=%s, G=%s", h, n, methods.f.value, methods.g.value)
        try:
            sample = _simulate_sample(config, n + h, derive_seed(config.seed, "path", h))
            realizations = aggregate_h_step(sample.returns[1:], h)[:n]
            forecasts_f = forecaster.forecast(methods.f, 0, sample, h, n)
            if methods.g == methods.f and methods.f != Forecaster.GARCH_TRUE_MC:
                forecasts_g = forecasts_f
            else:
                forecasts_g = forecaster.forecast(methods.g, 1, sample, h, n)
            for index, alpha in enumerate(config.alphas):
                scores_f = mean_score(forecasts_f[index], realizations, scorers[alpha])
                scores_g = mean_score(forecasts_g[index], realizations, scorers[alpha])
                rows.append(ScoreRow.from_scores(h, alpha, scores_f, scores_g, methods))
                backtests += _backtest_entries(
                    forecasts_f[index], realizations, "f", methods.f, alpha, h
                )
                backtests += _backtest_entries(
                    forecasts_g[index], realizations, "g", methods.g, alpha, h
                )
        except InfosetError as exc:
            raise _with_context(exc, config, h=h)
    provenance = build_provenance(
        config,
        methods=methods.to_dict(),
        path_reuse="one simulated path per horizon, shared by all levels",
    )
    return ExperimentReport("mean_scores", provenance, tuple(rows), backtests=tuple(backtests))


# ---------------------------------------------------------------------------
# Rolling-window comparison


class _RollingState:
    """Per-method estimates carried from one origin to the next."""

    def __init__(self) -> None:
        self.garch: GarchParams | None = None
        self.dcc: DccParams | None = None
        self.fits = 0
        self.boundary_fits = 0


def _window_next_var(
    window: NDArray[np.float64],
    state: _RollingState,
    refit: bool,
) -> tuple[GarchParams, float]:
    if refit or state.garch is None:
        fit = fit_garch_qmle(window, state.garch)
        state.garch = fit.params
        state.fits += 1
        state.boundary_fits += int(fit.at_boundary)
        return fit.params, fit.next_var
    path = garch_variance_path(state.garch, window, float(np.var(window)))
    return state.garch, float(path[-1])


def _window_next_cov(
    window: NDArray[np.float64],
    state: _RollingState,
    refit: bool,
) -> NDArray[np.float64]:
    if refit or state.dcc is None:
        fit = fit_dcc_two_step(window, state.dcc)
        state.dcc = fit.params
        state.fits += 1
        state.boundary_fits += int(fit.at_boundary)
        return fit.next_covariance
    variances = (float(np.var(window[:, 0])), float(np.var(window[:, 1])))
    return filter_dcc(state.dcc, window, variances)[-1]


def rolling_comparison(
    returns: ArrayLike,
    config: ExperimentConfig,
    methods: MethodPair | None = None,
    n_origins: int | None = None,
    *,
    cond_var: ArrayLike | None = None,
    h_path: ArrayLike | None = None,
    seed: int | None = None,
) -> Comparison:
    """Rolling-window F and G forecasts for every horizon and level.

    ``returns`` is a univariate series, or an ``n x 2`` matrix of asset
    returns whose rebalanced portfolio is the forecast target. At origin ``t``
    the forecasters see the last ``window`` observations up to ``t``; the
    realization is ``R_{t+1} + ... + R_{t+h}``. Fitted models are re-estimated
    every ``refit_every`` origins, warm-started from the previous estimate.

    ``cond_var`` (``sigma_t^2`` aligned with ``returns``) and ``h_path``
    (``H_t``) supply the true model state; without them the true parameters
    are filtered along the data.
    """

    methods = methods or config.methods_for("rolling")
    config.check_methods(methods)
    seed = config.seed if seed is None else seed
    data = np.asarray(returns, dtype=np.float64)
    bivariate = data.ndim == 2
    if bivariate:
        assets = finite_array(data, "returns", ndim=2)
        target = portfolio_returns(assets, config.portfolio, config.return_scale)
    else:
        assets = None
        target = finite_array(data, "returns")
    window, max_h = config.window, config.max_h
    available = target.shape[0] - window - max_h + 1
    n_origins = available if n_origins is None else integer(n_origins, "n_origins", minimum=1)
    if n_origins < 1 or n_origins > available:
        raise InsufficientSampleError(
            f"{target.shape[0]} observations cannot supply {max(n_origins, 1)} origins "
            f"with window {window} and horizon {max_h}"
        )

    true_var: NDArray[np.float64] | None = None
    true_cov: NDArray[np.float64] | None = None
    wanted = {methods.f, methods.g}
    if wanted & {Forecaster.GARCH_TRUE, Forecaster.GARCH_TRUE_MC}:
        if not isinstance(config.dgp, GarchParams):
            raise ConfigError("true GARCH forecasts need a [garch] study")
        if cond_var is not None:
            true_var = finite_array(cond_var, "cond_var")
        else:
            true_var = garch_variance_path(config.dgp, target, config.dgp.unconditional_variance)
    if Forecaster.DCC_TRUE in wanted:
        if not isinstance(config.dgp, DccParams) or assets is None:
            raise ConfigError("true DCC forecasts need a [dcc] study with two assets")
        true_cov = np.asarray(h_path) if h_path is not None else filter_dcc(config.dgp, assets)

    origins = window - 1 + np.arange(n_origins)
    shape = (len(config.horizons), len(config.alphas), n_origins)
    out = {side: np.empty(shape) for side in SIDES}
    states = {side: _RollingState() for side in SIDES}
    rngs = {side: derive_rng(seed, "rolling-mc", index) for index, side in enumerate(SIDES)}
    z = np.array([normal_quantile(alpha) for alpha in config.alphas])

    for i, t in enumerate(origins.tolist()):
        refit = i % config.refit_every == 0
        lo = t - window + 1
        y_window = target[lo : t + 1]
        for index, side in enumerate(SIDES):
            method = methods.f if side == "f" else methods.g
            state = states[side]
            if side == "g" and methods.g == methods.f and method != Forecaster.GARCH_TRUE_MC:
                out["g"][:, :, i] = out["f"][:, :, i]
                continue
            if method == Forecaster.UNCONDITIONAL_EMPIRICAL:
                for k, h in enumerate(config.horizons):
                    pooled = aggregate_h_step(y_window, h, config.aggregation)
                    out[side][k, :, i] = [empirical_quantile(pooled, a) for a in config.alphas]
                continue
            if method == Forecaster.SQRT_TIME:
                m_hat = compensated_mean(y_window)
                s_hat = float(np.std(y_window, ddof=1))
                for k, h in enumerate(config.horizons):
                    out[side][k, :, i] = math.sqrt(h) * s_hat * z + h * m_hat
                continue
            if method in (Forecaster.DCC_TRUE, Forecaster.DCC_FITTED):
                if method == Forecaster.DCC_TRUE:
                    assert true_cov is not None
                    covariance = true_cov[t + 1]
                else:
                    assert assets is not None
                    covariance = _window_next_cov(assets[lo : t + 1], state, refit)
                weights = config.portfolio.weights
                variance = float(weights @ covariance @ weights)
                out[side][0, :, i] = math.sqrt(variance) * z
                continue
            if method in (Forecaster.GARCH_TRUE, Forecaster.GARCH_TRUE_MC):
                assert true_var is not None and isinstance(config.dgp, GarchParams)
                params, next_var = config.dgp, float(true_var[t + 1])
            else:
                params, next_var = _window_next_var(y_window, state, refit)
            for k, h in enumerate(config.horizons):
                if h == 1 and method != Forecaster.GARCH_TRUE_MC:
                    out[side][k, :, i] = math.sqrt(next_var) * z
                else:
                    out[side][k, :, i] = forecast_quantiles_mc_levels(
                        params, np.array([next_var]), h, config.alphas, config.mc_size, rngs[side]
                    )[:, 0]

    pairs: dict[tuple[int, float], ForecastPair] = {}
    for k, h in enumerate(config.horizons):
        realizations = aggregate_h_step(target[window:], h)[:n_origins]
        for j, alpha in enumerate(config.alphas):
            pairs[(h, alpha)] = ForecastPair(
                h, alpha, out["f"][k, j].copy(), out["g"][k, j].copy(), realizations
            )
    return Comparison(
        pairs,
        methods,
        fits=sum(state.fits for state in states.values()),
        boundary_fits=sum(state.boundary_fits for state in states.values()),
    )


# ---------------------------------------------------------------------------
# Power studies


@dataclass(frozen=True)
class ReplicationOutcome:
    n: int
    index: int
    t_stats: Mapping[tuple[int, float], float] = field(default_factory=dict)
    boundary_fits: int = 0
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def _power_replication(task: tuple[ExperimentConfig, MethodPair, int, int]) -> ReplicationOutcome:
    config, methods, n, index = task
    seed = derive_seed(config.seed, "replication", n, index)
    length = config.window + n + config.max_h - 1
    try:
        sample = _simulate_sample(config, length, seed)
        comparison = rolling_comparison(
            sample.asset_returns if sample.asset_returns is not None else sample.returns,
            config,
            methods,
            n,
            cond_var=sample.cond_var,
            h_path=sample.h_path,
            seed=seed,
        )
        scorers = _scorers(config)
        t_stats: dict[tuple[int, float], float] = {}
        for (h, alpha), pair in comparison.pairs.items():
            scorer = scorers[alpha]
            result = dm_test(
                scorer.score(pair.forecasts_f, pair.realizations),
                scorer.score(pair.forecasts_g, pair.realizations),
                h,
            )
            t_stats[(h, alpha)] = result.t_stat
    except InfosetError as exc:
        logger.debug("replication N=%d #%d failed: %s", n, index, exc)
        return ReplicationOutcome(n, index, error=exc.code)
    return ReplicationOutcome(n, index, t_stats, comparison.boundary_fits)


def _run_tasks(
    tasks: Sequence[tuple[ExperimentConfig, MethodPair, int, int]],
    workers: int,
) -> list[ReplicationOutcome]:
    if workers <= 1:
        return [_power_replication(task) for task in tasks]
    chunksize = max(1, len(tasks) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(_power_replication, tasks, chunksize=chunksize))


def power_rows(
    config: ExperimentConfig,
    outcomes: Iterable[ReplicationOutcome],
) -> list[PowerRow]:
    """Rejection frequencies ``T_N > q_{1-level}`` per horizon, level and N."""

    by_n: dict[int, list[ReplicationOutcome]] = {}
    for outcome in outcomes:
        by_n.setdefault(outcome.n, []).append(outcome)
    rows: list[PowerRow] = []
    for n in config.sample_sizes:
        cell = by_n.get(n, [])
        completed = [item for item in cell if not item.failed]
        failures = len(cell) - len(completed)
        boundary = sum(1 for item in completed if item.boundary_fits > 0)
        for h in config.horizons:
            for alpha in config.alphas:
                stats = np.array([item.t_stats[(h, alpha)] for item in completed])
                for level in config.levels:
                    critical = norm.ppf(1.0 - level)
                    power = float(np.mean(stats > critical)) if stats.size else None
                    row = PowerRow(h, alpha, n, level, power, len(cell), len(completed), failures, boundary)
                    if row.flagged:
                        logger.warning(
                            "power cell h=%d alpha=%g N=%d: %d of %d replications failed",
                            h,
                            alpha,
                            n,
                            failures,
                            len(cell),
                        )
                    rows.append(row)
    return rows


def run_power_study(
    config: ExperimentConfig,
    methods: MethodPair | None = None,
) -> ExperimentReport:
    """Power of the one-sided test for every sample size, horizon, level and alpha.

    Each replication simulates ``window + N + max(h) - 1`` observations and
    runs :func:`rolling_comparison`. Failed replications are counted, not
    raised.
    """

    if config.replications < 50:
        raise ConfigError("power studies need at least 50 replications")
    methods = methods or config.methods_for("rolling")
    config.check_methods(methods)
    tasks = [
        (config, methods, n, index)
        for n in config.sample_sizes
        for index in range(config.replications)
    ]
    logger.info(
        "power study: %d replications x %d sample sizes on %d worker(s)",
        config.replications,
        len(config.sample_sizes),
        config.workers,
    )
    outcomes = _run_tasks(tasks, config.workers)
    rows = power_rows(config, outcomes)
    provenance = build_provenance(
        config,
        methods=methods.to_dict(),
        replication_seed="derive_seed(seed, 'replication', N, index)",
    )
    return ExperimentReport("power", provenance, power=tuple(rows))


# ---------------------------------------------------------------------------
# Application


def run_application(
    prices_csv: str | Path | Sequence[str | Path],
    config: ExperimentConfig,
    methods: MethodPair | None = None,
) -> ExperimentReport:
    """Rolling-window comparison on observed prices.

    One price column gives log-returns and a univariate study; two columns
    (in one file or two aligned files) give relative returns and the
    rebalanced-portfolio study.
    """

    paths = [prices_csv] if isinstance(prices_csv, (str, Path)) else list(prices_csv)
    if not paths:
        raise ConfigError("at least one price file is required")
    context = ",".join(str(item) for item in paths)
    try:
        table = load_prices_csv(*paths)
        if len(table.assets) == 1:
            if config.kind != "garch":
                raise ConfigError("a one-asset price file needs a [garch] study")
            series = to_log_returns(table, config.return_scale)
        elif len(table.assets) == 2:
            if config.kind != "dcc":
                raise ConfigError("a two-asset price file needs a [dcc] study")
            series = to_relative_returns(table, config.return_scale)
        else:
            raise InvalidArgumentError("price data must have one or two assets")
        required = config.window + config.max_h + 1
        if table.n < required:
            raise InsufficientSampleError(
                f"{table.n} aligned price rows; at least {required} are required"
            )
        methods = methods or config.methods_for("rolling")
        logger.info("application on %s: %d returns", context, series.n)
        comparison = rolling_comparison(series.values, config, methods)
        scorers = _scorers(config)
        rows: list[ScoreRow] = []
        backtests: list[dict[str, Any]] = []
        for (h, alpha), pair in comparison.pairs.items():
            scores_f = mean_score(pair.forecasts_f, pair.realizations, scorers[alpha])
            scores_g = mean_score(pair.forecasts_g, pair.realizations, scorers[alpha])
            rows.append(ScoreRow.from_scores(h, alpha, scores_f, scores_g, methods))
            backtests += _backtest_entries(pair.forecasts_f, pair.realizations, "f", methods.f, alpha, h)
            backtests += _backtest_entries(pair.forecasts_g, pair.realizations, "g", methods.g, alpha, h)
    except InfosetError as exc:
        raise _with_context(exc, config, path=context)
    provenance = build_provenance(
        config,
        methods=methods.to_dict(),
        sources=list(table.sources),
        skipped_rows=len(table.skipped_lines),
        return_kind=series.kind,
        first_date=str(series.dates[0].date()),
        last_date=str(series.dates[-1].date()),
        fits=comparison.fits,
        boundary_fits=comparison.boundary_fits,
    )
    return ExperimentReport("application", provenance, tuple(rows), backtests=tuple(backtests))


# ---------------------------------------------------------------------------
# Equal-mixture demonstration


@dataclass(frozen=True)
class MixtureSample:
    y: NDArray[np.float64] = field(repr=False)
    component: NDArray[np.bool_] = field(repr=False)
    spec: MixtureSpec

    @property
    def second_mean(self) -> float:
        return normal_quantile(self.spec.alpha) * (1.0 - self.spec.sigma)


def simulate_mixture(spec: MixtureSpec, n: int, seed: int) -> MixtureSample:
    """``Y = B X_1 + (1 - B) X_2`` with ``B ~ Bernoulli(1/2)``.

    ``X_1 ~ N(0, 1)`` and ``X_2 ~ N(q_alpha (1 - sigma), sigma^2)`` share the
    alpha-quantile ``q_alpha``, so knowing ``B`` does not change it.
    """

    n = integer(n, "n", minimum=1)
    rng = derive_rng(seed, "mixture")
    first = rng.random(n) < 0.5
    x1 = rng.standard_normal(n)
    x2 = normal_quantile(spec.alpha) * (1.0 - spec.sigma) + spec.sigma * rng.standard_normal(n)
    return MixtureSample(np.where(first, x1, x2), first, spec)


def _comparison_summary(scores_f: NDArray[np.float64], scores_g: NDArray[np.float64]) -> dict[str, Any]:
    z = scores_f - scores_g
    n = z.shape[0]
    standard_error = float(np.std(z, ddof=1)) / math.sqrt(n)
    diff = compensated_mean(z)
    return {
        "m_f": compensated_mean(scores_f),
        "m_g": compensated_mean(scores_g),
        "diff": diff,
        "standard_error": standard_error,
        "z": diff / standard_error if standard_error > 0.0 else 0.0,
        "dm_test": dm_test(scores_f, scores_g, 1).to_dict(),
    }


def run_mixture_demo(
    spec: MixtureSpec,
    n: int,
    seed: int = 0,
    config: ExperimentConfig | None = None,
) -> ExperimentReport:
    """Quantile scores cannot separate the information sets; the log score can.

    F knows nothing and issues the mixture's alpha-quantile; G observes the
    component and issues that component's quantile. Both equal ``q_alpha``.
    The predictive densities differ, and the log score rewards G.
    """

    n = integer(n, "n")
    if n < MIXTURE_MIN_OBSERVATIONS:
        raise InsufficientSampleError(f"the mixture demo needs n >= {MIXTURE_MIN_OBSERVATIONS}")
    sample = simulate_mixture(spec, n, seed)
    q = normal_quantile(spec.alpha)
    second_mean = sample.second_mean
    component_quantiles = [
        float(norm.ppf(spec.alpha)),
        float(norm.ppf(spec.alpha, loc=second_mean, scale=spec.sigma)),
    ]
    if max(abs(value - q) for value in component_quantiles) > 1e-9:
        raise NumericalFailure("mixture components do not share the alpha-quantile")
    # Both forecasters issue q: the component quantiles coincide with it.
    forecasts = np.full(n, q)
    scorer = QuantileScorer(spec.alpha)
    quantile_f = mean_score(forecasts, sample.y, scorer).score_series.values
    quantile_g = quantile_f.copy()

    log_f = np.asarray(
        log_score_gaussian_mixture(
            [0.5, 0.5], [0.0, second_mean], [1.0, spec.sigma**2], sample.y
        ),
        dtype=np.float64,
    )
    log_g = np.asarray(
        log_score_gaussian(
            np.where(sample.component, 0.0, second_mean),
            np.where(sample.component, 1.0, spec.sigma**2),
            sample.y,
        ),
        dtype=np.float64,
    )
    extras = {
        "mixture": spec.to_dict(),
        "n": n,
        "quantile_value": q,
        "component_quantiles": component_quantiles,
        "quantile_score": _comparison_summary(quantile_f, quantile_g),
        "log_score": _comparison_summary(log_f, log_g),
    }
    if config is not None:
        provenance = build_provenance(config)
    else:
        provenance = {"seed": seed, "mixture": spec.to_dict()}
    return ExperimentReport("mixture", provenance, extras=extras)
