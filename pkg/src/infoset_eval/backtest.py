"""Exceedance backtests and the expected-shortfall identity.

Ideal one-step quantile forecasts give exceedance indicators that are i.i.d.
Bernoulli with the nominal rate. Coverage alone does not certify a forecast
stream, so the independence test looks at transitions between ``I_{t-lag}``
and ``I_t``; lags of at least ``h`` apply to h-step forecasts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import logging
import math
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import xlogy
from scipy.stats import chi2, norm

from .errors import DegenerateVarianceError, InsufficientSampleError, InvalidArgumentError
from .scoring import compensated_mean, quantile_score_sstar
from .serialization import schema_version, seal
from .validation import finite_array, integer, probability, same_length

logger = logging.getLogger(__name__)

BACKTEST_SCHEMA_VERSION = schema_version("backtest-report")
COVERAGE_MIN_OBSERVATIONS = 30
INDEPENDENCE_MIN_OBSERVATIONS = 100


class Orientation(str, Enum):
    LOWER_TAIL = "lower_tail"
    UPPER_TAIL = "upper_tail"


@dataclass(frozen=True)
class ExceedanceSeries:
    indicators: NDArray[np.int8] = field(repr=False)
    alpha: float
    h: int = 1
    orientation: Orientation = Orientation.LOWER_TAIL

    def __post_init__(self) -> None:
        values = np.asarray(self.indicators)
        if values.ndim != 1 or values.shape[0] < 1:
            raise InvalidArgumentError("indicators must be a nonempty vector")
        if not np.all((values == 0) | (values == 1)):
            raise InvalidArgumentError("indicators must be 0 or 1")
        values = values.astype(np.int8)
        values.setflags(write=False)
        object.__setattr__(self, "indicators", values)
        object.__setattr__(self, "alpha", probability(self.alpha, "alpha"))
        object.__setattr__(self, "h", integer(self.h, "h", minimum=1))
        object.__setattr__(self, "orientation", Orientation(self.orientation))

    @property
    def n(self) -> int:
        return int(self.indicators.shape[0])

    @property
    def expected_rate(self) -> float:
        """Nominal exceedance probability: ``alpha`` below, ``1 - alpha`` above."""

        if self.orientation == Orientation.LOWER_TAIL:
            return self.alpha
        return 1.0 - self.alpha

    @property
    def empirical_rate(self) -> float:
        return float(np.mean(self.indicators))


def exceedance_indicators(
    forecasts: ArrayLike,
    realizations: ArrayLike,
    orientation: Orientation | str = Orientation.LOWER_TAIL,
    *,
    alpha: float,
    h: int = 1,
) -> ExceedanceSeries:
    """``1{Y < forecast}`` (lower tail) or ``1{Y > forecast}`` (upper tail)."""

    x = finite_array(forecasts, "forecasts")
    y = finite_array(realizations, "realizations")
    same_length(x, y, "forecasts and realizations")
    orientation = Orientation(orientation)
    hits = y < x if orientation == Orientation.LOWER_TAIL else y > x
    return ExceedanceSeries(hits.astype(np.int8), alpha, h, orientation)


@dataclass(frozen=True)
class CoverageResult:
    z: float
    p_value: float
    empirical_rate: float
    expected_rate: float
    n: int


def coverage_test(series: ExceedanceSeries) -> CoverageResult:
    """Two-sided normal test of the exceedance rate against its nominal value."""

    n = series.n
    if n < COVERAGE_MIN_OBSERVATIONS:
        raise InsufficientSampleError(
            f"coverage_test needs at least {COVERAGE_MIN_OBSERVATIONS} indicators, got {n}"
        )
    rate = series.empirical_rate
    target = series.expected_rate
    z = math.sqrt(n) * (rate - target) / math.sqrt(target * (1.0 - target))
    return CoverageResult(z, float(min(1.0, 2.0 * norm.sf(abs(z)))), rate, target, n)


@dataclass(frozen=True)
class IndependenceResult:
    lr: float
    p_value: float
    lag: int
    transitions: tuple[int, int, int, int]
    degenerate: bool = False

    def to_dict(self) -> dict[str, Any]:
        n00, n01, n10, n11 = self.transitions
        return {
            "lr": self.lr,
            "p_value": self.p_value,
            "lag": self.lag,
            "transitions": {"n00": n00, "n01": n01, "n10": n10, "n11": n11},
            "degenerate": self.degenerate,
        }


def _binary_loglik(zeros: float, ones: float) -> float:
    total = zeros + ones
    if total == 0:
        return 0.0
    p = ones / total
    return float(xlogy(zeros, 1.0 - p) + xlogy(ones, p))


def independence_test(series: ExceedanceSeries, lag: int = 1) -> IndependenceResult:
    """Markov likelihood-ratio test on transitions ``I_{t-lag} -> I_t``.

    The alternative lets ``P(I_t = 1)`` depend on ``I_{t-lag}``; the statistic
    is asymptotically chi-square with one degree of freedom. Empty transition
    cells contribute ``0 log 0 = 0``. A series in a single state cannot be
    tested and returns ``p = 1`` flagged as degenerate.
    """

    lag = integer(lag, "lag", minimum=1)
    n = series.n
    if n < INDEPENDENCE_MIN_OBSERVATIONS:
        raise InsufficientSampleError(
            f"independence_test needs at least {INDEPENDENCE_MIN_OBSERVATIONS} indicators, got {n}"
        )
    if lag >= n:
        raise InvalidArgumentError(f"lag {lag} must be smaller than n={n}")
    values = series.indicators
    previous, current = values[:-lag], values[lag:]
    n00 = int(np.count_nonzero((previous == 0) & (current == 0)))
    n01 = int(np.count_nonzero((previous == 0) & (current == 1)))
    n10 = int(np.count_nonzero((previous == 1) & (current == 0)))
    n11 = int(np.count_nonzero((previous == 1) & (current == 1)))
    transitions = (n00, n01, n10, n11)
    if n01 + n11 == 0 or n00 + n10 == 0:
        return IndependenceResult(0.0, 1.0, lag, transitions, degenerate=True)
    restricted = _binary_loglik(n00 + n10, n01 + n11)
    markov = _binary_loglik(n00, n01) + _binary_loglik(n10, n11)
    lr = max(0.0, -2.0 * (restricted - markov))
    return IndependenceResult(lr, float(chi2.sf(lr, df=1)), lag, transitions)


@dataclass(frozen=True)
class IndependenceScan:
    results: tuple[IndependenceResult, ...]
    min_p: float
    adjusted_p: float
    worst_lag: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "max_lag": len(self.results),
            "min_p": self.min_p,
            "adjusted_p": self.adjusted_p,
            "worst_lag": self.worst_lag,
        }


def independence_scan(series: ExceedanceSeries, max_lag: int) -> IndependenceScan:
    """Run :func:`independence_test` at lags ``1..max_lag``.

    The smallest p-value is Bonferroni-adjusted by ``max_lag``. Periodic
    streams that look independent at lag one are caught at their period.
    """

    max_lag = integer(max_lag, "max_lag", minimum=1)
    results = tuple(independence_test(series, lag) for lag in range(1, max_lag + 1))
    worst = min(results, key=lambda item: item.p_value)
    return IndependenceScan(
        results=results,
        min_p=worst.p_value,
        adjusted_p=min(1.0, worst.p_value * max_lag),
        worst_lag=worst.lag,
    )


def indicator_autocorrelations(series: ExceedanceSeries, max_lag: int) -> NDArray[np.float64]:
    """Sample autocorrelations of the indicators at lags ``1..max_lag``."""

    max_lag = integer(max_lag, "max_lag", minimum=1)
    n = series.n
    if max_lag >= n:
        raise InvalidArgumentError(f"max_lag {max_lag} must be smaller than n={n}")
    x = series.indicators.astype(np.float64)
    x = x - x.mean()
    gamma_0 = float(np.dot(x, x))
    if gamma_0 == 0.0:
        raise DegenerateVarianceError("indicator series is constant")
    return np.array([float(np.dot(x[k:], x[: n - k])) / gamma_0 for k in range(1, max_lag + 1)])


@dataclass(frozen=True)
class EsIdentityCheck:
    mean_score: float
    mean_es: float
    rel_error: float
    n: int


def normal_tail_expectation(
    forecasts: ArrayLike,
    mu: ArrayLike,
    sigma: ArrayLike,
    alpha: float,
) -> NDArray[np.float64]:
    """``-(1/alpha) E[Y 1{Y <= x}]`` for ``Y ~ N(mu, sigma^2)``."""

    x = np.asarray(forecasts, dtype=np.float64)
    m = np.asarray(mu, dtype=np.float64)
    s = np.asarray(sigma, dtype=np.float64)
    if np.any(~np.isfinite(s)) or np.any(s <= 0.0):
        raise InvalidArgumentError("sigma must be positive and finite everywhere")
    z = (x - m) / s
    return -(m * norm.cdf(z) - s * norm.pdf(z)) / alpha


def es_identity_check(
    forecasts: ArrayLike,
    realizations: ArrayLike,
    mu: ArrayLike,
    sigma: ArrayLike,
    alpha: float,
) -> EsIdentityCheck:
    """Compare the mean S* score with the average normal lower-tail expectation.

    For ideal conditional quantiles the expected S* score equals the
    lower-tail expected shortfall of the conditional distribution.
    """

    x = finite_array(forecasts, "forecasts")
    y = finite_array(realizations, "realizations")
    same_length(x, y, "forecasts and realizations")
    alpha = probability(alpha, "alpha")
    m = np.broadcast_to(np.asarray(mu, dtype=np.float64), x.shape)
    s = np.broadcast_to(np.asarray(sigma, dtype=np.float64), x.shape)
    mean_score = compensated_mean(quantile_score_sstar(x, y, alpha))
    mean_es = compensated_mean(normal_tail_expectation(x, m, s, alpha))
    rel_error = abs(mean_score - mean_es) / abs(mean_es) if mean_es != 0.0 else math.inf
    return EsIdentityCheck(mean_score, mean_es, rel_error, int(x.shape[0]))


@dataclass(frozen=True)
class BacktestReport:
    empirical_rate: float
    coverage_z: float
    coverage_p: float
    independence_lr: float
    independence_p: float
    n: int
    alpha: float
    h: int
    orientation: Orientation
    expected_rate: float
    independence_lag: int
    independence_degenerate: bool
    scan: IndependenceScan | None = None

    def passes(self, level: float) -> bool:
        """Neither coverage nor independence rejects at ``level``."""

        level = probability(level, "level")
        ok = self.coverage_p >= level and self.independence_p >= level
        if self.scan is not None:
            ok = ok and self.scan.adjusted_p >= level
        return ok

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "empirical_rate": self.empirical_rate,
            "expected_rate": self.expected_rate,
            "coverage_z": self.coverage_z,
            "coverage_p": self.coverage_p,
            "independence_lr": self.independence_lr,
            "independence_p": self.independence_p,
            "independence_lag": self.independence_lag,
            "independence_degenerate": self.independence_degenerate,
            "n": self.n,
            "alpha": self.alpha,
            "h": self.h,
            "orientation": self.orientation.value,
        }
        if self.scan is not None:
            payload["scan"] = self.scan.to_dict()
        return payload

    def to_artifact(self) -> dict[str, Any]:
        return seal(
            {
                "schema_version": BACKTEST_SCHEMA_VERSION,
                "artifact_type": "backtest_report",
                **self.to_dict(),
            }
        )


def backtest_report(
    series: ExceedanceSeries,
    lag: int | None = None,
    max_lag: int | None = None,
) -> BacktestReport:
    """Coverage plus independence at ``lag`` (default ``h``), optionally a lag scan."""

    lag = series.h if lag is None else lag
    coverage = coverage_test(series)
    independence = independence_test(series, lag)
    scan = independence_scan(series, max_lag) if max_lag is not None else None
    if independence.degenerate:
        logger.warning("exceedance series has a single state; independence is untestable")
    return BacktestReport(
        empirical_rate=coverage.empirical_rate,
        coverage_z=coverage.z,
        coverage_p=coverage.p_value,
        independence_lr=independence.lr,
        independence_p=independence.p_value,
        n=series.n,
        alpha=series.alpha,
        h=series.h,
        orientation=series.orientation,
        expected_rate=series.expected_rate,
        independence_lag=lag,
        independence_degenerate=independence.degenerate,
        scan=scan,
    )
