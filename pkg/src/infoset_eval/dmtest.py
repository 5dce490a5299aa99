"""One-sided test for the value of a larger information set.

The score differential ``Z_n = S(F-forecast_n, Y_n) - S(G-forecast_n, Y_n)``
has a positive mean when the larger information set G forecasts better.
``T_N = sqrt(N) M_N / sigma_hat`` is compared with the upper normal tail.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import logging
import math
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.stats import norm

from .errors import DegenerateVarianceError, InsufficientSampleError, InvalidArgumentError
from .scoring import ScoreSeries, compensated_mean
from .serialization import schema_version, seal
from .validation import finite_array, integer

logger = logging.getLogger(__name__)

DM_TEST_SCHEMA_VERSION = schema_version("dm-test-result")


class LongRunEstimator(str, Enum):
    TRUNCATED = "truncated"
    BARTLETT = "bartlett"


@dataclass(frozen=True)
class ScoreDifferentialSeries:
    z: NDArray[np.float64] = field(repr=False)
    h: int = 1

    def __post_init__(self) -> None:
        z = finite_array(self.z, "score differentials").copy()
        z.setflags(write=False)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "h", integer(self.h, "h", minimum=1))

    @property
    def n(self) -> int:
        return int(self.z.shape[0])


@dataclass(frozen=True)
class LongRunVariance:
    variance: float
    lag: int
    centered: bool
    estimator: LongRunEstimator
    fallback: bool


@dataclass(frozen=True)
class DmTestResult:
    m_n: float
    sigma_hat: float
    t_stat: float
    p_value: float
    n: int
    truncation_lag: int
    fallback_flag: bool = False
    identical_forecasts: bool = False
    estimator: LongRunEstimator = LongRunEstimator.TRUNCATED

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_value <= 1.0:
            raise InvalidArgumentError("p_value must lie in [0, 1]")
        if not math.isfinite(self.t_stat):
            raise InvalidArgumentError("t_stat must be finite")

    def rejects(self, level: float) -> bool:
        """Reject H (no gain from G) when ``T_N > q_{1-level}``."""

        if not 0.0 < level <= 1.0:
            raise InvalidArgumentError("level must lie in (0, 1]")
        return bool(self.t_stat > norm.ppf(1.0 - level))

    def to_dict(self) -> dict[str, Any]:
        return {
            "m_n": self.m_n,
            "sigma_hat": self.sigma_hat,
            "t_stat": self.t_stat,
            "p_value": self.p_value,
            "n": self.n,
            "truncation_lag": self.truncation_lag,
            "fallback_flag": self.fallback_flag,
            "identical_forecasts": self.identical_forecasts,
            "estimator": self.estimator.value,
        }

    def to_artifact(self) -> dict[str, Any]:
        return seal(
            {
                "schema_version": DM_TEST_SCHEMA_VERSION,
                "artifact_type": "dm_test_result",
                **self.to_dict(),
            }
        )


def score_differentials(
    scores_f: ScoreSeries | ArrayLike,
    scores_g: ScoreSeries | ArrayLike,
    h: int = 1,
) -> ScoreDifferentialSeries:
    """F-score minus G-score, elementwise."""

    f = scores_f.values if isinstance(scores_f, ScoreSeries) else finite_array(scores_f, "scores_f")
    g = scores_g.values if isinstance(scores_g, ScoreSeries) else finite_array(scores_g, "scores_g")
    if f.shape[0] != g.shape[0]:
        raise InvalidArgumentError(
            f"score series must have equal lengths, got {f.shape[0]} and {g.shape[0]}"
        )
    return ScoreDifferentialSeries(f - g, h)


def _autocovariances(z: NDArray[np.float64], lag: int, center: bool) -> NDArray[np.float64]:
    n = z.shape[0]
    x = z - compensated_mean(z) if center else z
    gammas = np.empty(lag + 1)
    for k in range(lag + 1):
        gammas[k] = float(np.dot(x[k:], x[: n - k])) / n
    return gammas


def long_run_variance(
    z: ScoreDifferentialSeries | ArrayLike,
    lag: int | None = None,
    center: bool = True,
    estimator: LongRunEstimator | str = LongRunEstimator.TRUNCATED,
) -> LongRunVariance:
    """``gamma_0 + 2 sum_{k=1..lag} w_k gamma_k``.

    The truncated estimator uses weight one for lags 1..lag inclusive (default
    lag ``2h``); ``bartlett`` uses ``1 - k/(lag+1)``. A nonpositive truncated
    sum falls back to ``gamma_0`` with ``fallback`` set. A zero ``gamma_0``
    raises :class:`DegenerateVarianceError`.
    """

    series = z if isinstance(z, ScoreDifferentialSeries) else ScoreDifferentialSeries(z)
    estimator = LongRunEstimator(estimator)
    lag = 2 * series.h if lag is None else integer(lag, "lag")
    n = series.n
    if n < 2:
        raise InsufficientSampleError("long-run variance needs at least 2 observations")
    if n <= lag:
        raise InvalidArgumentError(f"truncation lag {lag} must be smaller than n={n}")
    gammas = _autocovariances(series.z, lag, center)
    if estimator == LongRunEstimator.BARTLETT:
        weights = 1.0 - np.arange(1, lag + 1) / (lag + 1.0)
    else:
        weights = np.ones(lag)
    variance = float(gammas[0] + 2.0 * np.dot(weights, gammas[1:]))
    fallback = False
    if variance <= 0.0:
        logger.debug("long-run variance %.6g <= 0 at lag %d; using gamma_0", variance, lag)
        variance = float(gammas[0])
        fallback = True
    if variance <= 0.0:
        raise DegenerateVarianceError("score differentials have zero variance")
    return LongRunVariance(variance, lag, center, estimator, fallback)


def dm_test(
    scores_f: ScoreSeries | ArrayLike,
    scores_g: ScoreSeries | ArrayLike,
    h: int = 1,
    *,
    lag: int | None = None,
    center: bool = True,
    estimator: LongRunEstimator | str = LongRunEstimator.TRUNCATED,
) -> DmTestResult:
    """Test H: the larger information set G brings no improvement in mean score."""

    series = score_differentials(scores_f, scores_g, h)
    n = series.n
    if n < 4 * series.h:
        raise InsufficientSampleError(f"dm_test needs n >= 4h, got n={n}, h={series.h}")
    lag = 2 * series.h if lag is None else lag
    estimator = LongRunEstimator(estimator)
    m_n = compensated_mean(series.z)
    if not np.any(series.z):
        return DmTestResult(
            m_n=0.0,
            sigma_hat=0.0,
            t_stat=0.0,
            p_value=1.0,
            n=n,
            truncation_lag=lag,
            identical_forecasts=True,
            estimator=estimator,
        )
    lrv = long_run_variance(series, lag, center, estimator)
    sigma_hat = math.sqrt(lrv.variance)
    t_stat = math.sqrt(n) * m_n / sigma_hat
    return DmTestResult(
        m_n=m_n,
        sigma_hat=sigma_hat,
        t_stat=t_stat,
        p_value=float(norm.sf(t_stat)),
        n=n,
        truncation_lag=lag,
        fallback_flag=lrv.fallback,
        estimator=estimator,
    )
