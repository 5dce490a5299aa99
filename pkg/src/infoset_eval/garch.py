"""Univariate GARCH(1,1): simulation, Gaussian QMLE, and VaR forecasters.

Model: ``R_t = sigma_t eps_t`` with ``eps_t`` i.i.d. N(0, 1) and
``sigma_t^2 = kappa + phi R_{t-1}^2 + beta sigma_{t-1}^2``.

Empirical quantiles are the ``ceil(alpha n)``-th order statistic (the
left-continuous empirical inverse) throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import logging
import math
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
import pandas as pd
from scipy.optimize import minimize
from scipy.signal import lfilter
from scipy.special import expit, logit
from scipy.stats import norm

from .errors import DegenerateVarianceError, InvalidArgumentError
from .seeding import derive_rng
from .validation import finite_array, integer, positive_number, probability

logger = logging.getLogger(__name__)

DEFAULT_BURN_IN = 500
DEFAULT_MC_SIZE = 1000
QMLE_MIN_OBSERVATIONS = 100
QMLE_TOLERANCE = 1e-8
# Persistence phi + beta is mapped into (0, PERSISTENCE_CAP); fits at or above
# BOUNDARY_PERSISTENCE are flagged.
PERSISTENCE_CAP = 1.0 - 1e-8
BOUNDARY_PERSISTENCE = 1.0 - 1e-6
MC_CHUNK_CELLS = 2_000_000
ORDER_STATISTIC_SLACK = 1e-9


@dataclass(frozen=True)
class GarchParams:
    kappa: float
    phi: float
    beta: float

    def __post_init__(self) -> None:
        kappa = positive_number(self.kappa, "kappa")
        phi = float(self.phi)
        beta = float(self.beta)
        if not (math.isfinite(phi) and phi >= 0):
            raise InvalidArgumentError("phi must be finite and nonnegative")
        if not (math.isfinite(beta) and beta >= 0):
            raise InvalidArgumentError("beta must be finite and nonnegative")
        if phi + beta >= 1.0:
            raise InvalidArgumentError(
                f"phi + beta = {phi + beta:.6g} violates covariance stationarity (< 1)"
            )
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "beta", beta)

    @property
    def persistence(self) -> float:
        return self.phi + self.beta

    @property
    def unconditional_variance(self) -> float:
        return self.kappa / (1.0 - self.phi - self.beta)

    def next_variance(self, variance: float, last_return: float) -> float:
        return self.kappa + self.phi * last_return * last_return + self.beta * variance

    def to_dict(self) -> dict[str, float]:
        return {"kappa": self.kappa, "phi": self.phi, "beta": self.beta}

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> GarchParams:
        missing = [name for name in ("kappa", "phi", "beta") if name not in payload]
        if missing:
            raise InvalidArgumentError(f"GARCH parameters missing: {', '.join(missing)}")
        return cls(float(payload["kappa"]), float(payload["phi"]), float(payload["beta"]))


GARCH_CONFIGS: Mapping[int, GarchParams] = {
    1: GarchParams(0.01, 0.088, 0.902),
    2: GarchParams(0.02, 0.2, 0.78),
    3: GarchParams(0.05, 0.3, 0.65),
}


@dataclass(frozen=True)
class GarchPath:
    returns: NDArray[np.float64] = field(repr=False)
    cond_var: NDArray[np.float64] = field(repr=False)
    seed: int
    burn_in: int

    def __post_init__(self) -> None:
        if self.returns.shape != self.cond_var.shape:
            raise InvalidArgumentError("returns and conditional variances must align")

    @property
    def n(self) -> int:
        return int(self.returns.shape[0])

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"t": np.arange(self.n), "return": self.returns, "cond_var": self.cond_var}
        )

    def to_csv(self, output_path: str | Path) -> Path:
        output = Path(output_path)
        output.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(output, index=False, float_format="%.17g")
        return output


class ForecastMethod(str, Enum):
    EXACT_NORMAL = "exact_normal"
    MONTE_CARLO = "monte_carlo"
    UNCONDITIONAL_EMPIRICAL = "unconditional_empirical"
    SQRT_TIME_RULE = "sqrt_time_rule"


@dataclass(frozen=True)
class QuantileForecast:
    value: float
    h: int
    alpha: float
    method: ForecastMethod
    t: int | None = None
    mc_size: int | None = None

    def __post_init__(self) -> None:
        integer(self.h, "h", minimum=1)
        probability(self.alpha, "alpha")


# ---------------------------------------------------------------------------
# Helpers


def order_statistic_index(alpha: float, n: int) -> int:
    """1-based index ``ceil(alpha n)`` of the empirical alpha-quantile."""

    return max(1, min(n, math.ceil(alpha * n - ORDER_STATISTIC_SLACK)))


def empirical_quantile(sample: ArrayLike, alpha: float) -> float:
    values = finite_array(sample, "sample")
    alpha = probability(alpha, "alpha")
    k = order_statistic_index(alpha, values.shape[0]) - 1
    return float(np.partition(values, k)[k])


def normal_quantile(alpha: float) -> float:
    return float(norm.ppf(probability(alpha, "alpha")))


def garch_variance_path(
    params: GarchParams,
    returns: ArrayLike,
    initial_var: float,
) -> NDArray[np.float64]:
    """Run the variance recursion over observed returns.

    Returns ``n + 1`` values: ``sigma_0^2 = initial_var`` through
    ``sigma_n^2``, the one-step-ahead variance after the last observation.
    """

    r = finite_array(returns, "returns")
    initial_var = positive_number(initial_var, "initial_var")
    drive = params.kappa + params.phi * r * r
    tail, _ = lfilter([1.0], [1.0, -params.beta], drive, zi=[params.beta * initial_var])
    return np.concatenate(([initial_var], tail))


def aggregate_h_step(returns: ArrayLike, h: int, mode: str = "overlapping") -> NDArray[np.float64]:
    """h-step sums ``R_{t+1} + ... + R_{t+h}``, rolling or in disjoint blocks."""

    r = finite_array(returns, "returns")
    h = integer(h, "h", minimum=1)
    if h > r.shape[0]:
        raise InvalidArgumentError(f"h={h} exceeds the series length {r.shape[0]}")
    if h == 1:
        return r.copy()
    if mode == "overlapping":
        return np.lib.stride_tricks.sliding_window_view(r, h).sum(axis=1)
    if mode == "disjoint":
        usable = (r.shape[0] // h) * h
        return r[:usable].reshape(-1, h).sum(axis=1)
    raise InvalidArgumentError(f"unknown aggregation mode: {mode!r}")


# ---------------------------------------------------------------------------
# Simulation


def simulate_garch(
    params: GarchParams,
    n: int,
    seed: int,
    burn_in: int = DEFAULT_BURN_IN,
) -> GarchPath:
    """Simulate ``n`` returns after discarding ``burn_in`` draws.

    The recursion starts at the stationary variance; identical seeds give
    bit-identical paths.
    """

    n = integer(n, "n", minimum=1)
    burn_in = integer(burn_in, "burn_in")
    total = n + burn_in
    eps = derive_rng(seed, "garch").standard_normal(total).tolist()
    returns = [0.0] * total
    cond_var = [0.0] * total
    kappa, phi, beta = params.kappa, params.phi, params.beta
    variance = params.unconditional_variance
    last = 0.0
    for t in range(total):
        if t > 0:
            variance = kappa + phi * last * last + beta * variance
        last = math.sqrt(variance) * eps[t]
        cond_var[t] = variance
        returns[t] = last
    return GarchPath(np.array(returns[burn_in:]), np.array(cond_var[burn_in:]), seed, burn_in)


# ---------------------------------------------------------------------------
# Estimation


@dataclass(frozen=True)
class GarchFit:
    params: GarchParams
    cond_var_path: NDArray[np.float64] = field(repr=False)
    loglik: float
    next_var: float
    at_boundary: bool
    converged: bool
    iterations: int


def _to_unconstrained(params: GarchParams) -> NDArray[np.float64]:
    persistence = min(max(params.persistence / PERSISTENCE_CAP, 1e-6), 1.0 - 1e-12)
    share = 0.5
    if params.persistence > 0:
        share = min(max(params.phi / params.persistence, 1e-6), 1.0 - 1e-6)
    return np.array([math.log(params.kappa), logit(persistence), logit(share)])


def _from_unconstrained(theta: NDArray[np.float64]) -> tuple[float, float, float]:
    kappa = math.exp(min(float(theta[0]), 50.0))
    persistence = PERSISTENCE_CAP * float(expit(theta[1]))
    share = float(expit(theta[2]))
    return kappa, persistence * share, persistence * (1.0 - share)


def _gaussian_loglik(r: NDArray[np.float64], variances: NDArray[np.float64]) -> float:
    return float(-0.5 * np.sum(np.log(2.0 * math.pi) + np.log(variances) + r * r / variances))


def fit_garch_qmle(
    returns: ArrayLike,
    start: GarchParams | None = None,
) -> GarchFit:
    """Gaussian quasi-maximum-likelihood fit.

    Nelder-Mead in ``(log kappa, logit persistence, logit phi-share)`` keeps
    every iterate inside the stationarity region. The default start is
    ``(0.05 var, 0.1, 0.8)`` and the recursion starts at the sample variance.
    A persistence of at least ``1 - 1e-6`` is flagged, not raised.
    """

    r = finite_array(returns, "returns", minimum=QMLE_MIN_OBSERVATIONS)
    sample_var = float(np.var(r))
    if not sample_var > 0.0:
        raise DegenerateVarianceError("returns have zero sample variance; GARCH is not identified")
    if start is None:
        start = GarchParams(0.05 * sample_var, 0.1, 0.8)
    n = r.shape[0]

    def objective(theta: NDArray[np.float64]) -> float:
        kappa, phi, beta = _from_unconstrained(theta)
        drive = kappa + phi * r[:-1] * r[:-1]
        tail, _ = lfilter([1.0], [1.0, -beta], drive, zi=[beta * sample_var])
        variances = np.concatenate(([sample_var], tail))
        if not np.all(np.isfinite(variances)) or np.any(variances <= 0.0):
            return math.inf
        return -_gaussian_loglik(r, variances) / n

    result = minimize(
        objective,
        _to_unconstrained(start),
        method="Nelder-Mead",
        options={"xatol": 1e-7, "fatol": QMLE_TOLERANCE, "maxiter": 4000},
    )
    kappa, phi, beta = _from_unconstrained(result.x)
    params = GarchParams(kappa, phi, beta)
    path = garch_variance_path(params, r, sample_var)
    at_boundary = params.persistence >= BOUNDARY_PERSISTENCE
    if at_boundary:
        logger.debug("GARCH fit reached the persistence boundary: %.10f", params.persistence)
    return GarchFit(
        params=params,
        cond_var_path=path[:-1],
        loglik=_gaussian_loglik(r, path[:-1]),
        next_var=float(path[-1]),
        at_boundary=at_boundary,
        converged=bool(result.success),
        iterations=int(result.nit),
    )


# ---------------------------------------------------------------------------
# Forecasting


def forecast_quantile_h1(next_var: float, alpha: float, t: int | None = None) -> QuantileForecast:
    """Exact one-step quantile ``sigma_{t+1} q_alpha`` of ``N(0, sigma_{t+1}^2)``."""

    next_var = positive_number(next_var, "next_var")
    value = math.sqrt(next_var) * normal_quantile(alpha)
    return QuantileForecast(value, 1, alpha, ForecastMethod.EXACT_NORMAL, t)


def simulate_cumulative_returns(
    params: GarchParams,
    next_vars: NDArray[np.float64],
    h: int,
    m: int,
    rng: np.random.Generator,
) -> NDArray[np.float64]:
    """``m`` draws of ``R_{t+1} + ... + R_{t+h}`` for each starting variance.

    Returns an array of shape ``(len(next_vars), m)``.
    """

    variance = np.repeat(next_vars[:, None], m, axis=1)
    total = np.zeros_like(variance)
    for step in range(h):
        draw = np.sqrt(variance) * rng.standard_normal(variance.shape)
        total += draw
        if step + 1 < h:
            variance = params.kappa + params.phi * draw * draw + params.beta * variance
    return total


def forecast_quantiles_mc(
    params: GarchParams,
    next_vars: ArrayLike,
    h: int,
    alpha: float,
    m: int,
    rng: np.random.Generator,
) -> NDArray[np.float64]:
    """Monte Carlo h-step quantiles for many forecast origins at once."""

    return forecast_quantiles_mc_levels(params, next_vars, h, (alpha,), m, rng)[0]


def forecast_quantiles_mc_levels(
    params: GarchParams,
    next_vars: ArrayLike,
    h: int,
    alphas: Sequence[float],
    m: int,
    rng: np.random.Generator,
) -> NDArray[np.float64]:
    """Like :func:`forecast_quantiles_mc` for several levels from the same draws.

    Returns shape ``(len(alphas), len(next_vars))``.
    """

    starts = finite_array(next_vars, "next_vars")
    if np.any(starts <= 0):
        raise InvalidArgumentError("conditional variances must be positive")
    h = integer(h, "h", minimum=1)
    m = integer(m, "m", minimum=1)
    levels = [probability(alpha, "alpha") for alpha in alphas]
    if not levels:
        raise InvalidArgumentError("at least one level is required")
    kth = [order_statistic_index(alpha, m) - 1 for alpha in levels]
    chunk = max(1, MC_CHUNK_CELLS // m)
    out = np.empty((len(levels), starts.shape[0]))
    for begin in range(0, starts.shape[0], chunk):
        block = simulate_cumulative_returns(params, starts[begin : begin + chunk], h, m, rng)
        block.partition(sorted(set(kth)), axis=1)
        out[:, begin : begin + chunk] = block[:, kth].T
    return out


def forecast_quantile_mc(
    params: GarchParams,
    state: tuple[float, float],
    h: int,
    alpha: float,
    m: int = DEFAULT_MC_SIZE,
    seed: int = 0,
    t: int | None = None,
) -> QuantileForecast:
    """Empirical alpha-quantile of ``m`` simulated h-step cumulative returns.

    ``state`` is ``(sigma_t^2, R_t)``; the first simulated variance is
    ``kappa + phi R_t^2 + beta sigma_t^2``.
    """

    variance, last_return = state
    variance = positive_number(variance, "sigma_t^2")
    last_return = float(last_return)
    if not math.isfinite(last_return):
        raise InvalidArgumentError("R_t must be finite")
    h = integer(h, "h", minimum=2)
    m = integer(m, "m", minimum=100)
    next_var = params.next_variance(variance, last_return)
    value = forecast_quantiles_mc(
        params, np.array([next_var]), h, alpha, m, derive_rng(seed, "mc")
    )[0]
    return QuantileForecast(float(value), h, alpha, ForecastMethod.MONTE_CARLO, t, m)


def unconditional_quantile(
    h_step_returns: ArrayLike,
    alpha: float,
    h: int = 1,
) -> QuantileForecast:
    """The ``ceil(alpha n)``-th order statistic of an h-step return sample."""

    values = finite_array(h_step_returns, "h_step_returns")
    return QuantileForecast(
        empirical_quantile(values, alpha), h, alpha, ForecastMethod.UNCONDITIONAL_EMPIRICAL
    )


def sqrt_time_rule(
    mean_1step: float,
    sd_1step: float,
    h: int,
    alpha: float,
    t: int | None = None,
) -> QuantileForecast:
    """``sqrt(h) s q_alpha + h m`` from one-step mean and standard deviation."""

    mean_1step = float(mean_1step)
    if not math.isfinite(mean_1step):
        raise InvalidArgumentError("mean_1step must be finite")
    sd_1step = positive_number(sd_1step, "sd_1step")
    h = integer(h, "h", minimum=1)
    value = math.sqrt(h) * sd_1step * normal_quantile(alpha) + h * mean_1step
    return QuantileForecast(value, h, alpha, ForecastMethod.SQRT_TIME_RULE, t)

