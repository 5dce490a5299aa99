"""Strictly consistent scoring functions and their mean-score aggregation.

Quantile scores use the indicator ``1{x >= y}`` (weak inequality on the
forecast side) everywhere. Positive ``S*`` values are losses: for ideal
quantile forecasts the expected ``S*`` is the lower-tail expected shortfall.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
import math
from typing import Any, Callable, Mapping, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq
from scipy.special import logsumexp

from .errors import InvalidArgumentError
from .validation import finite_array, probability, same_length

FloatOrArray = Union[float, NDArray[np.float64]]

HALF_LOG_TWO_PI = 0.5 * math.log(2.0 * math.pi)
MONOTONICITY_GRID_POINTS = 1001
EXPECTILE_TOLERANCE = 1e-10
DEFAULT_G_SUPPORT = (-1.0e3, 1.0e3)
EXP_G_SUPPORT = (-50.0, 50.0)


def _as_floats(value: ArrayLike, field_name: str) -> NDArray[np.float64]:
    try:
        array = np.asarray(value, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"{field_name} must be numeric") from exc
    if not np.all(np.isfinite(array)):
        raise InvalidArgumentError(f"{field_name} must be finite")
    return array


def _output(result: NDArray[np.float64]) -> FloatOrArray:
    if result.ndim == 0:
        return float(result)
    return result


def compensated_mean(values: ArrayLike) -> float:
    """Mean with exactly rounded (``math.fsum``) accumulation."""

    array = np.asarray(values, dtype=np.float64).ravel()
    if array.size == 0:
        raise InvalidArgumentError("cannot average an empty series")
    return math.fsum(array.tolist()) / array.size


class MonotoneFamily(str, Enum):
    IDENTITY = "identity"
    INVERSE_LEVEL = "inverse_level"
    EXP = "exp"
    TABULATED = "tabulated"


@dataclass(frozen=True)
class MonotoneFunction:
    """Serializable strictly increasing transform ``g``.

    ``inverse_level`` is ``g(x) = x / alpha`` with the scorer's level;
    ``tabulated`` interpolates linearly between ``knots`` and ``values`` and is
    only defined on ``[knots[0], knots[-1]]``.
    """

    family: MonotoneFamily = MonotoneFamily.IDENTITY
    knots: tuple[float, ...] = ()
    values: tuple[float, ...] = ()
    support: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "family", MonotoneFamily(self.family))
        if self.family == MonotoneFamily.TABULATED:
            if len(self.knots) < 2 or len(self.knots) != len(self.values):
                raise InvalidArgumentError(
                    "tabulated g needs at least two knots and one value per knot"
                )
            knots = np.asarray(self.knots, dtype=np.float64)
            if not np.all(np.isfinite(knots)) or not np.all(np.diff(knots) > 0):
                raise InvalidArgumentError("tabulated g knots must be finite and increasing")
            object.__setattr__(self, "support", (float(knots[0]), float(knots[-1])))
        elif self.support is None:
            object.__setattr__(self, "support", self.default_support())
        low, high = self.support  # type: ignore[misc]
        if not (math.isfinite(low) and math.isfinite(high) and low < high):
            raise InvalidArgumentError("g support must be a finite interval with low < high")

    def bind(self, alpha: float) -> Callable[[NDArray[np.float64]], NDArray[np.float64]]:
        if self.family == MonotoneFamily.IDENTITY:
            return lambda x: x
        if self.family == MonotoneFamily.INVERSE_LEVEL:
            return lambda x: x / alpha
        if self.family == MonotoneFamily.EXP:
            return np.exp
        knots = np.asarray(self.knots, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        low, high = self.support  # type: ignore[misc]

        def tabulated(x: NDArray[np.float64]) -> NDArray[np.float64]:
            if np.any((x < low) | (x > high)):
                raise InvalidArgumentError(
                    f"tabulated g is only defined on [{low}, {high}]"
                )
            return np.interp(x, knots, values)

        return tabulated

    def default_support(self) -> tuple[float, float]:
        return EXP_G_SUPPORT if self.family == MonotoneFamily.EXP else DEFAULT_G_SUPPORT

    def check_strictly_increasing(self, alpha: float) -> None:
        low, high = self.support  # type: ignore[misc]
        grid = np.linspace(low, high, MONOTONICITY_GRID_POINTS)
        with np.errstate(over="ignore"):
            image = self.bind(alpha)(grid)
        finite = np.isfinite(image)
        if not np.all(np.diff(image[finite]) > 0):
            raise InvalidArgumentError(
                f"g ({self.family.value}) is not strictly increasing on its support"
            )

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"family": self.family.value}
        if self.family == MonotoneFamily.TABULATED:
            payload["knots"] = list(self.knots)
            payload["values"] = list(self.values)
        elif self.support != self.default_support():
            payload["support"] = list(self.support)  # type: ignore[arg-type]
        return payload

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> MonotoneFunction:
        try:
            family = MonotoneFamily(payload.get("family", "identity"))
        except ValueError as exc:
            raise InvalidArgumentError(f"unknown g family: {payload.get('family')!r}") from exc
        support = payload.get("support")
        return cls(
            family=family,
            knots=tuple(float(item) for item in payload.get("knots", ())),
            values=tuple(float(item) for item in payload.get("values", ())),
            support=None if support is None else (float(support[0]), float(support[1])),
        )


class QuantileForm(str, Enum):
    SSTAR = "quantile_sstar"
    GENERAL_G = "quantile_general"


# ---------------------------------------------------------------------------
# Pointwise scores


def quantile_score_sstar(x: ArrayLike, y: ArrayLike, alpha: float) -> FloatOrArray:
    """``S*(x, y) = x(1{x>=y}/alpha - 1) - y 1{x>=y}/alpha``; may be negative."""

    alpha = probability(alpha, "alpha")
    xs = _as_floats(x, "forecast")
    ys = _as_floats(y, "realization")
    hit = (xs >= ys).astype(np.float64)
    return _output(xs * (hit / alpha - 1.0) - ys * hit / alpha)


def quantile_score_general(
    x: ArrayLike,
    y: ArrayLike,
    alpha: float,
    g: MonotoneFunction | None = None,
) -> FloatOrArray:
    """``S(x, y) = (1{x>=y} - alpha)(g(x) - g(y))``; nonnegative, zero iff x == y."""

    alpha = probability(alpha, "alpha")
    g = g or MonotoneFunction()
    xs = _as_floats(x, "forecast")
    ys = _as_floats(y, "realization")
    transform = g.bind(alpha)
    hit = (xs >= ys).astype(np.float64)
    return _output((hit - alpha) * (transform(xs) - transform(ys)))


def expectile_score(tau: ArrayLike, y: ArrayLike, alpha: float) -> FloatOrArray:
    """Asymmetric squared loss ``|1{tau>=y} - alpha| (y - tau)^2``."""

    alpha = probability(alpha, "alpha")
    taus = _as_floats(tau, "forecast")
    ys = _as_floats(y, "realization")
    hit = (taus >= ys).astype(np.float64)
    return _output(np.abs(hit - alpha) * (ys - taus) ** 2)


def log_score_gaussian(mu: ArrayLike, var: ArrayLike, y: ArrayLike) -> FloatOrArray:
    """Negative log predictive density of ``N(mu, var)`` at ``y``."""

    means = _as_floats(mu, "mu")
    variances = _as_floats(var, "var")
    ys = _as_floats(y, "realization")
    if np.any(variances <= 0):
        raise InvalidArgumentError("predictive variance must be positive")
    sigma = np.sqrt(variances)
    z = (ys - means) / sigma
    return _output(HALF_LOG_TWO_PI + 0.5 * z * z + np.log(sigma))


def log_score_gaussian_mixture(
    weights: ArrayLike,
    means: ArrayLike,
    variances: ArrayLike,
    y: ArrayLike,
) -> FloatOrArray:
    """Negative log density of a finite Gaussian mixture at ``y``."""

    w = finite_array(weights, "weights")
    mu = finite_array(means, "means")
    var = finite_array(variances, "variances")
    if not (w.shape == mu.shape == var.shape):
        raise InvalidArgumentError("mixture weights, means and variances must align")
    if np.any(w < 0) or not math.isclose(float(w.sum()), 1.0, abs_tol=1e-12):
        raise InvalidArgumentError("mixture weights must be nonnegative and sum to 1")
    if np.any(var <= 0):
        raise InvalidArgumentError("mixture variances must be positive")
    ys = _as_floats(y, "realization")
    component = -np.asarray(log_score_gaussian(mu, var, ys[..., None]), dtype=np.float64)
    with np.errstate(divide="ignore"):
        log_w = np.log(w)
    return _output(-logsumexp(component + log_w, axis=-1))


def compute_expectile(sample: ArrayLike, alpha: float) -> float:
    """Empirical alpha-expectile by Brent's method on the defining equation.

    Solves ``alpha * sum((y - tau)+) = (1 - alpha) * sum((tau - y)+)`` on the
    bracket ``[min(y), max(y)]`` to absolute tolerance 1e-10.
    """

    alpha = probability(alpha, "alpha")
    values = finite_array(sample, "sample")
    if alpha == 0.5:
        return compensated_mean(values)
    low, high = float(values.min()), float(values.max())
    if low == high:
        return low

    def excess(tau: float) -> float:
        above = np.clip(values - tau, 0.0, None).sum()
        below = np.clip(tau - values, 0.0, None).sum()
        return float(alpha * above - (1.0 - alpha) * below)

    return float(brentq(excess, low, high, xtol=EXPECTILE_TOLERANCE))


# ---------------------------------------------------------------------------
# Scorer specifications


@dataclass(frozen=True)
class QuantileScorer:
    alpha: float
    form: QuantileForm = QuantileForm.SSTAR
    g: MonotoneFunction | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", probability(self.alpha, "alpha"))
        object.__setattr__(self, "form", QuantileForm(self.form))
        if self.form == QuantileForm.GENERAL_G:
            g = self.g or MonotoneFunction()
            g.check_strictly_increasing(self.alpha)
            object.__setattr__(self, "g", g)
        elif self.g is not None:
            raise InvalidArgumentError("the S* form takes no g")

    def score(self, forecasts: ArrayLike, realizations: ArrayLike) -> FloatOrArray:
        if self.form == QuantileForm.SSTAR:
            return quantile_score_sstar(forecasts, realizations, self.alpha)
        return quantile_score_general(forecasts, realizations, self.alpha, self.g)

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"type": self.form.value, "alpha": self.alpha}
        if self.g is not None:
            payload["g"] = self.g.to_dict()
        return payload


@dataclass(frozen=True)
class ExpectileScorer:
    alpha: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", probability(self.alpha, "alpha"))

    def score(self, forecasts: ArrayLike, realizations: ArrayLike) -> FloatOrArray:
        return expectile_score(forecasts, realizations, self.alpha)

    def to_dict(self) -> dict[str, Any]:
        return {"type": "expectile", "alpha": self.alpha}


Scorer = Union[QuantileScorer, ExpectileScorer]


def scorer_from_dict(payload: Mapping[str, Any]) -> Scorer:
    kind = payload.get("type")
    if "alpha" not in payload:
        raise InvalidArgumentError("scorer specification needs an alpha")
    alpha = payload["alpha"]
    if kind == QuantileForm.SSTAR.value:
        return QuantileScorer(alpha)
    if kind == QuantileForm.GENERAL_G.value:
        g = MonotoneFunction.from_dict(payload.get("g", {}))
        return QuantileScorer(alpha, QuantileForm.GENERAL_G, g)
    if kind == "expectile":
        return ExpectileScorer(alpha)
    raise InvalidArgumentError(f"unknown scorer type: {kind!r}")


# ---------------------------------------------------------------------------
# Aggregation


@dataclass(frozen=True)
class ScoreSeries:
    values: NDArray[np.float64] = field(repr=False)

    def __post_init__(self) -> None:
        values = finite_array(self.values, "score series").copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    def mean(self) -> float:
        return compensated_mean(self.values)


@dataclass(frozen=True)
class MeanScore:
    mean: float
    score_series: ScoreSeries


def mean_score(
    forecasts: ArrayLike,
    realizations: ArrayLike,
    scorer: Scorer,
) -> MeanScore:
    """Average score ``(1/N) sum S(forecast_n, y_n)`` plus the per-step series."""

    x = finite_array(forecasts, "forecasts")
    y = finite_array(realizations, "realizations")
    same_length(x, y, "forecasts and realizations")
    series = ScoreSeries(np.asarray(scorer.score(x, y), dtype=np.float64))
    return MeanScore(series.mean(), series)
