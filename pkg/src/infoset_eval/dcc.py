"""Bivariate DCC-GARCH: simulation, two-step estimation, portfolio VaR.

``R_t = H_t^{1/2} eps_t`` with ``H_t = D_t C_t D_t``; ``D_t`` holds the two
univariate GARCH(1,1) volatilities, ``C_t`` is ``Q_t`` normalised to a unit
diagonal, and ``Q_t = (1 - gamma - eta) Q_bar + gamma u_{t-1} u_{t-1}^T +
eta Q_{t-1}`` with standardised residuals ``u_t = R_t / sigma_t``.

Covariances are fixed 2x2. ``H_t^{1/2}`` is the symmetric (spectral) square
root, computed in closed form.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math
from pathlib import Path
from typing import Any, Mapping

import numpy as np
from numpy.typing import ArrayLike, NDArray
import pandas as pd
from scipy.optimize import minimize
from scipy.signal import lfilter
from scipy.special import expit, logit

from .errors import InvalidArgumentError, NumericalFailure
from .garch import (
    BOUNDARY_PERSISTENCE,
    DEFAULT_BURN_IN,
    PERSISTENCE_CAP,
    QMLE_TOLERANCE,
    ForecastMethod,
    GarchFit,
    GarchParams,
    QuantileForecast,
    fit_garch_qmle,
    garch_variance_path,
    normal_quantile,
)
from .seeding import derive_rng
from .validation import finite_array, integer, positive_number

logger = logging.getLogger(__name__)

DCC_MIN_OBSERVATIONS = 200
AGGREGATION_TOLERANCE = 1e-12
PARAMETER_ORDER = (
    "kappa_1",
    "kappa_2",
    "phi_1",
    "phi_2",
    "beta_1",
    "beta_2",
    "q_bar_21",
    "gamma",
    "eta",
)


@dataclass(frozen=True)
class DccParams:
    garch_1: GarchParams
    garch_2: GarchParams
    q_bar_offdiag: float
    gamma: float
    eta: float

    def __post_init__(self) -> None:
        q_bar = float(self.q_bar_offdiag)
        gamma = float(self.gamma)
        eta = float(self.eta)
        if not (math.isfinite(q_bar) and -1.0 < q_bar < 1.0):
            raise InvalidArgumentError("q_bar_21 must lie in (-1, 1) so that Q_bar is positive definite")
        if not (math.isfinite(gamma) and gamma >= 0.0):
            raise InvalidArgumentError("gamma must be finite and nonnegative")
        if not (math.isfinite(eta) and eta >= 0.0):
            raise InvalidArgumentError("eta must be finite and nonnegative")
        if gamma + eta >= 1.0:
            raise InvalidArgumentError(f"gamma + eta = {gamma + eta:.6g} must be below 1")
        object.__setattr__(self, "q_bar_offdiag", q_bar)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "eta", eta)

    @property
    def q_bar(self) -> NDArray[np.float64]:
        return np.array([[1.0, self.q_bar_offdiag], [self.q_bar_offdiag, 1.0]])

    def to_dict(self) -> dict[str, float]:
        values = (
            self.garch_1.kappa,
            self.garch_2.kappa,
            self.garch_1.phi,
            self.garch_2.phi,
            self.garch_1.beta,
            self.garch_2.beta,
            self.q_bar_offdiag,
            self.gamma,
            self.eta,
        )
        return dict(zip(PARAMETER_ORDER, values))

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> DccParams:
        missing = [name for name in PARAMETER_ORDER if name not in payload]
        if missing:
            raise InvalidArgumentError(f"DCC parameters missing: {', '.join(missing)}")
        value = {name: float(payload[name]) for name in PARAMETER_ORDER}
        return cls(
            GarchParams(value["kappa_1"], value["phi_1"], value["beta_1"]),
            GarchParams(value["kappa_2"], value["phi_2"], value["beta_2"]),
            value["q_bar_21"],
            value["gamma"],
            value["eta"],
        )

    @classmethod
    def from_row(cls, row: tuple[float, ...]) -> DccParams:
        return cls.from_dict(dict(zip(PARAMETER_ORDER, row)))


DCC_CONFIGS: Mapping[int, DccParams] = {
    1: DccParams.from_row((0.0030, 0.0010, 0.400, 0.050, 0.590, 0.930, 0.10, 0.01, 0.98)),
    2: DccParams.from_row((0.0025, 0.0015, 0.390, 0.060, 0.600, 0.920, 0.30, 0.02, 0.97)),
    3: DccParams.from_row((0.0100, 0.0070, 0.200, 0.180, 0.790, 0.800, 0.30, 0.08, 0.91)),
    4: DccParams.from_row((0.0200, 0.0010, 0.100, 0.300, 0.890, 0.680, 0.35, 0.10, 0.89)),
    5: DccParams.from_row((0.0030, 0.0010, 0.400, 0.005, 0.590, 0.975, 0.60, 0.01, 0.98)),
    6: DccParams.from_row((0.0090, 0.0080, 0.200, 0.010, 0.790, 0.970, 0.75, 0.05, 0.94)),
    7: DccParams.from_row((0.0028, 0.0031, 0.300, 0.500, 0.690, 0.480, 0.88, 0.01, 0.98)),
}


@dataclass(frozen=True)
class DccPath:
    returns: NDArray[np.float64] = field(repr=False)
    h_path: NDArray[np.float64] = field(repr=False)
    q_path: NDArray[np.float64] = field(repr=False)
    seed: int
    burn_in: int = DEFAULT_BURN_IN

    @property
    def n(self) -> int:
        return int(self.returns.shape[0])

    @property
    def correlations(self) -> NDArray[np.float64]:
        """``C_t`` for every step, shape ``(n, 2, 2)``."""

        scale = 1.0 / np.sqrt(np.einsum("tii->ti", self.q_path))
        return self.q_path * scale[:, :, None] * scale[:, None, :]

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t": np.arange(self.n),
                "return_1": self.returns[:, 0],
                "return_2": self.returns[:, 1],
                "h_11": self.h_path[:, 0, 0],
                "h_21": self.h_path[:, 1, 0],
                "h_22": self.h_path[:, 1, 1],
            }
        )

    def to_csv(self, output_path: str | Path) -> Path:
        output = Path(output_path)
        output.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(output, index=False, float_format="%.17g")
        return output


@dataclass(frozen=True)
class PortfolioSpec:
    w: tuple[float, float] = (0.5, 0.5)
    v0: float = 1.0

    def __post_init__(self) -> None:
        weights = tuple(float(item) for item in self.w)
        if len(weights) != 2:
            raise InvalidArgumentError("portfolio weights must have two entries")
        if any(not math.isfinite(item) or item < 0.0 or item > 1.0 for item in weights):
            raise InvalidArgumentError("portfolio weights must lie in [0, 1]")
        if abs(math.fsum(weights) - 1.0) > 1e-12:
            raise InvalidArgumentError("portfolio weights must sum to 1")
        object.__setattr__(self, "w", weights)
        object.__setattr__(self, "v0", positive_number(self.v0, "v0"))

    @property
    def weights(self) -> NDArray[np.float64]:
        return np.asarray(self.w, dtype=np.float64)


# ---------------------------------------------------------------------------
# Simulation


def symmetric_sqrt_2x2(h11: float, h21: float, h22: float) -> tuple[float, float, float]:
    """Entries ``(a11, a21, a22)`` of the symmetric square root of an SPD 2x2 matrix."""

    s = math.sqrt(h11 * h22 - h21 * h21)
    t = math.sqrt(h11 + h22 + 2.0 * s)
    return (h11 + s) / t, h21 / t, (h22 + s) / t


def simulate_dcc(
    params: DccParams,
    n: int,
    seed: int,
    burn_in: int = DEFAULT_BURN_IN,
) -> DccPath:
    """Simulate ``n`` bivariate returns after ``burn_in`` discarded draws.

    Variances start at their stationary values and ``Q`` at ``Q_bar``.
    """

    n = integer(n, "n", minimum=1)
    burn_in = integer(burn_in, "burn_in")
    total = n + burn_in
    eps = derive_rng(seed, "dcc").standard_normal((total, 2)).tolist()
    g1, g2 = params.garch_1, params.garch_2
    q_bar = params.q_bar_offdiag
    gamma, eta = params.gamma, params.eta
    target = 1.0 - gamma - eta
    returns = np.empty((total, 2))
    h_path = np.empty((total, 2, 2))
    q_path = np.empty((total, 2, 2))

    s1, s2 = g1.unconditional_variance, g2.unconditional_variance
    q11, q21, q22 = 1.0, q_bar, 1.0
    r1 = r2 = u1 = u2 = 0.0
    for t in range(total):
        if t > 0:
            s1 = g1.kappa + g1.phi * r1 * r1 + g1.beta * s1
            s2 = g2.kappa + g2.phi * r2 * r2 + g2.beta * s2
            q11 = target + gamma * u1 * u1 + eta * q11
            q21 = target * q_bar + gamma * u1 * u2 + eta * q21
            q22 = target + gamma * u2 * u2 + eta * q22
        c21 = q21 / math.sqrt(q11 * q22)
        sd1, sd2 = math.sqrt(s1), math.sqrt(s2)
        h21 = c21 * sd1 * sd2
        a11, a21, a22 = symmetric_sqrt_2x2(s1, h21, s2)
        e1, e2 = eps[t]
        r1 = a11 * e1 + a21 * e2
        r2 = a21 * e1 + a22 * e2
        u1, u2 = r1 / sd1, r2 / sd2
        returns[t] = (r1, r2)
        h_path[t] = ((s1, h21), (h21, s2))
        q_path[t] = ((q11, q21), (q21, q22))
    return DccPath(
        returns[burn_in:].copy(),
        h_path[burn_in:].copy(),
        q_path[burn_in:].copy(),
        seed,
        burn_in,
    )


# ---------------------------------------------------------------------------
# Estimation


@dataclass(frozen=True)
class DccFit:
    params: DccParams
    h_path: NDArray[np.float64] = field(repr=False)
    next_covariance: NDArray[np.float64] = field(repr=False)
    loglik: float
    at_boundary: bool
    converged: bool
    margins: tuple[GarchFit, GarchFit] = field(repr=False)


def _correlation_recursion(
    u: NDArray[np.float64],
    q_bar: float,
    gamma: float,
    eta: float,
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """``q11, q21, q22`` for steps ``0..n`` (the last is one step ahead)."""

    target = 1.0 - gamma - eta
    out = []
    for x, level in ((u[:, 0] * u[:, 0], 1.0), (u[:, 0] * u[:, 1], q_bar), (u[:, 1] * u[:, 1], 1.0)):
        drive = target * level + gamma * x
        tail, _ = lfilter([1.0], [1.0, -eta], drive, zi=[eta * level])
        out.append(np.concatenate(([level], tail)))
    return out[0], out[1], out[2]


def _correlation_loglik(
    u: NDArray[np.float64],
    q_bar: float,
    gamma: float,
    eta: float,
) -> float:
    q11, q21, q22 = _correlation_recursion(u, q_bar, gamma, eta)
    c = q21[:-1] / np.sqrt(q11[:-1] * q22[:-1])
    one_minus = 1.0 - c * c
    if np.any(one_minus <= 0.0):
        return -math.inf
    u1, u2 = u[:, 0], u[:, 1]
    quad = (u1 * u1 - 2.0 * c * u1 * u2 + u2 * u2) / one_minus
    return float(-0.5 * np.sum(np.log(one_minus) + quad - u1 * u1 - u2 * u2))


def _covariances(
    variances: NDArray[np.float64],
    q11: NDArray[np.float64],
    q21: NDArray[np.float64],
    q22: NDArray[np.float64],
) -> NDArray[np.float64]:
    c = q21 / np.sqrt(q11 * q22)
    h21 = c * np.sqrt(variances[:, 0] * variances[:, 1])
    h = np.empty((variances.shape[0], 2, 2))
    h[:, 0, 0] = variances[:, 0]
    h[:, 1, 1] = variances[:, 1]
    h[:, 0, 1] = h[:, 1, 0] = h21
    return h


def filter_dcc(
    params: DccParams,
    returns: ArrayLike,
    initial_vars: tuple[float, float] | None = None,
) -> NDArray[np.float64]:
    """Covariances ``H_0..H_n`` implied by ``params`` along observed returns.

    The last entry is the one-step-ahead covariance after the final
    observation. Variances start at ``initial_vars`` (default: stationary)
    and ``Q`` at ``Q_bar``.
    """

    r = finite_array(returns, "returns", ndim=2)
    if r.shape[1] != 2:
        raise InvalidArgumentError("DCC returns must have exactly two columns")
    if initial_vars is None:
        initial_vars = (params.garch_1.unconditional_variance, params.garch_2.unconditional_variance)
    variances = np.column_stack(
        (
            garch_variance_path(params.garch_1, r[:, 0], initial_vars[0]),
            garch_variance_path(params.garch_2, r[:, 1], initial_vars[1]),
        )
    )
    u = r / np.sqrt(variances[:-1])
    q11, q21, q22 = _correlation_recursion(u, params.q_bar_offdiag, params.gamma, params.eta)
    return _covariances(variances, q11, q21, q22)


def fit_dcc_two_step(
    returns: ArrayLike,
    start: DccParams | None = None,
) -> DccFit:
    """Two-step quasi-maximum likelihood.

    Step 1 fits each margin with :func:`fit_garch_qmle`. Step 2 targets
    ``Q_bar`` at the sample correlation of the standardised residuals and
    maximises the correlation quasi-likelihood over ``(gamma, eta)`` with
    ``gamma + eta < 1``. Boundary solutions are flagged.
    """

    r = finite_array(returns, "returns", minimum=DCC_MIN_OBSERVATIONS, ndim=2)
    if r.shape[1] != 2:
        raise InvalidArgumentError("DCC returns must have exactly two columns")
    fit_1 = fit_garch_qmle(r[:, 0], start.garch_1 if start else None)
    fit_2 = fit_garch_qmle(r[:, 1], start.garch_2 if start else None)
    variances = np.column_stack((fit_1.cond_var_path, fit_2.cond_var_path))
    u = r / np.sqrt(variances)
    moment = u.T @ u / u.shape[0]
    q_bar = float(moment[0, 1] / math.sqrt(moment[0, 0] * moment[1, 1]))
    q_bar = min(max(q_bar, -1.0 + 1e-9), 1.0 - 1e-9)

    gamma0, eta0 = (start.gamma, start.eta) if start else (0.05, 0.90)
    persistence0 = min(max((gamma0 + eta0) / PERSISTENCE_CAP, 1e-6), 1.0 - 1e-12)
    share0 = min(max(gamma0 / (gamma0 + eta0), 1e-6), 1.0 - 1e-6) if gamma0 + eta0 > 0 else 0.5
    n = u.shape[0]

    def unpack(theta: NDArray[np.float64]) -> tuple[float, float]:
        persistence = PERSISTENCE_CAP * float(expit(theta[0]))
        share = float(expit(theta[1]))
        return persistence * share, persistence * (1.0 - share)

    def objective(theta: NDArray[np.float64]) -> float:
        gamma, eta = unpack(theta)
        value = _correlation_loglik(u, q_bar, gamma, eta)
        return math.inf if not math.isfinite(value) else -value / n

    result = minimize(
        objective,
        np.array([logit(persistence0), logit(share0)]),
        method="Nelder-Mead",
        options={"xatol": 1e-7, "fatol": QMLE_TOLERANCE, "maxiter": 2000},
    )
    gamma, eta = unpack(result.x)
    params = DccParams(fit_1.params, fit_2.params, q_bar, gamma, eta)
    q11, q21, q22 = _correlation_recursion(u, q_bar, gamma, eta)
    h_path = _covariances(variances, q11[:-1], q21[:-1], q22[:-1])
    next_vars = np.array([[fit_1.next_var, fit_2.next_var]])
    next_covariance = _covariances(next_vars, q11[-1:], q21[-1:], q22[-1:])[0]
    at_boundary = bool(
        gamma + eta >= BOUNDARY_PERSISTENCE or fit_1.at_boundary or fit_2.at_boundary
    )
    if at_boundary:
        logger.debug("DCC fit flagged at boundary: gamma+eta=%.10f", gamma + eta)
    return DccFit(
        params=params,
        h_path=h_path,
        next_covariance=next_covariance,
        loglik=fit_1.loglik + fit_2.loglik + _correlation_loglik(u, q_bar, gamma, eta),
        at_boundary=at_boundary,
        converged=bool(result.success and fit_1.converged and fit_2.converged),
        margins=(fit_1, fit_2),
    )


# ---------------------------------------------------------------------------
# Portfolio


def portfolio_returns(
    asset_returns: ArrayLike,
    spec: PortfolioSpec,
    scale: float = 1.0,
) -> NDArray[np.float64]:
    """Portfolio returns with rebalancing to constant weights every step.

    Holdings ``lambda_{t,i} = w_i V_t / S_{t,i}`` give
    ``Y_{t+1} = sum_i R_{t+1,i} lambda_{t,i} S_{t,i} / V_t``. Returns are in
    units of ``1/scale`` (``scale=100`` for percent), so price relatives are
    ``1 + R/scale``. The result is checked against ``w_1 R_1 + w_2 R_2``.
    """

    r = finite_array(asset_returns, "asset_returns", ndim=2)
    if r.shape[1] != 2:
        raise InvalidArgumentError("asset returns must have exactly two columns")
    scale = positive_number(scale, "scale")
    if np.any(r / scale <= -1.0):
        raise InvalidArgumentError("returns at or below -100% imply nonpositive prices")
    w1, w2 = spec.w
    prices = [1.0, 1.0]
    value = spec.v0
    out = np.empty(r.shape[0])
    for t, (ra, rb) in enumerate(r.tolist()):
        hold_1 = w1 * value / prices[0]
        hold_2 = w2 * value / prices[1]
        out[t] = ra * hold_1 * prices[0] / value + rb * hold_2 * prices[1] / value
        prices = [prices[0] * (1.0 + ra / scale), prices[1] * (1.0 + rb / scale)]
        value = hold_1 * prices[0] + hold_2 * prices[1]
    weighted = r @ spec.weights
    worst = float(np.max(np.abs(out - weighted))) if out.size else 0.0
    if worst > AGGREGATION_TOLERANCE * max(1.0, float(np.max(np.abs(r))) if r.size else 1.0):
        raise NumericalFailure(
            f"rebalanced portfolio deviates from the weighted mean by {worst:.3g}"
        )
    return out


def portfolio_variance(h: ArrayLike, w: ArrayLike) -> float:
    matrix = np.asarray(h, dtype=np.float64)
    weights = np.asarray(w, dtype=np.float64)
    if matrix.shape != (2, 2) or weights.shape != (2,):
        raise InvalidArgumentError("expected a 2x2 covariance and two weights")
    if not np.all(np.isfinite(matrix)) or not np.allclose(matrix, matrix.T, rtol=0, atol=1e-12):
        raise InvalidArgumentError("covariance must be finite and symmetric")
    return float(weights @ matrix @ weights)


def forecast_portfolio_quantile_h1(
    h_next: ArrayLike,
    w: PortfolioSpec | ArrayLike,
    alpha: float,
    t: int | None = None,
) -> QuantileForecast:
    """``sqrt(w' H w) q_alpha``, the exact one-step portfolio quantile."""

    weights = w.weights if isinstance(w, PortfolioSpec) else PortfolioSpec(tuple(w)).weights
    variance = portfolio_variance(h_next, weights)
    if not variance > 0.0:
        raise InvalidArgumentError("portfolio variance w' H w must be positive")
    value = math.sqrt(variance) * normal_quantile(alpha)
    return QuantileForecast(value, 1, alpha, ForecastMethod.EXACT_NORMAL, t)


def portfolio_variances(h_path: NDArray[np.float64], w: NDArray[np.float64]) -> NDArray[np.float64]:
    """``w' H_t w`` along a covariance path."""

    return np.einsum("i,tij,j->t", w, h_path, w)
