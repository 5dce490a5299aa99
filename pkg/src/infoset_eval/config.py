"""Experiment configuration.

A configuration is one TOML file. Exactly one of ``[garch]``, ``[dcc]`` or
``[mixture]`` selects the data generating process; ``[garch]`` and ``[dcc]``
take either ``preset = <config number>`` or the explicit parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace as dataclass_replace
from enum import Enum
from importlib import resources
from pathlib import Path
import sys
from typing import Any, Mapping, Union

from .dcc import DCC_CONFIGS, PARAMETER_ORDER, DccParams, PortfolioSpec
from .errors import ConfigError, InfosetError, InvalidArgumentError
from .garch import GARCH_CONFIGS, GarchParams
from .scoring import MonotoneFunction, QuantileForm, QuantileScorer
from .serialization import sha256_json
from .validation import integer, positive_number, probability

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib  # type: ignore[no-redef]

PRESET_NAMES = (
    "garch-1",
    "garch-2",
    "garch-3",
    "dcc-1",
    "dcc-2",
    "dcc-3",
    "dcc-4",
    "dcc-5",
    "dcc-6",
    "dcc-7",
    "mixture",
)
MIN_WINDOW = 100
FULL_REPLICATIONS = 1000
FULL_ONE_STEP_N = {"garch": 300_000, "dcc": 500_000}


class Forecaster(str, Enum):
    UNCONDITIONAL_EMPIRICAL = "unconditional_empirical"
    SQRT_TIME = "sqrt_time"
    GARCH_TRUE = "garch_true"
    GARCH_FITTED = "garch_fitted"
    GARCH_TRUE_MC = "garch_true_mc"
    PORTFOLIO_GARCH_FITTED = "portfolio_garch_fitted"
    DCC_TRUE = "dcc_true"
    DCC_FITTED = "dcc_fitted"

    @property
    def kinds(self) -> frozenset[str]:
        """Data generating processes the forecaster applies to."""

        if self in (Forecaster.UNCONDITIONAL_EMPIRICAL, Forecaster.SQRT_TIME):
            return frozenset({"garch", "dcc"})
        if self in (Forecaster.GARCH_TRUE, Forecaster.GARCH_FITTED, Forecaster.GARCH_TRUE_MC):
            return frozenset({"garch"})
        return frozenset({"dcc"})

    @property
    def one_step_only(self) -> bool:
        return self in (Forecaster.DCC_TRUE, Forecaster.DCC_FITTED)


@dataclass(frozen=True)
class MethodPair:
    """Forecasters for the smaller (F) and larger (G) information set."""

    f: Forecaster
    g: Forecaster

    def __post_init__(self) -> None:
        try:
            object.__setattr__(self, "f", Forecaster(self.f))
            object.__setattr__(self, "g", Forecaster(self.g))
        except ValueError as exc:
            raise ConfigError(f"unknown forecaster: {exc}") from exc

    def to_dict(self) -> dict[str, str]:
        return {"f": self.f.value, "g": self.g.value}


DEFAULT_METHODS: Mapping[tuple[str, str], MethodPair] = {
    ("garch", "mean_scores"): MethodPair(Forecaster.UNCONDITIONAL_EMPIRICAL, Forecaster.GARCH_TRUE),
    ("garch", "rolling"): MethodPair(Forecaster.SQRT_TIME, Forecaster.GARCH_FITTED),
    ("dcc", "mean_scores"): MethodPair(Forecaster.PORTFOLIO_GARCH_FITTED, Forecaster.DCC_TRUE),
    ("dcc", "rolling"): MethodPair(Forecaster.PORTFOLIO_GARCH_FITTED, Forecaster.DCC_FITTED),
}


@dataclass(frozen=True)
class MixtureSpec:
    """Equal mixture of ``N(0, 1)`` and ``N(q_alpha (1 - sigma), sigma^2)``."""

    alpha: float = 0.05
    sigma: float = 2.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "alpha", probability(self.alpha, "mixture.alpha"))
        sigma = positive_number(self.sigma, "mixture.sigma")
        if sigma <= 1.0:
            raise InvalidArgumentError("mixture.sigma must be greater than 1")
        object.__setattr__(self, "sigma", sigma)

    def to_dict(self) -> dict[str, float]:
        return {"alpha": self.alpha, "sigma": self.sigma}


Dgp = Union[GarchParams, DccParams, MixtureSpec]


def dgp_kind(dgp: Dgp) -> str:
    if isinstance(dgp, GarchParams):
        return "garch"
    if isinstance(dgp, DccParams):
        return "dcc"
    return "mixture"


@dataclass(frozen=True)
class ScorerSpec:
    form: QuantileForm = QuantileForm.SSTAR
    g: MonotoneFunction | None = None

    def for_level(self, alpha: float) -> QuantileScorer:
        return QuantileScorer(alpha, self.form, self.g)

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {"type": self.form.value}
        if self.g is not None:
            payload["g"] = self.g.to_dict()
        return payload


def _tuple(values: Any) -> tuple[Any, ...]:
    if isinstance(values, (list, tuple)):
        return tuple(values)
    return (values,)


@dataclass(frozen=True)
class ExperimentConfig:
    dgp: Dgp
    horizons: tuple[int, ...] = (1,)
    alphas: tuple[float, ...] = (0.01, 0.05, 0.20)
    n: int = 100_000
    n_one_step: int | None = None
    window: int = 500
    mc_size: int = 1000
    replications: int = 200
    sample_sizes: tuple[int, ...] = (250, 500, 1000, 1500)
    levels: tuple[float, ...] = (0.05, 0.10)
    reference_n: int = 300_000
    burn_in: int = 500
    refit_every: int = 1
    aggregation: str = "overlapping"
    return_scale: float = 100.0
    seed: int = 0
    workers: int = 1
    methods: MethodPair | None = None
    portfolio: PortfolioSpec = field(default_factory=PortfolioSpec)
    scorer: ScorerSpec = field(default_factory=ScorerSpec)
    name: str = ""

    def __post_init__(self) -> None:
        try:
            self._validate()
        except ConfigError:
            raise
        except (InfosetError, ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def _validate(self) -> None:
        horizons = tuple(integer(h, "horizons", minimum=1) for h in _tuple(self.horizons))
        alphas = tuple(probability(a, "alphas") for a in _tuple(self.alphas))
        levels = tuple(float(level) for level in _tuple(self.levels))
        if not horizons or not alphas or not levels:
            raise ConfigError("horizons, alphas and levels must be nonempty")
        if any(not 0.0 < level <= 1.0 for level in levels):
            raise ConfigError("levels must lie in (0, 1]")
        object.__setattr__(self, "horizons", horizons)
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "levels", levels)
        sizes = tuple(integer(s, "sample_sizes", minimum=1) for s in _tuple(self.sample_sizes))
        object.__setattr__(self, "sample_sizes", sizes)
        integer(self.n, "n", minimum=4 * max(horizons))
        if self.n_one_step is not None:
            integer(self.n_one_step, "n_one_step", minimum=4)
        integer(self.window, "window", minimum=MIN_WINDOW)
        integer(self.mc_size, "mc_size", minimum=100)
        integer(self.replications, "replications", minimum=1)
        integer(self.reference_n, "reference_n", minimum=MIN_WINDOW)
        integer(self.burn_in, "burn_in")
        integer(self.refit_every, "refit_every", minimum=1)
        integer(self.seed, "seed")
        integer(self.workers, "workers", minimum=1)
        positive_number(self.return_scale, "return_scale")
        if self.aggregation not in ("overlapping", "disjoint"):
            raise ConfigError("aggregation must be 'overlapping' or 'disjoint'")
        if self.methods is not None:
            self.check_methods(self.methods)

    def check_methods(self, methods: MethodPair) -> None:
        kind = self.kind
        for method in (methods.f, methods.g):
            if kind not in method.kinds:
                raise ConfigError(f"forecaster {method.value!r} does not apply to a {kind} study")
            if method.one_step_only and max(self.horizons) > 1:
                raise ConfigError(f"forecaster {method.value!r} supports h = 1 only")

    @property
    def kind(self) -> str:
        return dgp_kind(self.dgp)

    @property
    def max_h(self) -> int:
        return max(self.horizons)

    def sample_size(self, h: int) -> int:
        """Evaluation length for horizon ``h``."""

        if h == 1 and self.n_one_step is not None:
            return self.n_one_step
        return self.n

    def methods_for(self, experiment: str) -> MethodPair:
        if self.methods is not None:
            return self.methods
        try:
            methods = DEFAULT_METHODS[(self.kind, experiment)]
        except KeyError as exc:
            raise ConfigError(f"no default forecasters for a {self.kind} {experiment} run") from exc
        self.check_methods(methods)
        return methods

    def replace(self, **overrides: Any) -> ExperimentConfig:
        return dataclass_replace(self, **overrides)

    def at_full_scale(self) -> ExperimentConfig:
        """Replication count and one-step sample sizes of the full-size studies."""

        return self.replace(
            replications=FULL_REPLICATIONS,
            n_one_step=FULL_ONE_STEP_N.get(self.kind, self.n_one_step),
        )

    def to_dict(self) -> dict[str, Any]:
        kind = self.kind
        dgp = self.dgp.to_dict()
        experiment: dict[str, Any] = {
            "name": self.name,
            "horizons": list(self.horizons),
            "alphas": list(self.alphas),
            "n": self.n,
            "window": self.window,
            "mc_size": self.mc_size,
            "replications": self.replications,
            "sample_sizes": list(self.sample_sizes),
            "levels": list(self.levels),
            "reference_n": self.reference_n,
            "burn_in": self.burn_in,
            "refit_every": self.refit_every,
            "aggregation": self.aggregation,
            "return_scale": self.return_scale,
            "seed": self.seed,
            "workers": self.workers,
        }
        if self.n_one_step is not None:
            experiment["n_one_step"] = self.n_one_step
        if self.methods is not None:
            experiment["methods"] = self.methods.to_dict()
        return {
            "experiment": experiment,
            kind: dgp,
            "portfolio": {"weights": list(self.portfolio.w), "v0": self.portfolio.v0},
            "scorer": self.scorer.to_dict(),
        }

    @property
    def sha256(self) -> str:
        """Digest of the configuration excluding ``workers``, which never changes results."""

        payload = self.to_dict()
        payload["experiment"].pop("workers", None)
        return sha256_json(payload)

    @classmethod
    def from_dict(cls, payload: Mapping[str, Any]) -> ExperimentConfig:
        try:
            return _from_mapping(payload)
        except ConfigError:
            raise
        except (InfosetError, ValueError, TypeError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc


def _section(payload: Mapping[str, Any], name: str) -> dict[str, Any]:
    value = payload.get(name, {})
    if not isinstance(value, Mapping):
        raise ConfigError(f"[{name}] must be a table")
    return dict(value)


def _garch_params(section: Mapping[str, Any]) -> GarchParams:
    if "preset" in section:
        preset = section["preset"]
        if preset not in GARCH_CONFIGS:
            raise ConfigError(f"unknown GARCH preset {preset!r}; expected one of {sorted(GARCH_CONFIGS)}")
        return GARCH_CONFIGS[preset]
    unknown = set(section) - {"kappa", "phi", "beta"}
    if unknown:
        raise ConfigError(f"unknown [garch] keys: {', '.join(sorted(unknown))}")
    return GarchParams.from_dict(section)


def _dcc_params(section: Mapping[str, Any]) -> DccParams:
    if "preset" in section:
        preset = section["preset"]
        if preset not in DCC_CONFIGS:
            raise ConfigError(f"unknown DCC preset {preset!r}; expected one of {sorted(DCC_CONFIGS)}")
        return DCC_CONFIGS[preset]
    unknown = set(section) - set(PARAMETER_ORDER)
    if unknown:
        raise ConfigError(f"unknown [dcc] keys: {', '.join(sorted(unknown))}")
    return DccParams.from_dict(section)


def _scorer(section: Mapping[str, Any]) -> ScorerSpec:
    if not section:
        return ScorerSpec()
    kind = section.get("type", QuantileForm.SSTAR.value)
    try:
        form = QuantileForm(kind)
    except ValueError as exc:
        raise ConfigError(f"[scorer] type must be a quantile scorer, got {kind!r}") from exc
    g = MonotoneFunction.from_dict(section["g"]) if "g" in section else None
    if form == QuantileForm.GENERAL_G and g is None:
        g = MonotoneFunction()
    return ScorerSpec(form, g)


_EXPERIMENT_KEYS = {
    "name",
    "horizons",
    "alphas",
    "n",
    "n_one_step",
    "window",
    "mc_size",
    "replications",
    "sample_sizes",
    "levels",
    "reference_n",
    "burn_in",
    "refit_every",
    "aggregation",
    "return_scale",
    "seed",
    "workers",
}


def _from_mapping(payload: Mapping[str, Any]) -> ExperimentConfig:
    unknown_sections = set(payload) - {"experiment", "garch", "dcc", "mixture", "portfolio", "scorer"}
    if unknown_sections:
        raise ConfigError(f"unknown sections: {', '.join(sorted(unknown_sections))}")
    present = [name for name in ("garch", "dcc", "mixture") if name in payload]
    if len(present) != 1:
        raise ConfigError("exactly one of [garch], [dcc] or [mixture] is required")
    kind = present[0]
    if kind == "garch":
        dgp: Dgp = _garch_params(_section(payload, "garch"))
    elif kind == "dcc":
        dgp = _dcc_params(_section(payload, "dcc"))
    else:
        dgp = MixtureSpec(**_section(payload, "mixture"))

    experiment = _section(payload, "experiment")
    methods_section = experiment.pop("methods", None)
    unknown = set(experiment) - _EXPERIMENT_KEYS
    if unknown:
        raise ConfigError(f"unknown [experiment] keys: {', '.join(sorted(unknown))}")
    options: dict[str, Any] = dict(experiment)
    for key in ("horizons", "alphas", "sample_sizes", "levels"):
        if key in options:
            options[key] = _tuple(options[key])
    if methods_section is not None:
        if not isinstance(methods_section, Mapping) or set(methods_section) != {"f", "g"}:
            raise ConfigError("[experiment.methods] needs exactly the keys f and g")
        options["methods"] = MethodPair(methods_section["f"], methods_section["g"])

    portfolio = _section(payload, "portfolio")
    if portfolio:
        options["portfolio"] = PortfolioSpec(
            tuple(portfolio.get("weights", (0.5, 0.5))), portfolio.get("v0", 1.0)
        )
    options["scorer"] = _scorer(_section(payload, "scorer"))
    return ExperimentConfig(dgp=dgp, **options)


def load_config(path: str | Path) -> ExperimentConfig:
    source = Path(path)
    try:
        with source.open("rb") as handle:
            payload = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError("configuration file does not exist", context={"path": str(source)}) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}", context={"path": str(source)}) from exc
    try:
        return ExperimentConfig.from_dict(payload)
    except ConfigError as exc:
        raise exc.with_context(path=str(source))


def preset_config(name: str) -> ExperimentConfig:
    """Load one of the packaged ``data/<name>.toml`` presets."""

    if name not in PRESET_NAMES:
        raise ConfigError(f"unknown preset {name!r}; expected one of {', '.join(PRESET_NAMES)}")
    resource = resources.files("infoset_eval").joinpath(f"data/{name}.toml")
    payload = tomllib.loads(resource.read_text(encoding="utf-8"))
    return ExperimentConfig.from_dict(payload)
