"""Experiment reports: score tables, power tables, provenance, writers."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import metadata
import math
from pathlib import Path
import platform
from typing import Any, Mapping

import pandas as pd

from ._version import __version__
from .config import ExperimentConfig, MethodPair
from .dmtest import DmTestResult, dm_test
from .scoring import MeanScore
from .serialization import jsonable, schema_version, seal, write_json_artifact

EXPERIMENT_SCHEMA_VERSION = schema_version("experiment-report")

SCORE_COLUMNS = (
    "h",
    "alpha",
    "n",
    "m_f",
    "m_g",
    "diff",
    "rel_diff",
    "sigma_hat",
    "t_stat",
    "p_value",
)
POWER_COLUMNS = (
    "h",
    "alpha",
    "n",
    "level",
    "power",
    "replications",
    "completed",
    "failures",
    "boundary_fits",
    "flagged",
)
FAILURE_FLAG_SHARE = 0.05


@dataclass(frozen=True)
class ScoreRow:
    h: int
    alpha: float
    n: int
    m_f: float
    m_g: float
    diff: float
    rel_diff: float | None
    sigma_hat: float
    t_stat: float
    p_value: float
    method_f: str
    method_g: str
    fallback_flag: bool = False
    identical_forecasts: bool = False

    @classmethod
    def from_scores(
        cls,
        h: int,
        alpha: float,
        scores_f: MeanScore,
        scores_g: MeanScore,
        methods: MethodPair,
    ) -> ScoreRow:
        result: DmTestResult = dm_test(scores_f.score_series, scores_g.score_series, h)
        return cls.from_result(h, alpha, scores_f.mean, scores_g.mean, result, methods)

    @classmethod
    def from_result(
        cls,
        h: int,
        alpha: float,
        m_f: float,
        m_g: float,
        result: DmTestResult,
        methods: MethodPair,
    ) -> ScoreRow:
        diff = result.m_n
        return cls(
            h=h,
            alpha=alpha,
            n=result.n,
            m_f=m_f,
            m_g=m_g,
            diff=diff,
            rel_diff=diff / m_f if m_f != 0.0 else None,
            sigma_hat=result.sigma_hat,
            t_stat=result.t_stat,
            p_value=result.p_value,
            method_f=methods.f.value,
            method_g=methods.g.value,
            fallback_flag=result.fallback_flag,
            identical_forecasts=result.identical_forecasts,
        )


@dataclass(frozen=True)
class PowerRow:
    h: int
    alpha: float
    n: int
    level: float
    power: float | None
    replications: int
    completed: int
    failures: int
    boundary_fits: int

    @property
    def flagged(self) -> bool:
        """More than 5% of replications failed."""

        return self.failures > FAILURE_FLAG_SHARE * self.replications


def build_provenance(config: ExperimentConfig, **notes: Any) -> dict[str, Any]:
    versions = {"infoset-eval": __version__}
    for name in ("numpy", "scipy", "pandas"):
        try:
            versions[name] = metadata.version(name)
        except metadata.PackageNotFoundError:
            versions[name] = "missing"
    return {
        "config": config.to_dict(),
        "config_sha256": config.sha256,
        "seed": config.seed,
        "python": ".".join(platform.python_version_tuple()[:2]),
        "versions": versions,
        **notes,
    }


@dataclass(frozen=True)
class ExperimentReport:
    experiment: str
    provenance: Mapping[str, Any]
    rows: tuple[ScoreRow, ...] = ()
    power: tuple[PowerRow, ...] = ()
    backtests: tuple[Mapping[str, Any], ...] = ()
    extras: Mapping[str, Any] = field(default_factory=dict)

    def row(self, h: int, alpha: float) -> ScoreRow:
        for item in self.rows:
            if item.h == h and math.isclose(item.alpha, alpha):
                return item
        raise KeyError((h, alpha))

    def power_cell(self, h: int, alpha: float, n: int, level: float) -> PowerRow:
        for item in self.power:
            if (
                item.h == h
                and item.n == n
                and math.isclose(item.alpha, alpha)
                and math.isclose(item.level, level)
            ):
                return item
        raise KeyError((h, alpha, n, level))

    def rows_frame(self) -> pd.DataFrame:
        records = [{column: getattr(item, column) for column in SCORE_COLUMNS} for item in self.rows]
        return pd.DataFrame.from_records(records, columns=list(SCORE_COLUMNS))

    def power_frame(self) -> pd.DataFrame:
        records = [{column: getattr(item, column) for column in POWER_COLUMNS} for item in self.power]
        return pd.DataFrame.from_records(records, columns=list(POWER_COLUMNS))

    def to_dict(self) -> dict[str, Any]:
        payload: dict[str, Any] = {
            "experiment": self.experiment,
            "provenance": jsonable(self.provenance),
            "rows": [jsonable(item) for item in self.rows],
            "power": [{**jsonable(item), "flagged": item.flagged} for item in self.power],
            "backtests": [jsonable(item) for item in self.backtests],
        }
        if self.extras:
            payload["extras"] = jsonable(self.extras)
        return payload

    def to_artifact(self) -> dict[str, Any]:
        return seal(
            {
                "schema_version": EXPERIMENT_SCHEMA_VERSION,
                "artifact_type": "experiment_report",
                **self.to_dict(),
            }
        )

    def write(self, out_dir: str | Path) -> list[Path]:
        """Write ``<experiment>.json`` and the CSV tables that have rows."""

        output = Path(out_dir)
        output.mkdir(parents=True, exist_ok=True)
        written = [write_json_artifact(output / f"{self.experiment}.json", self.to_artifact())]
        if self.rows:
            path = output / f"{self.experiment}_scores.csv"
            self.rows_frame().to_csv(path, index=False, float_format="%.10g")
            written.append(path)
        if self.power:
            path = output / f"{self.experiment}_power.csv"
            self.power_frame().to_csv(path, index=False, float_format="%.10g")
            written.append(path)
        return written
