"""Price CSV ingestion and return construction.

Files have a header row ``date,<price>[,<price>]`` with ISO-8601 dates.
Several files are aligned by intersecting their dates. Rows with an
unparseable date or a missing price are skipped and counted; the line
numbers are kept so that they can be reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
from pathlib import Path
from typing import Iterable

import numpy as np
from numpy.typing import ArrayLike, NDArray
import pandas as pd

from .errors import AlignmentError, DataFileError, InvalidArgumentError
from .validation import finite_array, positive_number

logger = logging.getLogger(__name__)

DATE_COLUMN = "date"


@dataclass(frozen=True)
class PriceTable:
    frame: pd.DataFrame = field(repr=False)
    sources: tuple[str, ...] = ()
    skipped_lines: tuple[tuple[str, int], ...] = ()

    @property
    def n(self) -> int:
        return int(self.frame.shape[0])

    @property
    def assets(self) -> tuple[str, ...]:
        return tuple(str(column) for column in self.frame.columns)


@dataclass(frozen=True)
class ReturnSeries:
    dates: pd.DatetimeIndex = field(repr=False)
    values: NDArray[np.float64] = field(repr=False)
    kind: str
    assets: tuple[str, ...]
    scale: float = 1.0
    frequency: str | None = None

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def is_bivariate(self) -> bool:
        return self.values.ndim == 2

    def to_frame(self) -> pd.DataFrame:
        columns = self.values if self.values.ndim == 2 else self.values[:, None]
        frame = pd.DataFrame(columns, index=self.dates, columns=list(self.assets))
        frame.index.name = DATE_COLUMN
        return frame


def _read_one(path: Path) -> tuple[pd.DataFrame, list[int]]:
    try:
        raw = pd.read_csv(path, dtype=str, skipinitialspace=True)
    except FileNotFoundError as exc:
        raise DataFileError("price file does not exist", path=str(path)) from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataFileError(f"price file is not valid CSV: {exc}", path=str(path)) from exc
    raw.columns = [str(column).strip() for column in raw.columns]
    if raw.shape[1] < 2 or raw.columns[0].lower() != DATE_COLUMN:
        raise DataFileError(
            "price file needs a header 'date,<price>[,<price>]'", path=str(path), lines=(1,)
        )
    dates = pd.to_datetime(raw.iloc[:, 0], format="ISO8601", errors="coerce")
    prices = raw.iloc[:, 1:].apply(pd.to_numeric, errors="coerce")
    bad = dates.isna() | prices.isna().any(axis=1) | ~np.isfinite(prices).all(axis=1)
    # Header is line 1.
    bad_lines = [int(index) + 2 for index in np.flatnonzero(bad.to_numpy())]
    kept = np.flatnonzero(~bad.to_numpy())
    frame = prices.loc[~bad].copy()
    frame.index = pd.DatetimeIndex(dates.loc[~bad], name=DATE_COLUMN)
    if frame.index.has_duplicates:
        repeated = kept[frame.index.duplicated(keep="first")]
        raise DataFileError(
            "price file repeats dates",
            path=str(path),
            lines=tuple(int(index) + 2 for index in repeated),
        )
    return frame.sort_index(), bad_lines


def load_prices_csv(path: str | Path, *more: str | Path) -> PriceTable:
    """Read one or more price files and inner-join them on date."""

    paths = [Path(item) for item in (path, *more)]
    frames: list[pd.DataFrame] = []
    skipped: list[tuple[str, int]] = []
    for item in paths:
        frame, bad_lines = _read_one(item)
        if bad_lines:
            logger.warning(
                "%s: skipped %d unparseable row(s) at line(s) %s",
                item,
                len(bad_lines),
                ",".join(str(line) for line in bad_lines[:20]),
            )
            skipped.extend((str(item), line) for line in bad_lines)
        if frame.empty:
            raise DataFileError("price file has no usable rows", path=str(item), lines=tuple(bad_lines))
        if len(paths) > 1:
            frame.columns = [f"{item.stem}:{column}" for column in frame.columns]
        frames.append(frame)
    joined = pd.concat(frames, axis=1, join="inner") if len(frames) > 1 else frames[0]
    if joined.empty:
        raise AlignmentError(
            "price files share no dates", context={"paths": ",".join(str(p) for p in paths)}
        )
    return PriceTable(joined, tuple(str(p) for p in paths), tuple(skipped))


def _price_matrix(prices: PriceTable | pd.DataFrame) -> pd.DataFrame:
    frame = prices.frame if isinstance(prices, PriceTable) else prices
    if frame.shape[1] not in (1, 2):
        raise InvalidArgumentError("expected one or two price columns")
    if frame.shape[0] < 2:
        raise InvalidArgumentError("at least two prices are needed for one return")
    if not np.all(frame.to_numpy() > 0.0):
        raise InvalidArgumentError("prices must be positive")
    return frame


def _series(frame: pd.DataFrame, values: NDArray[np.float64], kind: str, scale: float) -> ReturnSeries:
    dates = pd.DatetimeIndex(frame.index[1:])
    data = values[:, 0] if values.shape[1] == 1 else values
    frequency = pd.infer_freq(dates) if dates.shape[0] >= 3 else None
    return ReturnSeries(
        dates, data, kind, tuple(str(c) for c in frame.columns), scale, frequency
    )


def to_log_returns(prices: PriceTable | pd.DataFrame, scale: float = 1.0) -> ReturnSeries:
    """``scale * (log S_t - log S_{t-1})``; the first row is consumed."""

    scale = positive_number(scale, "scale")
    frame = _price_matrix(prices)
    values = scale * np.diff(np.log(frame.to_numpy(dtype=np.float64)), axis=0)
    return _series(frame, values, "log", scale)


def to_relative_returns(prices: PriceTable | pd.DataFrame, scale: float = 1.0) -> ReturnSeries:
    """``scale * (S_t - S_{t-1}) / S_{t-1}``; the first row is consumed."""

    scale = positive_number(scale, "scale")
    frame = _price_matrix(prices)
    matrix = frame.to_numpy(dtype=np.float64)
    values = scale * (matrix[1:] - matrix[:-1]) / matrix[:-1]
    return _series(frame, values, "relative", scale)


def prices_from_returns(
    returns: ArrayLike,
    kind: str = "log",
    scale: float = 1.0,
    start: float = 100.0,
) -> NDArray[np.float64]:
    """Invert :func:`to_log_returns` or :func:`to_relative_returns`."""

    scale = positive_number(scale, "scale")
    r = np.asarray(returns, dtype=np.float64)
    if r.ndim not in (1, 2):
        raise InvalidArgumentError("returns must be a vector or an n x 2 matrix")
    r = finite_array(r, "returns", ndim=r.ndim)
    if kind == "log":
        growth = np.exp(np.cumsum(r / scale, axis=0))
    elif kind == "relative":
        if np.any(r / scale <= -1.0):
            raise InvalidArgumentError("returns at or below -100% imply nonpositive prices")
        growth = np.cumprod(1.0 + r / scale, axis=0)
    else:
        raise InvalidArgumentError(f"unknown return kind: {kind!r}")
    first = np.full((1,) + r.shape[1:], 1.0)
    return start * np.concatenate((first, growth), axis=0)


def write_prices_csv(
    output_path: str | Path,
    prices: ArrayLike,
    dates: Iterable[object] | None = None,
    columns: tuple[str, ...] | None = None,
) -> Path:
    """Write ``date,<price>...`` rows; dates default to business days from 2000-01-03."""

    matrix = np.asarray(prices, dtype=np.float64)
    if matrix.ndim == 1:
        matrix = matrix[:, None]
    index = (
        pd.DatetimeIndex(list(dates))
        if dates is not None
        else pd.bdate_range("2000-01-03", periods=matrix.shape[0])
    )
    if columns is None:
        columns = ("price",) if matrix.shape[1] == 1 else tuple(
            f"price_{i + 1}" for i in range(matrix.shape[1])
        )
    frame = pd.DataFrame(matrix, index=index, columns=list(columns))
    frame.index.name = DATE_COLUMN
    output = Path(output_path)
    output.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(output, date_format="%Y-%m-%d", float_format="%.17g")
    return output


def load_forecasts_csv(
    path: str | Path,
    forecast_column: str = "forecast",
    realization_column: str = "realization",
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Read paired forecasts and realizations for a backtest.

    Unlike price files, a missing or non-numeric value is an error: dropping
    rows would shift the exceedance sequence.
    """

    source = Path(path)
    try:
        raw = pd.read_csv(source, skipinitialspace=True)
    except FileNotFoundError as exc:
        raise DataFileError("forecast file does not exist", path=str(source)) from exc
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as exc:
        raise DataFileError(f"forecast file is not valid CSV: {exc}", path=str(source)) from exc
    raw.columns = [str(column).strip() for column in raw.columns]
    missing = [name for name in (forecast_column, realization_column) if name not in raw.columns]
    if missing:
        raise DataFileError(
            f"forecast file lacks column(s): {', '.join(missing)}", path=str(source), lines=(1,)
        )
    pair = raw[[forecast_column, realization_column]].apply(pd.to_numeric, errors="coerce")
    bad = ~np.isfinite(pair.to_numpy(dtype=np.float64)).all(axis=1)
    if bad.any():
        raise DataFileError(
            "forecast file has missing or non-numeric values",
            path=str(source),
            lines=tuple(int(index) + 2 for index in np.flatnonzero(bad)),
        )
    return (
        pair[forecast_column].to_numpy(dtype=np.float64),
        pair[realization_column].to_numpy(dtype=np.float64),
    )
