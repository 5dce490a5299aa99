"""Field-named argument checks shared by the numerical modules."""

from __future__ import annotations

import math
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import InsufficientSampleError, InvalidArgumentError


def finite_number(value: Any, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float, np.integer, np.floating)):
        raise InvalidArgumentError(f"{field} must be numeric")
    number = float(value)
    if not math.isfinite(number):
        raise InvalidArgumentError(f"{field} must be finite")
    return number


def positive_number(value: Any, field: str) -> float:
    number = finite_number(value, field)
    if number <= 0:
        raise InvalidArgumentError(f"{field} must be greater than 0")
    return number


def nonnegative_number(value: Any, field: str) -> float:
    number = finite_number(value, field)
    if number < 0:
        raise InvalidArgumentError(f"{field} must be at least 0")
    return number


def integer(value: Any, field: str, *, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
        raise InvalidArgumentError(f"{field} must be an integer")
    if value < minimum:
        raise InvalidArgumentError(f"{field} must be at least {minimum}")
    return int(value)


def probability(value: Any, field: str) -> float:
    """A level in the open interval (0, 1)."""

    number = finite_number(value, field)
    if not 0.0 < number < 1.0:
        raise InvalidArgumentError(f"{field} must lie in the open interval (0, 1)")
    return number


def finite_array(
    values: ArrayLike,
    field: str,
    *,
    minimum: int = 1,
    ndim: int = 1,
) -> NDArray[np.float64]:
    try:
        array = np.asarray(values, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise InvalidArgumentError(f"{field} must be numeric") from exc
    if array.ndim != ndim:
        raise InvalidArgumentError(f"{field} must be {ndim}-dimensional")
    if array.shape[0] < minimum:
        raise InsufficientSampleError(
            f"{field} needs at least {minimum} observations, got {array.shape[0]}"
        )
    if not np.all(np.isfinite(array)):
        raise InvalidArgumentError(f"{field} must contain only finite values")
    return array


def same_length(first: NDArray[Any], second: NDArray[Any], fields: str) -> None:
    if first.shape[0] != second.shape[0]:
        raise InvalidArgumentError(
            f"{fields} must have equal lengths, got {first.shape[0]} and {second.shape[0]}"
        )
