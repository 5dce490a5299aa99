from __future__ import annotations

import math

import numpy as np
import pytest

from infoset_eval.errors import (
    ConfigError,
    DataFileError,
    DegenerateVarianceError,
    InfosetError,
    InsufficientSampleError,
    InvalidArgumentError,
    NumericalFailure,
)
from infoset_eval.validation import finite_array, integer, probability, same_length


def test_codes_are_stable_and_inherited() -> None:
    assert InvalidArgumentError("x").code == "INVALID_ARGUMENT"
    assert InsufficientSampleError("x").code == "INSUFFICIENT_SAMPLE"
    assert DegenerateVarianceError("x").code == "DEGENERATE_VARIANCE"
    assert isinstance(DegenerateVarianceError("x"), NumericalFailure)
    assert isinstance(ConfigError("x"), ValueError)
    assert InfosetError("x", code="custom code").code == "CUSTOM_CODE"


def test_context_is_rendered_and_chained() -> None:
    error = ConfigError("bad window").with_context(path="study.toml", cell="h=1")
    assert error.context == {"path": "study.toml", "cell": "h=1"}
    assert str(error) == "bad window [cell=h=1, path=study.toml]"
    assert error.to_dict()["code"] == "CONFIG_INVALID"


def test_data_file_errors_keep_line_numbers() -> None:
    error = DataFileError("bad rows", path="a.csv", lines=tuple(range(2, 30)))
    assert error.lines[0] == 2
    assert error.context["path"] == "a.csv"
    assert error.context["lines"].endswith(",...")


def test_validation_names_the_field() -> None:
    with pytest.raises(InvalidArgumentError, match="window must be at least 100"):
        integer(50, "window", minimum=100)
    with pytest.raises(InvalidArgumentError, match="must be an integer"):
        integer(True, "window")
    with pytest.raises(InvalidArgumentError, match=r"alpha must lie in the open interval \(0, 1\)"):
        probability(1.0, "alpha")
    with pytest.raises(InvalidArgumentError, match="finite"):
        probability(math.nan, "alpha")


def test_arrays_are_checked_for_size_and_values() -> None:
    np.testing.assert_array_equal(finite_array([1, 2], "x"), [1.0, 2.0])
    with pytest.raises(InsufficientSampleError, match="needs at least 3"):
        finite_array([1.0, 2.0], "x", minimum=3)
    with pytest.raises(InvalidArgumentError, match="finite"):
        finite_array([1.0, math.inf], "x")
    with pytest.raises(InvalidArgumentError, match="equal lengths"):
        same_length(np.zeros(2), np.zeros(3), "forecasts and realizations")
