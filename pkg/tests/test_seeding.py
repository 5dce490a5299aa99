from __future__ import annotations

import json

import numpy as np
import pytest

from infoset_eval.errors import InvalidArgumentError
from infoset_eval.seeding import check_seed, derive_rng, derive_seed, stream_key
from infoset_eval.serialization import canonical_json, seal, sha256_json, write_json_artifact


def test_streams_depend_only_on_their_keys() -> None:
    first = derive_rng(2016, "replication", 500, 3).standard_normal(5)
    # Drawing from an unrelated stream in between changes nothing.
    derive_rng(2016, "replication", 500, 2).standard_normal(1000)
    again = derive_rng(2016, "replication", 500, 3).standard_normal(5)
    np.testing.assert_array_equal(first, again)
    other = derive_rng(2016, "replication", 500, 4).standard_normal(5)
    assert not np.array_equal(first, other)


def test_string_keys_are_stable_integers() -> None:
    assert stream_key("garch") == stream_key("garch")
    assert stream_key("garch") != stream_key("dcc")
    assert 0 <= stream_key("mc") < 2**32
    assert derive_seed(1, "path", 2) == derive_seed(1, "path", 2)
    assert derive_seed(1, "path", 2) != derive_seed(1, "path", 10)
    assert 0 <= derive_seed(0) < 2**64


@pytest.mark.parametrize("seed", (-1, 2**64, True, 1.5))
def test_invalid_seeds(seed: object) -> None:
    with pytest.raises(InvalidArgumentError):
        check_seed(seed)  # type: ignore[arg-type]


def test_negative_keys_are_refused() -> None:
    with pytest.raises(InvalidArgumentError):
        derive_rng(0, -3)


def test_canonical_json_handles_numpy_and_non_finite_values() -> None:
    payload = {"b": np.float64(1.5), "a": [np.int64(2), float("nan")], "c": np.bool_(True)}
    assert canonical_json(payload) == '{"a":[2,null],"b":1.5,"c":true}'
    assert sha256_json(payload) == sha256_json(json.loads(canonical_json(payload)))


def test_seal_excludes_its_own_field() -> None:
    sealed = seal({"x": 1})
    resealed = seal(sealed)
    assert sealed["report_sha256"] == resealed["report_sha256"]
    assert len(sealed["report_sha256"]) == 64


def test_written_artifacts_end_with_a_newline(tmp_path) -> None:
    path = write_json_artifact(tmp_path / "a" / "b.json", {"z": 1, "a": 2})
    text = path.read_text(encoding="utf-8")
    assert text.endswith("\n")
    assert list(json.loads(text)) == ["a", "z"]
