"""Canonical JSON, SHA-256 sealing, and artifact writers."""

from __future__ import annotations

from dataclasses import asdict, is_dataclass
from enum import Enum
from hashlib import sha256
import json
import math
from pathlib import Path
from typing import Any, Mapping

import numpy as np

SCHEMA_PREFIX = "infoset"


def schema_version(artifact: str) -> str:
    return f"{SCHEMA_PREFIX}.{artifact}/v0.1"


def jsonable(value: Any) -> Any:
    if isinstance(value, Enum):
        return value.value
    if is_dataclass(value) and not isinstance(value, type):
        return {key: jsonable(item) for key, item in asdict(value).items()}
    if isinstance(value, Mapping):
        return {str(key): jsonable(item) for key, item in value.items()}
    if isinstance(value, (tuple, list)):
        return [jsonable(item) for item in value]
    if isinstance(value, np.ndarray):
        return [jsonable(item) for item in value.tolist()]
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        # JSON has no representation for these.
        return number if math.isfinite(number) else None
    return value


def canonical_json(value: Any) -> str:
    return json.dumps(
        jsonable(value),
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )


def sha256_json(value: Any) -> str:
    return sha256(canonical_json(value).encode("utf-8")).hexdigest()


def seal(report: dict[str, Any], field: str = "report_sha256") -> dict[str, Any]:
    """Add the digest of the report body under ``field``."""

    body = {key: item for key, item in report.items() if key != field}
    sealed = jsonable(body)
    sealed[field] = sha256_json(body)
    return sealed


def write_json_artifact(output_path: str | Path, artifact: Mapping[str, Any]) -> Path:
    output = Path(output_path)
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(
        json.dumps(jsonable(artifact), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return output
