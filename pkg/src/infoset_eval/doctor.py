"""Installed-package integrity report for ``infoset-eval doctor``.

Each check carries the blocker code it contributes when it fails. The report
passes only when no check produced a blocker.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import import_module, metadata
from pathlib import Path
import platform
import re
import sys
from typing import Any

from scipy.stats import norm

from ._version import __version__
from .config import PRESET_NAMES, preset_config
from .errors import InfosetError
from .scoring import quantile_score_sstar
from .serialization import schema_version

DOCTOR_SCHEMA_VERSION = schema_version("doctor-report")
DISTRIBUTION = "infoset-eval"
MIN_PYTHON = (3, 10)
EXPECTED_CONSOLE_SCRIPTS = ("infoset-eval",)
DEPENDENCY_FLOORS = {"numpy": (1, 24), "scipy": (1, 10), "pandas": (2, 0)}
DEPENDENCIES = tuple(DEPENDENCY_FLOORS)

REQUIRED_IMPORTS = (
    "infoset_eval.scoring",
    "infoset_eval.dmtest",
    "infoset_eval.garch",
    "infoset_eval.dcc",
    "infoset_eval.backtest",
    "infoset_eval.prices",
    "infoset_eval.config",
    "infoset_eval.report",
    "infoset_eval.pipeline",
    "infoset_eval.cli",
    "numpy",
    "scipy.optimize",
    "scipy.signal",
    "scipy.stats",
    "pandas",
)

SOURCE_FILES = (
    "README.md",
    "CHANGELOG.md",
    "DESIGN.md",
    "schemas/dm-test-result.schema.json",
    "schemas/backtest-report.schema.json",
    "schemas/experiment-report.schema.json",
)


@dataclass(frozen=True)
class Check:
    check_id: str
    passed: bool
    detail: str
    blocker: str

    def to_dict(self) -> dict[str, Any]:
        return {
            "check_id": self.check_id,
            "passed": self.passed,
            "detail": self.detail,
            "blocker": None if self.passed else self.blocker,
        }


def _installed_version(distribution: str) -> str | None:
    try:
        return metadata.version(distribution)
    except metadata.PackageNotFoundError:
        return None


def _python_check() -> Check:
    return Check(
        "python",
        sys.version_info[:2] >= MIN_PYTHON,
        platform.python_version(),
        "PYTHON_UNSUPPORTED",
    )


def _release(version: str) -> tuple[int, ...]:
    parts = []
    for piece in version.split(".")[:2]:
        match = re.match(r"\d+", piece)
        if match is None:
            break
        parts.append(int(match.group()))
    return tuple(parts)


def _dependency_checks(versions: dict[str, str | None]) -> list[Check]:
    # Floors mirror the pyproject requirements.
    checks = []
    for name, floor in DEPENDENCY_FLOORS.items():
        installed = versions.get(name)
        passed = installed is not None and _release(installed) >= floor
        wanted = ".".join(map(str, floor))
        checks.append(
            Check(
                f"dependency:{name}",
                passed,
                f"{installed or 'missing'} (needs >={wanted})",
                f"DEPENDENCY_TOO_OLD:{name}",
            )
        )
    return checks


def _metadata_check(installed: str | None) -> Check:
    return Check(
        "metadata-version",
        installed == __version__,
        f"module {__version__}, installed {installed or 'nothing'}",
        "METADATA_VERSION_MISMATCH",
    )


def _preset_checks() -> tuple[list[Check], dict[str, bool]]:
    # Presets are parsed and validated, not just located.
    checks: list[Check] = []
    loaded: dict[str, bool] = {}
    for name in PRESET_NAMES:
        try:
            config = preset_config(name)
        except (OSError, ValueError, InfosetError) as exc:
            loaded[name] = False
            detail = f"{type(exc).__name__}: {exc}"
        else:
            loaded[name] = True
            detail = f"{config.kind}, seed {config.seed}"
        checks.append(Check(f"preset:{name}", loaded[name], detail, f"PRESET_BROKEN:{name}"))
    return checks, loaded


def _console_script_check() -> tuple[Check, dict[str, str]]:
    installed = {
        entry.name: entry.value
        for entry in metadata.entry_points(group="console_scripts")
        if entry.name in EXPECTED_CONSOLE_SCRIPTS
    }
    missing = [name for name in EXPECTED_CONSOLE_SCRIPTS if name not in installed]
    detail = "all present" if not missing else "missing " + ", ".join(missing)
    return Check("console-scripts", not missing, detail, "CONSOLE_SCRIPT_MISSING"), installed


def _import_checks() -> tuple[list[Check], dict[str, str]]:
    status: dict[str, str] = {}
    for name in REQUIRED_IMPORTS:
        try:
            import_module(name)
        except Exception as exc:  # pragma: no cover
            status[name] = f"{type(exc).__name__}: {exc}"
        else:
            status[name] = "ok"
    checks = [
        Check(f"import:{name}", outcome == "ok", outcome, f"IMPORT_FAILED:{name}")
        for name, outcome in status.items()
    ]
    return checks, status


def _numerics_check() -> Check:
    score = float(quantile_score_sstar(-1.0, -2.0, 0.1))
    quantile = float(norm.ppf(0.01))
    passed = abs(score - 11.0) < 1e-12 and abs(quantile + 2.3263478740408408) < 1e-12
    return Check(
        "numerics",
        passed,
        f"S*(-1, -2; 0.1) = {score!r}, z(0.01) = {quantile!r}",
        "NUMERICS_MISMATCH",
    )


def _checkout_root() -> Path | None:
    root = Path(__file__).resolve().parents[2]
    manifest = root / "pyproject.toml"
    if not manifest.is_file():
        return None
    return root if f'name = "{DISTRIBUTION}"' in manifest.read_text(encoding="utf-8") else None


def _source_checks(root: Path) -> tuple[list[Check], dict[str, bool]]:
    present = {relative: (root / relative).is_file() for relative in SOURCE_FILES}
    checks = [
        Check(f"source:{relative}", found, relative, f"SOURCE_FILE_MISSING:{relative}")
        for relative, found in present.items()
    ]
    return checks, present


def build_doctor_report() -> dict[str, Any]:
    installed = _installed_version(DISTRIBUTION)
    checks = [_python_check(), _metadata_check(installed)]
    versions = {name: _installed_version(name) for name in DEPENDENCIES}
    checks.extend(_dependency_checks(versions))

    preset_checks, presets = _preset_checks()
    checks.extend(preset_checks)
    script_check, scripts = _console_script_check()
    checks.append(script_check)
    import_checks, imports = _import_checks()
    checks.extend(import_checks)
    checks.append(_numerics_check())

    root = _checkout_root()
    files: dict[str, bool] | None = None
    if root is not None:
        source_checks, files = _source_checks(root)
        checks.extend(source_checks)

    blockers = [check.blocker for check in checks if not check.passed]
    return {
        "schema_version": DOCTOR_SCHEMA_VERSION,
        "status": "fail" if blockers else "pass",
        "package": {
            "name": DISTRIBUTION,
            "version": __version__,
            "installed_metadata_version": installed,
        },
        "runtime": {
            "python": platform.python_version(),
            "platform": platform.platform(),
            "dependencies": versions,
        },
        "checks": [check.to_dict() for check in checks],
        "presets": presets,
        "console_scripts": scripts,
        "module_imports": imports,
        "source_checkout": {
            "detected": root is not None,
            "root": None if root is None else str(root),
            "files": files,
        },
        "blockers": blockers,
    }
