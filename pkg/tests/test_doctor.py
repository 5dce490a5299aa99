from __future__ import annotations

import json

from infoset_eval._version import __version__
from infoset_eval.cli import main
from infoset_eval.config import PRESET_NAMES
from infoset_eval.doctor import (
    DEPENDENCY_FLOORS,
    EXPECTED_CONSOLE_SCRIPTS,
    REQUIRED_IMPORTS,
    SOURCE_FILES,
    _dependency_checks,
    build_doctor_report,
)


def test_doctor_passes_for_editable_install() -> None:
    report = build_doctor_report()
    assert report["status"] == "pass", report["blockers"]
    assert report["package"]["version"] == __version__
    assert report["package"]["installed_metadata_version"] == __version__
    assert set(report["console_scripts"]) == set(EXPECTED_CONSOLE_SCRIPTS)
    assert set(report["presets"]) == set(PRESET_NAMES)
    assert all(report["presets"].values())
    assert set(report["module_imports"]) == set(REQUIRED_IMPORTS)
    assert set(report["module_imports"].values()) == {"ok"}
    assert report["source_checkout"]["detected"] is True
    assert set(report["source_checkout"]["files"]) == set(SOURCE_FILES)
    assert report["blockers"] == []


def test_doctor_cli_emits_machine_readable_report(capsys) -> None:
    assert main(["doctor", "--json", "--strict"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["status"] == "pass"
    assert payload["schema_version"] == "infoset.doctor-report/v0.1"
    assert payload["package"]["version"] == __version__
    assert len(payload["checks"]) >= len(PRESET_NAMES) + len(REQUIRED_IMPORTS)


def test_doctor_cli_prints_a_summary(capsys) -> None:
    assert main(["doctor"]) == 0
    output = capsys.readouterr().out
    assert output.startswith(f"infoset-eval {__version__}")
    assert "status: pass" in output
    assert f"presets: {len(PRESET_NAMES)}/{len(PRESET_NAMES)}" in output


def test_every_failed_check_contributes_its_blocker() -> None:
    report = build_doctor_report()
    checks = {check["check_id"]: check for check in report["checks"]}
    assert checks["numerics"]["passed"] is True
    assert checks["preset:garch-1"]["detail"] == "garch, seed 2016"
    assert all(check["blocker"] is None for check in checks.values() if check["passed"])
    assert set(report["runtime"]["dependencies"]) == {"numpy", "scipy", "pandas"}


def test_dependency_floors_follow_the_project_requirements() -> None:
    floors = _dependency_checks({"numpy": "1.26.4", "scipy": "1.9.3", "pandas": None})
    checks = {check.check_id: check for check in floors}
    assert set(checks) == {f"dependency:{name}" for name in DEPENDENCY_FLOORS}
    assert checks["dependency:numpy"].passed
    assert not checks["dependency:scipy"].passed
    assert checks["dependency:scipy"].to_dict()["blocker"] == "DEPENDENCY_TOO_OLD:scipy"
    assert not checks["dependency:pandas"].passed
    assert checks["dependency:pandas"].detail == "missing (needs >=2.0)"

    upgraded = _dependency_checks({"numpy": "2.1.0rc1", "scipy": "1.14.1", "pandas": "2.2.3"})
    assert all(check.passed for check in upgraded)


def test_installed_dependencies_meet_their_floors() -> None:
    report = build_doctor_report()
    checks = {check["check_id"]: check for check in report["checks"]}
    for name in DEPENDENCY_FLOORS:
        assert checks[f"dependency:{name}"]["passed"] is True, checks[f"dependency:{name}"]
