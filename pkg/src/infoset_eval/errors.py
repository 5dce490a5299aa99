"""Exception types with stable codes.

Every error carries an upper-case ``code`` that reports and the CLI can rely on,
and a human ``detail``. Conditions that are expected during long experiments
(optimizer boundary hits, variance fallbacks, single-state indicator series)
are reported as flags on results instead.
"""

from __future__ import annotations

from typing import Any, Mapping


def _code(value: str) -> str:
    normalized = "".join(character if character.isalnum() else "_" for character in value)
    normalized = "_".join(part for part in normalized.upper().split("_") if part)
    if not normalized:
        raise ValueError("error code must contain at least one alphanumeric character")
    return normalized[:96]


class InfosetError(Exception):
    """Base class for all package errors."""

    default_code = "INFOSET_ERROR"

    def __init__(
        self,
        detail: str,
        *,
        code: str | None = None,
        context: Mapping[str, Any] | None = None,
    ) -> None:
        self.code = _code(code or self.default_code)
        self.detail = str(detail).strip() or self.code
        self.context: dict[str, Any] = dict(context or {})
        super().__init__(self.detail)

    def with_context(self, **items: Any) -> InfosetError:
        """Attach context (config digest, file path, cell) and return self."""

        self.context.update(items)
        return self

    def __str__(self) -> str:
        if not self.context:
            return self.detail
        rendered = ", ".join(f"{key}={value}" for key, value in sorted(self.context.items()))
        return f"{self.detail} [{rendered}]"

    def to_dict(self) -> dict[str, Any]:
        return {"code": self.code, "detail": self.detail, "context": dict(self.context)}


class InvalidArgumentError(InfosetError, ValueError):
    default_code = "INVALID_ARGUMENT"


class InsufficientSampleError(InvalidArgumentError):
    default_code = "INSUFFICIENT_SAMPLE"


class AlignmentError(InvalidArgumentError):
    default_code = "ALIGNMENT_EMPTY"


class DataFileError(InvalidArgumentError):
    """Unreadable or inconsistent input file, with offending line numbers."""

    default_code = "DATA_FILE_INVALID"

    def __init__(
        self,
        detail: str,
        *,
        path: str | None = None,
        lines: tuple[int, ...] = (),
        code: str | None = None,
    ) -> None:
        context: dict[str, Any] = {}
        if path is not None:
            context["path"] = path
        if lines:
            shown = ",".join(str(line) for line in lines[:20])
            context["lines"] = shown + (",..." if len(lines) > 20 else "")
        super().__init__(detail, code=code, context=context)
        self.path = path
        self.lines = lines


class ConfigError(InfosetError, ValueError):
    default_code = "CONFIG_INVALID"


class NumericalFailure(InfosetError, ArithmeticError):
    default_code = "NUMERICAL_FAILURE"


class DegenerateVarianceError(NumericalFailure):
    default_code = "DEGENERATE_VARIANCE"
