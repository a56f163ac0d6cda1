"""Machine-readable verification results and their serialization."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field


def _fmt(x):
    """Format a float with 17 significant digits (round-trip safe)."""
    if isinstance(x, float):
        return float(f"{x:.17g}")
    return x


@dataclass(frozen=True)
class Check:
    """A single verification check with its residual."""

    check_id: str
    expected: float
    predicted: float
    residual: float
    passed: bool


@dataclass
class Report:
    """Outcome of a verifier or classifier run.

    `checks` holds one entry per elementary comparison; `info` carries
    verifier-specific summary fields (flags, seeds, derived values).
    """

    name: str
    passed: bool
    tol: float
    checks: list[Check] = field(default_factory=list)
    info: dict = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        if not self.checks:
            return 0.0
        return max(c.residual for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "tol": _fmt(self.tol),
            "max_residual": _fmt(self.max_residual),
            "n_checks": len(self.checks),
            "info": _jsonable(self.info),
            "checks": [
                {
                    "check_id": c.check_id,
                    "expected": _fmt(c.expected),
                    "predicted": _fmt(c.predicted),
                    "residual": _fmt(c.residual),
                    "passed": c.passed,
                }
                for c in self.checks
            ],
        }


def _jsonable(obj):
    """Coerce report info values into JSON-serializable form."""
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in sorted(obj.items(), key=lambda kv: str(kv[0]))}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = list(obj)
        if isinstance(obj, (set, frozenset)):
            items = sorted(items, key=str)
        return [_jsonable(v) for v in items]
    if isinstance(obj, float):
        return _fmt(obj)
    if isinstance(obj, (bool, int, str)) or obj is None:
        return obj
    return str(obj)


def make_check(check_id: str, expected: float, predicted: float, tol: float) -> Check:
    residual = abs(float(predicted) - float(expected))
    return Check(check_id, float(expected), float(predicted), residual, residual <= tol)


def render_report(report: Report, fmt: str = "json") -> bytes:
    """Serialize a report deterministically.

    JSON output uses sorted keys; CSV lists one row per check with the
    header ``check_id,expected,predicted,residual``.
    """
    if fmt == "json":
        text = json.dumps(report.to_dict(), sort_keys=True, indent=2)
        return (text + "\n").encode("utf-8")
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["check_id", "expected", "predicted", "residual"])
        for c in report.checks:
            writer.writerow(
                [c.check_id, f"{c.expected:.17g}", f"{c.predicted:.17g}", f"{c.residual:.17g}"]
            )
        return buf.getvalue().encode("utf-8")
    raise ValueError(f"unknown report format: {fmt!r}")
