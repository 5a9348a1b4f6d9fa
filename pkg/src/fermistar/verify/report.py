"""Verification records and reports."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

__all__ = ["SCHEMA_VERSION", "CheckRecord", "Report"]

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CheckRecord:
    """Outcome of one identity check.

    ``anchor`` names the identity being checked (e.g. ``star.associativity``);
    ``max_residual`` is the largest deviation seen (0 for exact checks that
    hold).
    """

    name: str
    anchor: str
    status: str
    max_residual: float
    runtime: float
    m: int | None = None
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def to_json(self, timing: bool = True) -> dict:
        out = {
            "name": self.name,
            "anchor": self.anchor,
            "status": self.status,
            "max_residual": _finite(self.max_residual),
            "m": self.m,
            "detail": self.detail,
        }
        if timing:
            out["runtime"] = round(self.runtime, 6)
        return out


def _finite(x: float):
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf"
    return x


@dataclass
class Report:
    config: dict
    records: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def to_json(self, timing: bool = True) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "config": self.config,
            "passed": self.passed,
            "records": [r.to_json(timing) for r in self.records],
        }

    def dumps(self, timing: bool = True) -> str:
        return json.dumps(self.to_json(timing), indent=2, sort_keys=True)

    def summary_lines(self) -> list[str]:
        lines = []
        for r in self.records:
            tag = "PASS" if r.passed else r.status.upper()
            lines.append(f"{tag:5s} {r.name:48s} residual={r.max_residual:.3e} "
                         f"m={r.m} ({r.runtime:.2f}s){'  ' + r.detail if r.detail else ''}")
        n_ok = sum(r.passed for r in self.records)
        lines.append(f"{n_ok}/{len(self.records)} checks passed")
        return lines
