"""Check records and reports written by the verification routines and the CLI."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from os import PathLike
from typing import Any


@dataclass
class CheckRecord:
    name: str
    params: dict[str, Any]
    residual: float
    threshold: float
    seed: int | None = None
    skip_rate: float | None = None
    elapsed_ms: float = 0.0
    # Set when the comparison is "at least" rather than "at most".
    lower_bound: bool = False
    detail: str = ""

    @property
    def passed(self) -> bool:
        if not math.isfinite(self.residual):
            return False
        if self.lower_bound:
            return self.residual >= self.threshold
        return self.residual < self.threshold

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "name": self.name,
            "params": self.params,
            "residual": self.residual,
            "threshold": self.threshold,
            "pass": self.passed,
            "seed": self.seed,
            "elapsed_ms": round(self.elapsed_ms, 3),
        }
        if self.skip_rate is not None:
            out["skip_rate"] = self.skip_rate
        if self.detail:
            out["detail"] = self.detail
        return out

    def summary_line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        cmp = ">=" if self.lower_bound else "<"
        line = f"{status}  {self.name:<34} residual={self.residual:.3e} {cmp} {self.threshold:.1e}"
        if self.skip_rate is not None:
            line += f"  skip_rate={self.skip_rate:.3f}"
        return line


@dataclass
class Report:
    records: list[CheckRecord] = field(default_factory=list)

    def add(self, record: CheckRecord) -> CheckRecord:
        self.records.append(record)
        return record

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if not r.passed]

    def to_dict(self) -> dict[str, Any]:
        return {"pass": self.passed, "records": [r.to_dict() for r in self.records]}

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def write(self, path: str | PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())
