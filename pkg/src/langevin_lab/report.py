"""Run reports: named inequality assertions, metrics, and CSV/JSON output.

Every assertion records the inequality it checked together with both
side values, so a report is self-describing and a rerun from the echoed
config reproduces it bit-for-bit (wall-clock aside).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional


@dataclass
class Assertion:
    name: str
    lhs: float
    relation: str
    rhs: float
    passed: bool

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "relation": self.relation,
                "rhs": self.rhs, "passed": self.passed}


def check(name: str, lhs: float, relation: str, rhs: float, slack: float = 0.0) -> Assertion:
    lhs, rhs = float(lhs), float(rhs)
    if relation == "<=":
        ok = lhs <= rhs + slack
    elif relation == "<":
        ok = lhs < rhs
    elif relation == ">=":
        ok = lhs >= rhs - slack
    elif relation == "==":
        ok = abs(lhs - rhs) <= slack
    else:
        raise ValueError(f"unknown relation {relation!r}")
    if math.isnan(lhs) or math.isnan(rhs):
        ok = False
    return Assertion(name=name, lhs=lhs, relation=relation, rhs=rhs, passed=bool(ok))


@dataclass
class RunReport:
    command: str
    config: dict
    seed: int
    assertions: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)
    wall_clock: float = 0.0

    @property
    def passed(self) -> bool:
        return all(a.passed for a in self.assertions)

    def add(self, assertion: Assertion) -> Assertion:
        self.assertions.append(assertion)
        return assertion

    def to_dict(self) -> dict:
        return {
            "command": self.command,
            "config": self.config,
            "seed": self.seed,
            "passed": self.passed,
            "assertions": [a.to_dict() for a in self.assertions],
            "metrics": self.metrics,
            "outputs": self.outputs,
            "wall_clock_seconds": self.wall_clock,
        }

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def write_csv(path, header, rows, meta: Optional[dict] = None) -> None:
    """CSV with optional '# key=value' metadata comment lines."""
    with open(path, "w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
