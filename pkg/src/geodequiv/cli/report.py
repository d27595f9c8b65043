"""Report records and their JSON / text renderings.

Both renderings are produced from the same record list, so they always carry
identical verdicts.  ``wall_time`` fields are the only nondeterministic
content; ``strip_timing`` removes them for comparisons.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any

import mpmath

from ..expr import Verdict, to_text

SCHEMA = 1


def _fraction(q) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def verdict_record(v: Verdict) -> dict[str, Any]:
    rec: dict[str, Any] = {"verdict": v.kind.value}
    rec["index"] = [k + 1 for k in v.index] if v.index is not None else None
    rec["witness"] = {k: _fraction(q) for k, q in sorted(v.witness.items())} if v.witness else None
    rec["value"] = mpmath.nstr(v.value, 15) if v.value is not None else None
    rec["residual"] = to_text(v.residual) if v.residual is not None else None
    return rec


@dataclass
class Record:
    name: str
    anchor: str
    verdict: Verdict | None
    ok: bool
    expected: str | None = None
    wall_time: float = 0.0
    extra: dict[str, Any] = field(default_factory=dict)

    def as_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"name": self.name, "anchor": self.anchor}
        if self.verdict is not None:
            out.update(verdict_record(self.verdict))
        out["expected"] = self.expected
        out["ok"] = self.ok
        out.update(self.extra)
        out["wall_time"] = round(self.wall_time, 6)
        return out


@dataclass
class Report:
    command: str
    subject: str
    seed: int
    precision: int
    records: list[Record] = field(default_factory=list)
    info: dict[str, Any] = field(default_factory=dict)
    wall_time: float = 0.0

    @property
    def ok(self) -> bool:
        return all(r.ok for r in self.records)

    def as_dict(self) -> dict[str, Any]:
        return {
            "schema": SCHEMA,
            "command": self.command,
            "subject": self.subject,
            "seed": self.seed,
            "precision": self.precision,
            "info": self.info,
            "checks": [r.as_dict() for r in self.records],
            "status": "ok" if self.ok else "fail",
            "wall_time": round(self.wall_time, 6),
        }

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=False) + "\n"

    def to_text(self) -> str:
        lines = [f"{self.command}: {self.subject}  (seed {self.seed}, {self.precision} bits)"]
        for k, v in self.info.items():
            lines.append(f"  {k}: {v}")
        for r in self.records:
            d = r.as_dict()
            mark = "ok  " if r.ok else "FAIL"
            verdict = d.get("verdict", "-")
            exp = f" (expected {r.expected})" if r.expected else ""
            lines.append(f"[{mark}] {r.name}: {verdict}{exp}")
            lines.append(f"       {r.anchor}")
            if d.get("index"):
                lines.append(f"       component {tuple(d['index'])}")
            if d.get("witness"):
                pts = ", ".join(f"{k} = {v}" for k, v in d["witness"].items())
                lines.append(f"       witness {pts}; value {d['value']}")
            if d.get("residual") and verdict != "zero":
                lines.append(f"       residual {d['residual']}")
            for k, v in r.extra.items():
                lines.append(f"       {k}: {v}")
        lines.append(f"status: {'ok' if self.ok else 'fail'}")
        return "\n".join(lines) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_json() if fmt == "json" else self.to_text()


def strip_timing(data: Any) -> Any:
    """Copy of a report dictionary without ``wall_time`` entries."""
    if isinstance(data, dict):
        return {k: strip_timing(v) for k, v in data.items() if k != "wall_time"}
    if isinstance(data, list):
        return [strip_timing(v) for v in data]
    return data
