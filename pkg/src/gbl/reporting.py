"""Deterministic report serialization.

Reports serialize to byte-identical JSON for identical (config, seed):
floats are printed with 17 significant digits, key order is insertion
order, and no timestamps enter the payload (wall time goes to stderr).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

SCHEMA_VERSION = 1


def _format_float(x: float) -> str:
    if x != x:
        return '"nan"'
    if x == float("inf"):
        return '"inf"'
    if x == float("-inf"):
        return '"-inf"'
    return format(float(x), ".17g")


def dumps(obj) -> str:
    """JSON text with fixed float formatting and insertion-ordered keys."""
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, float):
        return _format_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if obj is None:
        return "null"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, dict):
        inner = ",".join(f"{json.dumps(str(k))}:{dumps(v)}" for k, v in obj.items())
        return "{" + inner + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(dumps(v) for v in obj) + "]"
    if hasattr(obj, "item"):  # numpy scalars
        return dumps(obj.item())
    raise TypeError(f"cannot serialize {type(obj)!r}")


@dataclass
class CheckRecord:
    """One verified claim: margin is how far inside the tolerance it landed."""
    name: str
    status: str              # PASS | FAIL
    margin: float
    tolerance: float
    claim: str

    @classmethod
    def from_margin(cls, name: str, margin: float, tolerance: float, claim: str) -> "CheckRecord":
        status = "PASS" if margin >= -tolerance else "FAIL"
        return cls(name=name, status=status, margin=margin, tolerance=tolerance, claim=claim)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "status": self.status,
            "margin": self.margin,
            "tolerance": self.tolerance,
            "claim": self.claim,
        }


@dataclass
class Report:
    command: str
    config: dict
    version: str
    checks: list = field(default_factory=list)
    payload: dict = field(default_factory=dict)

    def add(self, record: CheckRecord) -> None:
        self.checks.append(record)

    def add_margin(self, name: str, margin: float, tolerance: float, claim: str) -> None:
        self.add(CheckRecord.from_margin(name, float(margin), float(tolerance), claim))

    @property
    def failed(self) -> int:
        return sum(1 for c in self.checks if c.status == "FAIL")

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "tool": "gbl",
            "version": self.version,
            "command": self.command,
            "config": self.config,
            "checks": [c.to_dict() for c in self.checks],
            "summary": {"pass": len(self.checks) - self.failed, "fail": self.failed},
            "payload": self.payload,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict()) + "\n"

    def to_csv(self) -> str:
        lines = ["name,status,margin,tolerance,claim"]
        for c in self.checks:
            claim = '"' + c.claim.replace('"', '""') + '"'
            lines.append(
                f"{c.name},{c.status},{format(c.margin, '.17g')},{format(c.tolerance, '.17g')},{claim}"
            )
        return "\n".join(lines) + "\n"
