"""Pass/fail reports shared by all checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any


@dataclass
class Report:
    check: str
    anchor: str = ""
    box: str = ""
    details: list[Any] = field(default_factory=list)
    failures: list[Any] = field(default_factory=list)
    data: dict[str, Any] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def status(self) -> str:
        return "pass" if self.ok else "fail"

    def fail(self, item) -> None:
        self.failures.append(item)

    def note(self, item) -> None:
        self.details.append(item)

    def merge(self, other: Report) -> None:
        self.details.extend(other.details)
        self.failures.extend(other.failures)

    def to_json(self) -> dict:
        out = {
            "check": self.check,
            "anchor": self.anchor,
            "box": self.box,
            "status": self.status,
            "details": self.details,
            "failures": self.failures,
        }
        if self.data:
            out["data"] = self.data
        return out
