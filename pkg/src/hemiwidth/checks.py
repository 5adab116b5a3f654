"""Small pass/fail records shared by every verification surface."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Check:
    """One named pass/fail check with the measured value and its threshold."""

    name: str
    passed: bool
    measured: object
    threshold: object
    detail: str = ""


@dataclass
class CheckReport:
    """A bundle of checks about one subject, plus free-form notes."""

    subject: str
    checks: list[Check] = field(default_factory=list)
    notes: tuple[str, ...] = ()

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]

    def add(self, name, passed, measured, threshold, detail=""):
        self.checks.append(Check(name, bool(passed), measured, threshold, detail))
