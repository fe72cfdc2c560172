"""Structured outcome of a verification campaign or bound check."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

__all__ = ["VerificationReport"]


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of checking one statement over many trials.

    ``worst_margin`` is the most adverse signed slack seen: positive margins
    mean the inequality held with room, negative ones quantify a violation.
    A trial counts as a failure when its margin drops below ``-tolerance``.
    """

    name: str
    trials: int
    failures: int
    worst_margin: float
    tolerance: float
    witness: dict = field(default_factory=dict)
    skipped: int = 0

    @property
    def passed(self) -> bool:
        return self.failures == 0

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "trials": self.trials,
            "failures": self.failures,
            "worst_margin": self.worst_margin,
            "tolerance": self.tolerance,
            "witness": dict(self.witness),
            "skipped": self.skipped,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    def table(self) -> str:
        """Human-readable one-block summary."""
        status = "pass" if self.passed else "FAIL"
        lines = [
            f"statement     : {self.name}",
            f"trials        : {self.trials}" + (f" (+{self.skipped} skipped)" if self.skipped else ""),
            f"failures      : {self.failures}",
            f"worst margin  : {self.worst_margin:.17g}",
            f"tolerance     : {self.tolerance:.17g}",
            f"status        : {status}",
        ]
        if self.witness:
            lines.append(f"witness       : {json.dumps(self.witness, sort_keys=True)}")
        return "\n".join(lines)
