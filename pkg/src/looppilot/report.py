"""Execution outcome record shared by the session engine and feedback builder."""

from __future__ import annotations

from dataclasses import dataclass, field

from .parsing import Violation


@dataclass
class ExecReport:
    success: bool
    goal_metric: float = 0.0
    collisions: int = 0
    violations: list[Violation] = field(default_factory=list)
    halted_reason: str | None = None
    duration_steps: int = 0
    note: str = ""

    def __post_init__(self):
        # a run cannot be called successful if it collided or was invalid
        if self.success and (self.collisions or self.violations):
            raise ValueError("success report cannot carry collisions or violations")

    def to_dict(self) -> dict:
        return {
            "success": self.success,
            "goal_metric": self.goal_metric,
            "collisions": self.collisions,
            "violations": [v.to_dict() for v in self.violations],
            "halted_reason": self.halted_reason,
            "duration_steps": self.duration_steps,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExecReport":
        return cls(
            success=data["success"],
            goal_metric=data.get("goal_metric", 0.0),
            collisions=data.get("collisions", 0),
            violations=[Violation(**v) for v in data.get("violations", [])],
            halted_reason=data.get("halted_reason"),
            duration_steps=data.get("duration_steps", 0),
            note=data.get("note", ""),
        )
