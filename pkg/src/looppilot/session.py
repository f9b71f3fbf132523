"""The user-on-the-loop session engine.

A session owns one world, one registry snapshot, one chat adapter, and an
append-only event log.  The invariant everything else hangs off: no program
ever executes without a logged approval immediately governing it.  Approval
comes from a human actor, or from the configured auto-approver — which is
still logged, so the audit trail never has gaps.

Three modes:
  - codegen: one-shot program generation and execution;
  - feedback: iterate with drafted execution feedback the human can edit;
  - dialog: closed perception-action loop where each turn serializes the
    scene, sends it, and executes the constrained action that comes back.
"""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .dsl import ast
from .dsl.interpreter import ExecLimits, execute
from .dsl.parser import parse_program
from .errors import (
    LoopPilotError,
    MalformedAction,
    MissingBackendEffect,
    NothingPending,
    ProgramSyntaxError,
    ScenarioError,
    VetoedByValidator,
)
from .gateway import ChatMessage, make_adapter, record_transcript
from .parsing import (
    Violation,
    classify_response,
    extract_tagged,
    parse_action_line,
    validate_program,
)
from .prompting import ACTION_GRAMMAR_HINT, build_feedback_message, build_system_prompt
from .report import ExecReport
from .scenario import Scenario
from .worlds import make_world

EVENT_KINDS = (
    "turn_added",
    "code_proposed",
    "approval_granted",
    "approval_rejected",
    "execution_started",
    "execution_finished",
    "observation_sent",
)


@dataclass(frozen=True)
class Event:
    seq: int
    kind: str
    payload: dict

    def to_dict(self) -> dict:
        return {"seq": self.seq, "kind": self.kind, "payload": self.payload}


@dataclass
class PendingProposal:
    source: str
    program: ast.Program | None
    violations: list[Violation] = field(default_factory=list)


@dataclass(frozen=True)
class DialogOutcome:
    kind: str  # reached | exhausted | malformed
    step: int


# --- goal predicates (named in scenario files, so sessions stay world-agnostic) ---

def _goal_none(world, params):
    return True, 0.0


def _goal_at_position(world, params):
    pose = world.get_position()
    dx = pose.x - params["x"]
    dy = pose.y - params["y"]
    dz = (pose.z - params["z"]) if "z" in params else 0.0
    dist = math.sqrt(dx * dx + dy * dy + dz * dz)
    return dist <= params.get("radius", 0.5), dist


def _goal_near_object(world, params):
    dist = world.distance_to_label(params["label"])
    if dist is None:
        return False, float("inf")
    return dist <= params.get("radius", 0.5), dist


def _goal_layout_complete(world, params):
    target = params.get("target")
    return world.check_layout(target), float(world.misplaced_count(target))


def _goal_ball_caught(world, params):
    return world.caught, world.miss_distance


GOAL_PREDICATES = {
    "none": _goal_none,
    "at_position": _goal_at_position,
    "near_object": _goal_near_object,
    "layout_complete": _goal_layout_complete,
    "ball_caught": _goal_ball_caught,
}


class Session:
    def __init__(self, scenario: Scenario, world, registry, bound, adapter):
        self.scenario = scenario
        self.name = scenario.name
        self.mode = scenario.mode
        self.world = world
        self.registry = registry
        self.bound = bound
        self.adapter = adapter
        self.directive = scenario.directive
        self.limits: ExecLimits = scenario.limits
        self.auto_approve = scenario.auto_approve
        self.goal = scenario.goal
        self.history: list[ChatMessage] = []
        self.pending: PendingProposal | None = None
        self.events: list[Event] = []
        self.last_report: ExecReport | None = None
        self.last_rejection: str | None = None
        self.event_observer = None  # callable(Event) for telemetry fan-out
        self._seq = 0
        self._in_flight = False
        self._lock = threading.Lock()

    # --- construction ---

    @classmethod
    def start(cls, scenario: Scenario, adapter=None) -> "Session":
        if scenario.goal.get("predicate", "none") not in GOAL_PREDICATES:
            raise ScenarioError("goal.predicate", f"unknown predicate {scenario.goal['predicate']!r}")
        if scenario.mode == "dialog" and not scenario.auto_approve:
            raise ScenarioError("auto_approve", "dialog mode executes per turn and requires auto_approve")
        world = make_world(scenario.world_type, scenario.world_seed, scenario.world_params)
        registry = scenario.build_registry()
        try:
            bound = registry.bind(world)
        except MissingBackendEffect as exc:
            raise ScenarioError("registry", str(exc)) from exc
        if adapter is None:
            adapter = make_adapter(scenario.llm, scenario.base_dir)
        session = cls(scenario, world, registry, bound, adapter)
        system = build_system_prompt(scenario.context, registry, scenario.directive)
        session.history.append(ChatMessage("system", system))
        session._emit("turn_added", role="system", content=system)
        return session

    # --- event log ---

    def _emit(self, kind: str, **payload) -> Event:
        assert kind in EVENT_KINDS
        self._seq += 1
        event = Event(self._seq, kind, payload)
        self.events.append(event)
        if self.event_observer is not None:
            self.event_observer(event)
        return event

    def event_log(self) -> list[dict]:
        return [e.to_dict() for e in self.events]

    def write_events(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8") as fh:
            for e in self.events:
                fh.write(json.dumps(e.to_dict(), ensure_ascii=False, sort_keys=True) + "\n")

    def world_hash(self) -> str:
        return self.world.state_hash()

    # --- conversation ---

    def user_message(self, text: str) -> str:
        """Send a user turn, parse the reply, and stage any proposed program."""
        with self._lock:
            if self._in_flight:
                raise LoopPilotError("a send is already in flight for this session")
            self._in_flight = True
        try:
            self.history.append(ChatMessage("user", text))
            self._emit("turn_added", role="user", content=text)
            reply = self.adapter.send(self.history)
            self.history.append(reply)
            classification = classify_response(reply.content, self.directive)
            self._emit(
                "turn_added",
                role="assistant",
                content=reply.content,
                classification=classification,
            )
            if self.directive.mode == "code_in_tag":
                self._stage_program(reply.content)
            return reply.content
        finally:
            self._in_flight = False

    def _stage_program(self, reply_text: str) -> None:
        blocks = extract_tagged(reply_text, self.directive.tag_name)
        if not blocks:
            return  # unstructured reply: already flagged, nothing to stage
        source = blocks[0].content.strip("\n")
        replaced = self.pending is not None
        try:
            program = parse_program(source)
            violations = validate_program(program, self.registry)
        except ProgramSyntaxError as exc:
            program = None
            violations = [
                Violation("UnstructuredResponse", "", "a parsable program", str(exc), exc.line, exc.col)
            ]
        self.pending = PendingProposal(source, program, violations)
        self._emit(
            "code_proposed",
            source=source,
            violations=[v.to_dict() for v in violations],
            replaced=replaced,
        )
        if self.auto_approve and not violations:
            self.approve(actor="auto")

    # --- the approval gate ---

    def approve(self, actor: str = "human") -> ExecReport:
        if self.pending is None:
            raise NothingPending("no program awaits approval")
        if self.pending.violations:
            detail = "; ".join(v.describe() for v in self.pending.violations)
            raise VetoedByValidator(f"cannot approve a program with violations: {detail}")
        self._emit("approval_granted", actor=actor)
        pending = self.pending
        self.pending = None
        return self._execute(pending)

    def reject(self, reason: str) -> str:
        if self.pending is None:
            raise NothingPending("no program awaits approval")
        pending = self.pending
        self.pending = None
        self.last_rejection = reason
        self._emit("approval_rejected", reason=reason)
        draft = ExecReport(
            success=False,
            violations=list(pending.violations),
            note=f"rejected by the operator: {reason}",
        )
        return build_feedback_message(draft)

    def _execute(self, pending: PendingProposal) -> ExecReport:
        self._emit("execution_started", source=pending.source)
        collisions_before = self.world.collision_count()
        trace = execute(pending.program, self.bound, self.limits, seed=self.scenario.world_seed)
        collisions = self.world.collision_count() - collisions_before
        met, metric = self.evaluate_goal()
        success = met and collisions == 0 and trace.completed
        report = ExecReport(
            success=success,
            goal_metric=metric,
            collisions=collisions,
            halted_reason=trace.halt_reason,
            duration_steps=trace.steps,
        )
        self.last_report = report
        self._emit("execution_finished", report=report.to_dict())
        return report

    def evaluate_goal(self) -> tuple[bool, float]:
        predicate = GOAL_PREDICATES[self.goal.get("predicate", "none")]
        return predicate(self.world, self.goal.get("params", {}))

    def feedback_draft(self) -> str | None:
        if self.last_report is None:
            return None
        return build_feedback_message(self.last_report)

    # --- closed-loop dialog ---

    def run_dialog_loop(self, max_steps: int = 50) -> DialogOutcome:
        """Observation -> constrained action -> actuation, until the goal or budget.

        A malformed reply earns one reprompt restating the grammar; a second
        consecutive failure ends the loop with a malformed outcome.
        """
        if self.mode != "dialog":
            raise LoopPilotError("run_dialog_loop requires dialog mode")
        label = self.goal.get("params", {}).get("label", "target")
        for step in range(1, max_steps + 1):
            met, _ = self.evaluate_goal()
            if met:
                return DialogOutcome("reached", step - 1)
            scene = self.world.describe_scene().render()
            observation = (
                f"Scene: {scene}. Goal: reach the {label}. "
                f"Reply with exactly one line: {ACTION_GRAMMAR_HINT}."
            )
            self._emit("observation_sent", observation=observation, step=step)
            reply = self.user_message(observation)
            try:
                command = parse_action_line(reply)
            except MalformedAction:
                reprompt = (
                    "That reply was not understood. Answer with exactly one line "
                    f"of the form: {ACTION_GRAMMAR_HINT}. Nothing else."
                )
                reply = self.user_message(reprompt)
                try:
                    command = parse_action_line(reply)
                except MalformedAction:
                    return DialogOutcome("malformed", step)
            self._emit("approval_granted", actor="auto")
            self._emit("execution_started", source=f"turn {command.turn_deg}; forward {command.forward_m}")
            self.world.turn(command.turn_deg)
            self.world.forward(command.forward_m)
            met, metric = self.evaluate_goal()
            report = ExecReport(success=met, goal_metric=metric, duration_steps=1)
            self.last_report = report
            self._emit("execution_finished", report=report.to_dict())
            if met:
                return DialogOutcome("reached", step)
        return DialogOutcome("exhausted", max_steps)

    # --- recording ---

    def record(self, path: str | Path, events_path: str | Path | None = None) -> None:
        metadata = {
            "scenario": self.name,
            "adapter": self.adapter.kind,
            "mode": self.mode,
        }
        if events_path is not None:
            metadata["events_path"] = str(events_path)
        record_transcript(path, self.history, metadata)
        if events_path is not None:
            self.write_events(events_path)
