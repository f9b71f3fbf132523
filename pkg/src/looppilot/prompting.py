"""System prompt construction and feedback drafting.

A good task prompt names the allowed functions, the environment, the current
state, constraints, goals, and worked examples, and ends with a directive
that pins the shape of the reply (tagged code, a numbered list, a single
action line).  Everything here is a pure function of its inputs: rebuilding
from equal inputs is byte-identical, which makes prompts snapshot-testable.
"""

from __future__ import annotations

from dataclasses import dataclass

from .api_registry import ApiRegistry, IDENTIFIER_RE
from .errors import InvalidIdentifier
from .report import ExecReport

DIRECTIVE_MODES = ("code_in_tag", "numbered_list", "free_text", "constrained_action")

FEEDBACK_LIMIT = 2000

ACTION_GRAMMAR_HINT = "forward <meters>, turn <degrees>"


@dataclass(frozen=True)
class TaskContext:
    goals: tuple[str, ...]
    environment: str = ""
    current_state: str = ""
    constraints: tuple[str, ...] = ()
    solution_examples: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.goals:
            raise ValueError("a task context needs at least one goal")


@dataclass(frozen=True)
class ResponseDirective:
    mode: str
    tag_name: str | None = None
    language_label: str = "robotscript"
    clarification_example: str | None = None

    def __post_init__(self):
        if self.mode not in DIRECTIVE_MODES:
            raise ValueError(f"unknown directive mode {self.mode!r}")
        if self.mode == "code_in_tag":
            if not self.tag_name:
                raise ValueError("code_in_tag requires tag_name")
            if not IDENTIFIER_RE.match(self.tag_name):
                raise InvalidIdentifier(f"tag {self.tag_name!r} is not a valid identifier")
        elif self.tag_name is not None:
            raise ValueError("tag_name only applies to code_in_tag")


def directive_clause(directive: ResponseDirective) -> str:
    if directive.mode == "code_in_tag":
        t = directive.tag_name
        return (
            f"When you are ready to act, reply with a single {directive.language_label} "
            f"program inside <{t}>...</{t}> tags. Put nothing but the program between the tags."
        )
    if directive.mode == "numbered_list":
        return "Answer only as a numbered list (1., 2., 3., ...), one step per line, with no other text."
    if directive.mode == "constrained_action":
        return (
            f"Reply with exactly one line of the form: {ACTION_GRAMMAR_HINT}. "
            "Do not add any other words."
        )
    return "Answer in plain text."


def build_clarification_priming(example: str) -> str:
    """Frame a worked example of the robot asking for the user's input."""
    if not example:
        raise ValueError("priming example must be non-empty")
    return (
        "Example of asking for help:\n"
        f"{example}\n"
        "When a request is ambiguous like this, ask a clarifying question before acting."
    )


def _bullets(items: tuple[str, ...]) -> str:
    return "\n".join(f"- {item}" for item in items)


def build_system_prompt(
    context: TaskContext,
    registry: ApiRegistry,
    directive: ResponseDirective,
) -> str:
    """Assemble the system prompt in fixed section order.

    Order: role preamble, function list, environment, current state,
    constraints, goals, solution examples, directive clause.  The directive
    always comes last so it is the final instruction the model reads.
    """
    sections = [
        "You are the command interface for a robot. You control it only by "
        "planning with the functions listed below; nothing else is executable.",
        "Functions you may use:\n" + registry.render_prompt_section(),
    ]
    if context.environment:
        sections.append("Environment:\n" + context.environment)
    if context.current_state:
        sections.append("Current state:\n" + context.current_state)
    if context.constraints:
        sections.append("Constraints:\n" + _bullets(context.constraints))
    sections.append("Goals:\n" + _bullets(context.goals))
    if context.solution_examples:
        sections.append("Worked examples:\n" + _bullets(context.solution_examples))
    if directive.clarification_example:
        sections.append(build_clarification_priming(directive.clarification_example))
    sections.append(directive_clause(directive))
    return "\n\n".join(sections)


def build_feedback_message(report: ExecReport) -> str:
    """Draft a human-editable summary of an execution for the next user turn."""
    lines = []
    if report.success:
        lines.append("That worked: the goal was achieved.")
        lines.append(f"Final goal metric: {report.goal_metric:g}.")
    else:
        lines.append("That did not achieve the goal.")
        lines.append(f"Goal metric: {report.goal_metric:g}.")
    if report.collisions:
        lines.append(f"Collisions: {report.collisions}.")
    if report.halted_reason:
        lines.append(f"Execution halted: {report.halted_reason}.")
    if report.duration_steps:
        lines.append(f"Steps executed: {report.duration_steps}.")
    for violation in report.violations:
        lines.append(f"Validator: {violation.describe()}.")
    if report.note:
        lines.append(f"Note: {report.note}")
    if not report.success:
        lines.append("Please revise the program to address the issues above.")
    message = "\n".join(lines)
    if len(message) > FEEDBACK_LIMIT:
        message = message[:FEEDBACK_LIMIT - 1] + "…"
    return message
