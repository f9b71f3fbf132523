"""looppilot: direct simulated robots through a chat model, with a human on the loop.

The pieces, bottom to top: a whitelisted function registry rendered into
prompts; structured-output extraction and validation; a sandboxed command
language; four deterministic desk-scale worlds; chat adapters with strict
record/replay; and a session engine whose approval gate stands between
generated code and the world.
"""

from .api_registry import ApiFunction, ApiRegistry, BoundRegistry, ParamSpec, primitive
from .dsl import ExecLimits, ExecTrace, execute, parse_program
from .errors import LoopPilotError
from .gateway import ChatMessage, LiveAdapter, ReplayAdapter, ScriptedAdapter, Transcript
from .parsing import (
    ActionCommand,
    TaggedBlock,
    Violation,
    classify_response,
    extract_code_fences,
    extract_numbered_list,
    extract_tagged,
    parse_action_line,
    render_action,
    validate_program,
)
from .prompting import (
    ResponseDirective,
    TaskContext,
    build_clarification_priming,
    build_feedback_message,
    build_system_prompt,
)
from .report import ExecReport
from .scenario import Scenario, load_scenario
from .session import DialogOutcome, Event, Session

__version__ = "0.1.0"

__all__ = [
    "ActionCommand",
    "ApiFunction",
    "ApiRegistry",
    "BoundRegistry",
    "ChatMessage",
    "DialogOutcome",
    "Event",
    "ExecLimits",
    "ExecReport",
    "ExecTrace",
    "LiveAdapter",
    "LoopPilotError",
    "ParamSpec",
    "ReplayAdapter",
    "ResponseDirective",
    "Scenario",
    "ScriptedAdapter",
    "Session",
    "TaggedBlock",
    "TaskContext",
    "Transcript",
    "Violation",
    "build_clarification_priming",
    "build_feedback_message",
    "build_system_prompt",
    "classify_response",
    "execute",
    "extract_code_fences",
    "extract_numbered_list",
    "extract_tagged",
    "load_scenario",
    "parse_action_line",
    "parse_program",
    "primitive",
    "render_action",
    "validate_program",
]
