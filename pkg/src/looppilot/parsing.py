"""Extract structured payloads from free-form chat model output.

Chat models rarely answer with just the artifact that was asked for: code
arrives wrapped in prose, tags get left unclosed, lists restart midway.  The
extractors here are total functions — malformed regions produce warnings and
empty results, never exceptions — and the validator turns hallucinated calls
into structured Violation records instead of failures, so a session can feed
them back into the conversation.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import dataclass

from .api_registry import ApiRegistry, IDENTIFIER_RE
from .dsl import ast
from .dsl.interpreter import BUILTIN_ARITIES
from .errors import InvalidIdentifier, MalformedAction

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TaggedBlock:
    tag: str | None
    kind: str  # code | list | text
    content: str
    span: tuple[int, int]  # character offsets of content in the source text


@dataclass(frozen=True)
class Violation:
    kind: str  # UnknownFunction | ArityMismatch | KindMismatch | UnstructuredResponse
    subject: str
    expected: str
    found: str
    line: int
    col: int

    def describe(self) -> str:
        if self.kind == "UnknownFunction":
            hint = f" (did you mean {self.expected!r}?)" if self.expected else ""
            return f"line {self.line}: unknown function {self.subject!r}{hint}"
        if self.kind == "ArityMismatch":
            return (
                f"line {self.line}: {self.subject} expects {self.expected} argument(s), "
                f"got {self.found}"
            )
        if self.kind == "KindMismatch":
            return (
                f"line {self.line}: {self.subject}: expected {self.expected}, got {self.found}"
            )
        return f"{self.kind}: {self.found}" if self.found else self.kind

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "subject": self.subject,
            "expected": self.expected,
            "found": self.found,
            "line": self.line,
            "col": self.col,
        }


@dataclass(frozen=True)
class ActionCommand:
    """A constrained navigation action: move forward, then turn."""

    forward_m: float
    turn_deg: float

    def __post_init__(self):
        if not (math.isfinite(self.forward_m) and math.isfinite(self.turn_deg)):
            raise MalformedAction("action values must be finite")
        if self.forward_m < 0:
            raise MalformedAction("forward distance must be >= 0")
        if not (-180.0 < self.turn_deg <= 180.0):
            raise MalformedAction("turn must be normalized into (-180, 180]")


def normalize_turn_deg(angle: float) -> float:
    """Map any finite angle into (-180, 180]."""
    r = math.fmod(angle, 360.0)
    if r > 180.0:
        r -= 360.0
    elif r <= -180.0:
        r += 360.0
    return r


def render_action(cmd: ActionCommand) -> str:
    """Canonical text form; parse_action_line(render_action(c)) == c."""
    return f"forward {cmd.forward_m!r}, turn {cmd.turn_deg!r}"


_ACTION_RE = re.compile(
    r"^\s*forward\s+([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*,\s*"
    r"turn\s+([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*$",
    re.IGNORECASE,
)


def parse_action_line(text: str) -> ActionCommand:
    """Parse `forward <number>, turn <number>`; anything else is MalformedAction."""
    m = _ACTION_RE.match(text)
    if not m:
        raise MalformedAction(f"not a valid action line: {text.strip()!r}")
    forward = float(m.group(1))
    turn = normalize_turn_deg(float(m.group(2)))
    if forward < 0:
        raise MalformedAction("forward distance must be >= 0")
    return ActionCommand(forward, turn)


def extract_tagged(text: str, tag: str) -> list[TaggedBlock]:
    """All well-formed <tag>...</tag> regions, in document order.

    Nested identical tags are not supported: the innermost open tag before
    each close tag wins.  Unmatched opens produce a warning and no block.
    """
    if not IDENTIFIER_RE.match(tag):
        raise InvalidIdentifier(f"tag {tag!r} is not a valid identifier")
    open_mark = f"<{tag}>"
    close_mark = f"</{tag}>"
    blocks: list[TaggedBlock] = []
    pos = 0
    unmatched_opens = 0
    while True:
        close = text.find(close_mark, pos)
        if close == -1:
            break
        open_at = text.rfind(open_mark, pos, close)
        if open_at == -1:
            # stray close tag: skip it
            pos = close + len(close_mark)
            continue
        # opens between pos and open_at never get their own close
        unmatched_opens += text.count(open_mark, pos, open_at)
        start = open_at + len(open_mark)
        blocks.append(TaggedBlock(tag, "code", text[start:close], (start, close)))
        pos = close + len(close_mark)
    unmatched_opens += text.count(open_mark, pos)
    if unmatched_opens:
        log.warning("%d unmatched <%s> tag(s) ignored", unmatched_opens, tag)
    return blocks


_FENCE_OPEN_RE = re.compile(r"^\s*```([^\s`]*)\s*$")
_FENCE_CLOSE_RE = re.compile(r"^\s*```\s*$")


def extract_code_fences(text: str) -> list[TaggedBlock]:
    """All triple-backtick fenced regions; the info string becomes the tag."""
    blocks: list[TaggedBlock] = []
    lines = text.split("\n")
    offsets = []
    off = 0
    for ln in lines:
        offsets.append(off)
        off += len(ln) + 1
    i = 0
    while i < len(lines):
        m = _FENCE_OPEN_RE.match(lines[i])
        if not m:
            i += 1
            continue
        label = m.group(1) or None
        j = i + 1
        while j < len(lines) and not _FENCE_CLOSE_RE.match(lines[j]):
            j += 1
        if j >= len(lines):
            log.warning("unterminated code fence at line %d ignored", i + 1)
            break
        content = "\n".join(lines[i + 1:j])
        start = offsets[i + 1] if i + 1 < len(lines) else len(text)
        blocks.append(TaggedBlock(label, "code", content, (start, start + len(content))))
        i = j + 1
    return blocks


_NUMBERED_RE = re.compile(r"^\s*(\d+)[.)]\s+(.*\S)\s*$")


def extract_numbered_list(text: str) -> list[str]:
    """Longest run of consecutively numbered lines starting at 1.

    Runs are broken by non-matching lines or numbering gaps; if several valid
    runs exist, the longest wins (ties go to the first).
    """
    best: list[str] = []
    current: list[str] = []
    expected = 1
    for line in text.split("\n"):
        m = _NUMBERED_RE.match(line)
        if m and int(m.group(1)) == expected:
            current.append(m.group(2).strip())
            expected += 1
            continue
        if len(current) > len(best):
            best = current
        current = []
        expected = 1
        if m and int(m.group(1)) == 1:
            current.append(m.group(2).strip())
            expected = 2
    if len(current) > len(best):
        best = current
    return best


def _edit_distance(a: str, b: str, cap: int = 3) -> int:
    if abs(len(a) - len(b)) > cap:
        return cap + 1
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def suggest_name(name: str, candidates: list[str], max_distance: int = 2) -> str | None:
    """Nearest candidate within the edit-distance budget; first wins ties."""
    best: str | None = None
    best_d = max_distance + 1
    for cand in candidates:
        d = _edit_distance(name, cand, cap=max_distance)
        if d < best_d:
            best, best_d = cand, d
    return best


_LITERAL_KINDS = {
    ast.Num: "number",
    ast.Str: "string",
    ast.Bool: "boolean",
}


def _literal_kind(expr) -> str | None:
    """Static kind of a literal argument, or None if it cannot be known."""
    t = type(expr)
    if t in _LITERAL_KINDS:
        return _LITERAL_KINDS[t]
    if t is ast.Neg and isinstance(expr.operand, ast.Num):
        return "number"
    if t is ast.ListLit:
        if all(_literal_kind(item) == "number" for item in expr.items):
            return "list-of-number"
        return "list"
    return None


def _kind_compatible(param_kind: str, literal: str) -> bool:
    if param_kind == literal:
        return True
    if param_kind == "record":
        return literal in ("list-of-number", "list")
    if param_kind == "list-of-number" and literal == "list-of-number":
        return True
    return False


def validate_program(program: ast.Program, registry: ApiRegistry) -> list[Violation]:
    """Check every call site against the registry (and builtins).

    Three checks: the function exists, the arity matches, and literal
    arguments have the declared kind.  Violations are data (empty list means
    valid); unknown names carry a nearest-name suggestion when one is within
    edit distance 2.
    """
    violations: list[Violation] = []
    known = registry.names()
    for call in ast.walk_calls(program):
        func = registry.get(call.name)
        if func is None:
            if call.name in BUILTIN_ARITIES:
                arity = BUILTIN_ARITIES[call.name]
                if len(call.args) != arity:
                    violations.append(Violation(
                        "ArityMismatch", call.name, str(arity), str(len(call.args)),
                        call.line, call.col,
                    ))
                continue
            suggestion = suggest_name(call.name, known + sorted(BUILTIN_ARITIES))
            violations.append(Violation(
                "UnknownFunction", call.name, suggestion or "", call.name,
                call.line, call.col,
            ))
            continue
        if len(call.args) != func.arity:
            violations.append(Violation(
                "ArityMismatch", call.name, str(func.arity), str(len(call.args)),
                call.line, call.col,
            ))
            continue
        for param, arg in zip(func.params, call.args):
            literal = _literal_kind(arg)
            if literal is None:
                continue
            if not _kind_compatible(param.kind, literal):
                violations.append(Violation(
                    "KindMismatch", f"{call.name}({param.name})", param.kind, literal,
                    getattr(arg, "line", call.line), getattr(arg, "col", call.col),
                ))
    return violations


def classify_response(text: str, directive) -> str:
    """'ok' when the reply honors the response directive, else 'UnstructuredResponse'."""
    mode = directive.mode
    if mode == "code_in_tag":
        return "ok" if extract_tagged(text, directive.tag_name) else "UnstructuredResponse"
    if mode == "numbered_list":
        return "ok" if extract_numbered_list(text) else "UnstructuredResponse"
    if mode == "constrained_action":
        try:
            parse_action_line(text)
            return "ok"
        except MalformedAction:
            return "UnstructuredResponse"
    return "ok"
