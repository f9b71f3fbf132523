"""Sandboxed tree-walking interpreter for the robot command language.

Programs run under a strict budget (step count, call depth) against a bound
function registry: every call site resolves either to a whitelisted world
effect, a composed function, or a pure builtin.  There is no other way for a
program to touch the outside world, which is what makes the human approval
gate meaningful.

Execution never raises for program-level failures: division by zero, bad
indexing, kind mismatches at call boundaries, and exhausted budgets all end
the run with a ``halted`` trace that records the reason.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from ..errors import WorldError
from . import ast

_NUMBER = (int, float)


@dataclass(frozen=True)
class ExecLimits:
    max_steps: int = 100_000
    max_call_depth: int = 32

    def __post_init__(self):
        if self.max_steps < 1 or self.max_call_depth < 1:
            raise ValueError("limits must be >= 1")


@dataclass(frozen=True)
class TraceEvent:
    step: int  # strictly increasing event sequence number
    kind: str  # api_call | assign | branch | error
    payload: tuple


@dataclass(frozen=True)
class ApiCall:
    name: str
    args: tuple
    result: object


@dataclass
class ExecTrace:
    events: list[TraceEvent] = field(default_factory=list)
    api_calls: list[ApiCall] = field(default_factory=list)
    outcome: str = "completed"  # completed | halted
    halt_reason: str | None = None
    steps: int = 0  # budget ticks consumed
    seed: int = 0

    @property
    def completed(self) -> bool:
        return self.outcome == "completed"

    def canonical(self) -> str:
        """Stable textual form; equal strings mean equal traces."""
        def enc(v):
            if isinstance(v, (list, tuple)):
                return [enc(x) for x in v]
            if isinstance(v, dict):
                return {k: enc(v[k]) for k in sorted(v)}
            if isinstance(v, float):
                return repr(v)
            return v

        doc = {
            "events": [[e.step, e.kind, enc(e.payload)] for e in self.events],
            "api_calls": [[c.name, enc(c.args), enc(c.result)] for c in self.api_calls],
            "outcome": self.outcome,
            "halt_reason": self.halt_reason,
            "steps": self.steps,
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(max(x, lo), hi)


def builtins() -> dict[str, object]:
    """Pure functions (and the constant pi) available in every world."""
    return {
        "abs": (1, lambda x: abs(x)),
        "min": (2, lambda a, b: min(a, b)),
        "max": (2, lambda a, b: max(a, b)),
        "len": (1, lambda x: float(len(x))),
        "sqrt": (1, math.sqrt),
        "sin": (1, math.sin),
        "cos": (1, math.cos),
        "atan2": (2, math.atan2),
        "clamp": (3, _clamp),
        "floor": (1, lambda x: float(math.floor(x))),
        "pi": math.pi,
    }


BUILTIN_ARITIES: dict[str, int] = {
    name: spec[0] for name, spec in builtins().items() if isinstance(spec, tuple)
}
BUILTIN_CONSTANTS: dict[str, float] = {
    name: spec for name, spec in builtins().items() if not isinstance(spec, tuple)
}


class _Halt(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class _ReturnSignal(Exception):
    def __init__(self, value):
        self.value = value


def _is_number(v) -> bool:
    return isinstance(v, _NUMBER) and not isinstance(v, bool)


def _kind_ok(kind: str, value) -> bool:
    if kind == "number":
        return _is_number(value)
    if kind == "string":
        return isinstance(value, str)
    if kind == "boolean":
        return isinstance(value, bool)
    if kind == "list-of-number":
        return isinstance(value, list) and all(_is_number(v) for v in value)
    if kind == "record":
        # opaque structured payloads: single records or lists of them
        return isinstance(value, (dict, list))
    return False


class _Interpreter:
    def __init__(self, bound, limits: ExecLimits, seed: int):
        self.bound = bound
        self.limits = limits
        self.trace = ExecTrace(seed=seed)
        self.depth = 0
        self._event_seq = 0
        base = dict(BUILTIN_CONSTANTS)
        self.builtin_fns = {
            name: spec for name, spec in builtins().items() if isinstance(spec, tuple)
        }
        self.globals: dict[str, object] = base

    # --- bookkeeping ---

    def tick(self) -> None:
        if self.trace.steps >= self.limits.max_steps:
            raise _Halt("StepBudgetExceeded")
        self.trace.steps += 1

    def emit(self, kind: str, *payload) -> None:
        self._event_seq += 1
        self.trace.events.append(TraceEvent(self._event_seq, kind, payload))

    def fail(self, node, detail: str) -> None:
        raise _Halt(f"RuntimeError: {detail} (line {node.line}, column {node.col})")

    # --- statement execution ---

    def run(self, program: ast.Program) -> ExecTrace:
        try:
            try:
                self.exec_body(program.statements, self.globals)
            except _ReturnSignal:
                pass
        except _Halt as halt:
            self.emit("error", halt.reason)
            self.trace.outcome = "halted"
            self.trace.halt_reason = halt.reason
        return self.trace

    def exec_body(self, stmts, env) -> None:
        for stmt in stmts:
            self.exec_stmt(stmt, env)

    def exec_stmt(self, stmt, env) -> None:
        if isinstance(stmt, ast.Assign):
            self.tick()
            value = self.eval(stmt.value, env)
            env[stmt.name] = value
            self.emit("assign", stmt.name, value)
        elif isinstance(stmt, ast.CallStmt):
            self.tick()
            self.eval(stmt.call, env)
        elif isinstance(stmt, ast.If):
            self.tick()
            cond = self.eval_condition(stmt.cond, env)
            self.emit("branch", "if", cond)
            self.exec_body(stmt.then_body if cond else stmt.else_body, env)
        elif isinstance(stmt, ast.While):
            while True:
                self.tick()
                cond = self.eval_condition(stmt.cond, env)
                self.emit("branch", "while", cond)
                if not cond:
                    break
                self.exec_body(stmt.body, env)
        elif isinstance(stmt, ast.ForRange):
            self.tick()
            start = self.eval(stmt.start, env)
            stop = self.eval(stmt.stop, env)
            if not (_is_number(start) and _is_number(stop)):
                self.fail(stmt, "range bounds must be numbers")
            i = float(start)
            while i < float(stop):
                self.tick()
                env[stmt.var] = i
                self.emit("branch", "for", stmt.var, i)
                self.exec_body(stmt.body, env)
                i += 1.0
        elif isinstance(stmt, ast.Return):
            self.tick()
            value = None if stmt.value is None else self.eval(stmt.value, env)
            raise _ReturnSignal(value)
        else:  # pragma: no cover - parser emits no other nodes
            raise AssertionError(f"unknown statement {stmt!r}")

    # --- expression evaluation ---

    def eval_condition(self, expr, env) -> bool:
        value = self.eval(expr, env)
        if not isinstance(value, bool):
            self.fail(expr, f"condition must be boolean, got {type_name(value)}")
        return value

    def eval(self, expr, env):
        if isinstance(expr, ast.Num):
            return expr.value
        if isinstance(expr, ast.Str):
            return expr.value
        if isinstance(expr, ast.Bool):
            return expr.value
        if isinstance(expr, ast.ListLit):
            return [self.eval(item, env) for item in expr.items]
        if isinstance(expr, ast.Var):
            if expr.name in env:
                return env[expr.name]
            if expr.name in self.globals and env is not self.globals:
                return self.globals[expr.name]
            self.fail(expr, f"undefined variable {expr.name!r}")
        if isinstance(expr, ast.Neg):
            v = self.eval(expr.operand, env)
            if not _is_number(v):
                self.fail(expr, "unary minus needs a number")
            return -float(v)
        if isinstance(expr, ast.Not):
            v = self.eval(expr.operand, env)
            if not isinstance(v, bool):
                self.fail(expr, "'not' needs a boolean")
            return not v
        if isinstance(expr, ast.BinOp):
            left = self.eval(expr.left, env)
            right = self.eval(expr.right, env)
            if not (_is_number(left) and _is_number(right)):
                self.fail(expr, f"arithmetic needs numbers, got {type_name(left)} and {type_name(right)}")
            left, right = float(left), float(right)
            if expr.op == "+":
                return left + right
            if expr.op == "-":
                return left - right
            if expr.op == "*":
                return left * right
            if right == 0.0:
                self.fail(expr, "division by zero")
            return left / right
        if isinstance(expr, ast.Compare):
            left = self.eval(expr.left, env)
            right = self.eval(expr.right, env)
            if expr.op in ("==", "!="):
                eq = _loose_eq(left, right)
                return eq if expr.op == "==" else not eq
            if not (_is_number(left) and _is_number(right)):
                self.fail(expr, "ordering comparison needs numbers")
            return {
                "<": left < right,
                "<=": left <= right,
                ">": left > right,
                ">=": left >= right,
            }[expr.op]
        if isinstance(expr, ast.Logic):
            left = self.eval(expr.left, env)
            if not isinstance(left, bool):
                self.fail(expr, f"'{expr.op}' needs booleans")
            if expr.op == "and" and not left:
                return False
            if expr.op == "or" and left:
                return True
            right = self.eval(expr.right, env)
            if not isinstance(right, bool):
                self.fail(expr, f"'{expr.op}' needs booleans")
            return right
        if isinstance(expr, ast.Index):
            obj = self.eval(expr.obj, env)
            idx = self.eval(expr.index, env)
            if isinstance(obj, list):
                if not _is_number(idx) or float(idx) != int(idx):
                    self.fail(expr, "list index must be a whole number")
                i = int(idx)
                if i < 0 or i >= len(obj):
                    self.fail(expr, f"index {i} out of range for list of {len(obj)}")
                return obj[i]
            if isinstance(obj, dict):
                if not isinstance(idx, str):
                    self.fail(expr, "record index must be a string")
                if idx not in obj:
                    self.fail(expr, f"record has no field {idx!r}")
                return obj[idx]
            self.fail(expr, f"cannot index into {type_name(obj)}")
        if isinstance(expr, ast.Call):
            return self.call(expr, env)
        raise AssertionError(f"unknown expression {expr!r}")  # pragma: no cover

    # --- calls ---

    def call(self, node: ast.Call, env):
        func = self.bound.lookup(node.name) if self.bound is not None else None
        if func is not None:
            args = [self.eval(a, env) for a in node.args]
            return self.invoke_registered(node, func, args)
        if node.name in self.builtin_fns:
            arity, fn = self.builtin_fns[node.name]
            args = [self.eval(a, env) for a in node.args]
            if len(args) != arity:
                self.fail(node, f"{node.name} expects {arity} argument(s), got {len(args)}")
            try:
                return fn(*args)
            except (ValueError, TypeError, OverflowError) as exc:
                self.fail(node, f"{node.name}: {exc}")
        self.fail(node, f"call to unknown function {node.name!r}")

    def invoke_registered(self, node: ast.Call, func, args: list):
        params = func.params
        if len(args) != len(params):
            self.fail(node, f"{func.name} expects {len(params)} argument(s), got {len(args)}")
        coerced = []
        for param, value in zip(params, args):
            if not _kind_ok(param.kind, value):
                self.fail(
                    node,
                    f"{func.name}: argument {param.name!r} must be {param.kind}, got {type_name(value)}",
                )
            if param.kind == "number":
                value = float(value)
            elif param.kind == "list-of-number":
                value = [float(v) for v in value]
            coerced.append(value)
        if func.kind == "primitive":
            effect = self.bound.effect(func.name)
            try:
                result = effect(*coerced)
            except WorldError as exc:
                self.fail(node, f"{type(exc).__name__}: {exc}")
            result = _normalize(result)
            self.emit("api_call", func.name, tuple(coerced), result)
            self.trace.api_calls.append(ApiCall(func.name, tuple(coerced), result))
            return result
        # composed: run the stored body in a fresh frame
        if self.depth + 1 > self.limits.max_call_depth:
            raise _Halt("DepthExceeded")
        self.depth += 1
        frame = {p.name: v for p, v in zip(params, coerced)}
        try:
            self.exec_body(func.body.statements, frame)
            return None
        except _ReturnSignal as ret:
            return ret.value
        finally:
            self.depth -= 1


def _loose_eq(a, b) -> bool:
    if isinstance(a, bool) != isinstance(b, bool):
        return False
    if _is_number(a) != _is_number(b):
        return False
    try:
        return bool(a == b)
    except Exception:  # pragma: no cover - defensive
        return False


def _normalize(value):
    if isinstance(value, tuple):
        return [_normalize(v) for v in value]
    if isinstance(value, list):
        return [_normalize(v) for v in value]
    if isinstance(value, dict):
        return {k: _normalize(v) for k, v in value.items()}
    if isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    return value


def type_name(v) -> str:
    if isinstance(v, bool):
        return "boolean"
    if _is_number(v):
        return "number"
    if isinstance(v, str):
        return "string"
    if isinstance(v, list):
        return "list"
    if isinstance(v, dict):
        return "record"
    if v is None:
        return "none"
    return type(v).__name__


def execute(program: ast.Program, bound, limits: ExecLimits | None = None, seed: int = 0) -> ExecTrace:
    """Run a validated program against a bound registry.

    Returns the complete ExecTrace; budget and runtime failures are reported
    through ``trace.outcome == "halted"`` rather than raised.
    """
    return _Interpreter(bound, limits or ExecLimits(), seed).run(program)
