"""The high-level robot function library.

A registry is the whitelist of everything a language model is allowed to ask
the robot to do.  It is rendered into the system prompt, used to validate
extracted programs, and bound to a world backend for execution.  Registries
are immutable values: ``register`` and ``compose`` return new registries, so a
session can snapshot the registry per prompt and prompt text stays stable
mid-conversation.

Composed functions are the curriculum mechanism: once a skill is composed
from primitives it is listed in prompts and callable exactly like a
primitive, but executes by interpreting its stored body.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .dsl import ast
from .dsl.interpreter import BUILTIN_ARITIES, BUILTIN_CONSTANTS
from .dsl.parser import parse_program
from .errors import (
    ArityMismatch,
    DuplicateName,
    EmptyRegistry,
    InvalidIdentifier,
    MissingBackendEffect,
    SelfRecursion,
    UnresolvedCall,
)

IDENTIFIER_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")

KINDS = ("number", "string", "boolean", "list-of-number", "record")

_RESERVED = set(BUILTIN_ARITIES) | set(BUILTIN_CONSTANTS)


def _check_identifier(name: str, what: str) -> None:
    if not IDENTIFIER_RE.match(name):
        raise InvalidIdentifier(f"{what} {name!r} is not a valid identifier")


@dataclass(frozen=True)
class ParamSpec:
    """One declared parameter: name, kind, optional physical unit."""

    name: str
    kind: str
    unit: str | None = None
    description: str = ""

    def __post_init__(self):
        _check_identifier(self.name, "parameter name")
        if self.kind not in KINDS:
            raise InvalidIdentifier(f"unknown kind {self.kind!r} (expected one of {KINDS})")
        if self.unit is not None and self.kind not in ("number", "list-of-number"):
            raise InvalidIdentifier(f"unit only allowed on numeric parameters, not {self.kind}")


@dataclass(frozen=True)
class ApiFunction:
    name: str
    params: tuple[ParamSpec, ...]
    returns: str | None = None
    description: str = ""
    kind: str = "primitive"  # primitive | composed
    body: ast.Program | None = None
    body_source: str | None = None

    def __post_init__(self):
        _check_identifier(self.name, "function name")
        if self.kind not in ("primitive", "composed"):
            raise InvalidIdentifier(f"function kind must be primitive or composed, not {self.kind!r}")
        if self.returns is not None and self.returns not in KINDS:
            raise InvalidIdentifier(f"unknown return kind {self.returns!r}")
        seen = set()
        for p in self.params:
            if p.name in seen:
                raise DuplicateName(f"duplicate parameter {p.name!r} in {self.name}")
            seen.add(p.name)
        if (self.body is not None) != (self.kind == "composed"):
            raise InvalidIdentifier("body present iff function is composed")

    @property
    def arity(self) -> int:
        return len(self.params)


def primitive(
    name: str,
    params: list[ParamSpec] | tuple[ParamSpec, ...] = (),
    returns: str | None = None,
    description: str = "",
) -> ApiFunction:
    return ApiFunction(name, tuple(params), returns, description, "primitive")


class ApiRegistry:
    """Insertion-ordered, immutable map of name -> ApiFunction."""

    __slots__ = ("_functions",)

    def __init__(self, functions: dict[str, ApiFunction] | None = None):
        object.__setattr__(self, "_functions", dict(functions or {}))

    def __setattr__(self, *_):
        raise AttributeError("ApiRegistry is immutable")

    @classmethod
    def empty(cls) -> "ApiRegistry":
        return cls()

    def __len__(self) -> int:
        return len(self._functions)

    def __iter__(self):
        return iter(self._functions.values())

    def __contains__(self, name: str) -> bool:
        return name in self._functions

    def get(self, name: str) -> ApiFunction | None:
        return self._functions.get(name)

    def names(self) -> list[str]:
        return list(self._functions)

    def register(self, func: ApiFunction) -> "ApiRegistry":
        """Add a primitive; returns a new registry, preserving order."""
        if func.kind != "primitive":
            raise InvalidIdentifier("register() accepts primitives; use compose() for composed functions")
        if func.name in self._functions:
            raise DuplicateName(f"function {func.name!r} already registered")
        if func.name in _RESERVED:
            raise DuplicateName(f"function {func.name!r} shadows a builtin")
        updated = dict(self._functions)
        updated[func.name] = func
        return ApiRegistry(updated)

    def compose(
        self,
        name: str,
        params: list[ParamSpec] | tuple[ParamSpec, ...],
        body: ast.Program | str,
        returns: str | None = None,
        description: str = "",
    ) -> "ApiRegistry":
        """Register a new function whose body chains already-registered ones.

        The body is parsed (if given as source) and checked now: every call
        must resolve in this registry (or to a builtin) with matching arity,
        and the body may not call the function being defined.
        """
        _check_identifier(name, "function name")
        if name in self._functions or name in _RESERVED:
            raise DuplicateName(f"function {name!r} already registered")
        if isinstance(body, str):
            source = body
            body = parse_program(body)
        else:
            source = body.source
        for call in ast.walk_calls(body):
            if call.name == name:
                raise SelfRecursion(f"{name} calls itself at line {call.line}")
            target = self._functions.get(call.name)
            if target is None:
                if call.name in BUILTIN_ARITIES:
                    if len(call.args) != BUILTIN_ARITIES[call.name]:
                        raise ArityMismatch(
                            f"builtin {call.name} expects {BUILTIN_ARITIES[call.name]} argument(s), "
                            f"got {len(call.args)} at line {call.line}"
                        )
                    continue
                raise UnresolvedCall(call.name)
            if len(call.args) != target.arity:
                raise ArityMismatch(
                    f"{call.name} expects {target.arity} argument(s), got {len(call.args)} at line {call.line}"
                )
        func = ApiFunction(name, tuple(params), returns, description, "composed", body, source)
        updated = dict(self._functions)
        updated[name] = func
        return ApiRegistry(updated)

    def render_prompt_section(self) -> str:
        """One line per function, in registration order, byte-deterministic."""
        if not self._functions:
            raise EmptyRegistry("cannot render an empty registry")
        lines = []
        for func in self._functions.values():
            parts = []
            for p in func.params:
                part = f"{p.name}: {p.kind}"
                if p.unit:
                    part += f" [{p.unit}]"
                parts.append(part)
            sig = f"{func.name}({', '.join(parts)})"
            if func.returns:
                sig += f" -> {func.returns}"
            lines.append(f"{sig} — {func.description}" if func.description else sig)
        return "\n".join(lines)

    def bind(self, backend) -> "BoundRegistry":
        """Attach world effects; every primitive must be covered by the backend."""
        if hasattr(backend, "api_effects"):
            effects = backend.api_effects()
        else:
            effects = dict(backend)
        table: dict[str, object] = {}
        for func in self._functions.values():
            if func.kind == "primitive":
                if func.name not in effects:
                    raise MissingBackendEffect(func.name)
                table[func.name] = effects[func.name]
        return BoundRegistry(self, table)


@dataclass(frozen=True)
class BoundRegistry:
    """A registry attached to a world: the only call surface programs see."""

    registry: ApiRegistry
    effects: dict[str, object] = field(default_factory=dict)

    def invocable_names(self) -> list[str]:
        return self.registry.names()

    def lookup(self, name: str) -> ApiFunction | None:
        return self.registry.get(name)

    def effect(self, name: str):
        return self.effects[name]
