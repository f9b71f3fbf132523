"""Scenario files: the single configuration surface for a session.

A scenario declares the world (type, seed, geometry), the function registry
(including composed skills with their command-language source), the task
context, the response directive, the chat adapter, limits, the approval
policy, and the goal predicate.  Validation is strict — unknown keys are
rejected, because a silently ignored typo in world geometry is the config
equivalent of a hallucinated function parameter.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import jsonschema

from .api_registry import ApiFunction, ApiRegistry, ParamSpec
from .dsl.interpreter import ExecLimits
from .errors import LoopPilotError, ScenarioError
from .prompting import DIRECTIVE_MODES, ResponseDirective, TaskContext

MODES = ("codegen", "feedback", "dialog")

_PARAM_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "kind"],
    "properties": {
        "name": {"type": "string"},
        "kind": {"enum": ["number", "string", "boolean", "list-of-number", "record"]},
        "unit": {"type": ["string", "null"]},
        "description": {"type": "string"},
    },
}

_FUNCTION_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["name"],
    "properties": {
        "name": {"type": "string"},
        "params": {"type": "array", "items": _PARAM_SCHEMA},
        "returns": {
            "enum": ["number", "string", "boolean", "list-of-number", "record", None],
        },
        "description": {"type": "string"},
        "composed": {"type": "boolean"},
        "source": {"type": "string"},
    },
}

SCENARIO_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["name", "world", "registry", "context", "directive", "llm"],
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "mode": {"enum": list(MODES)},
        "world": {
            "type": "object",
            "additionalProperties": False,
            "required": ["type", "seed"],
            "properties": {
                "type": {"type": "string"},
                "seed": {"type": "integer"},
                "params": {"type": "object"},
            },
        },
        "registry": {"type": "array", "minItems": 1, "items": _FUNCTION_SCHEMA},
        "context": {
            "type": "object",
            "additionalProperties": False,
            "required": ["goals"],
            "properties": {
                "goals": {"type": "array", "minItems": 1, "items": {"type": "string"}},
                "environment": {"type": "string"},
                "current_state": {"type": "string"},
                "constraints": {"type": "array", "items": {"type": "string"}},
                "solution_examples": {"type": "array", "items": {"type": "string"}},
            },
        },
        "directive": {
            "type": "object",
            "additionalProperties": False,
            "required": ["mode"],
            "properties": {
                "mode": {"enum": list(DIRECTIVE_MODES)},
                "tag_name": {"type": ["string", "null"]},
                "language_label": {"type": "string"},
                "clarification_example": {"type": ["string", "null"]},
            },
        },
        "llm": {
            "type": "object",
            "additionalProperties": False,
            "required": ["adapter"],
            "properties": {
                "adapter": {"enum": ["live", "scripted", "replay"]},
                "path": {"type": "string"},
                "model": {"type": "string"},
                "temperature": {"type": "number"},
                "base_url": {"type": "string"},
                "api_key": {"type": "string"},
            },
        },
        "limits": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_steps": {"type": "integer", "minimum": 1},
                "max_call_depth": {"type": "integer", "minimum": 1},
            },
        },
        "auto_approve": {"type": "boolean"},
        "goal": {
            "type": "object",
            "additionalProperties": False,
            "required": ["predicate"],
            "properties": {
                "predicate": {"type": "string"},
                "params": {"type": "object"},
            },
        },
    },
}

_VALIDATOR = jsonschema.Draft202012Validator(SCENARIO_SCHEMA)


@dataclass(frozen=True)
class Scenario:
    name: str
    world_type: str
    world_seed: int
    world_params: dict = field(default_factory=dict)
    registry_functions: tuple[dict, ...] = ()
    context: TaskContext | None = None
    directive: ResponseDirective | None = None
    llm: dict = field(default_factory=dict)
    limits: ExecLimits = field(default_factory=ExecLimits)
    auto_approve: bool = False
    goal: dict = field(default_factory=lambda: {"predicate": "none", "params": {}})
    mode: str = "codegen"
    base_dir: str = "."

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, world_seed=seed)

    def with_llm(self, llm: dict) -> "Scenario":
        return replace(self, llm=llm)

    def with_auto_approve(self, flag: bool) -> "Scenario":
        return replace(self, auto_approve=flag)

    def build_registry(self) -> ApiRegistry:
        registry = ApiRegistry.empty()
        for desc in self.registry_functions:
            params = tuple(
                ParamSpec(
                    p["name"],
                    p["kind"],
                    unit=p.get("unit"),
                    description=p.get("description", ""),
                )
                for p in desc.get("params", [])
            )
            try:
                if desc.get("composed"):
                    source = desc.get("source")
                    if not source:
                        raise ScenarioError("registry", f"composed {desc['name']!r} needs source")
                    registry = registry.compose(
                        desc["name"],
                        params,
                        source,
                        returns=desc.get("returns"),
                        description=desc.get("description", ""),
                    )
                else:
                    registry = registry.register(
                        ApiFunction(
                            desc["name"],
                            params,
                            returns=desc.get("returns"),
                            description=desc.get("description", ""),
                        )
                    )
            except ScenarioError:
                raise
            except LoopPilotError as exc:
                raise ScenarioError("registry", f"{desc.get('name')}: {exc}") from exc
        return registry


def scenario_from_dict(data: dict, base_dir: str | Path = ".") -> Scenario:
    errors = sorted(_VALIDATOR.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        where = "/".join(str(p) for p in err.absolute_path) or "(root)"
        raise ScenarioError(where, err.message)
    context_data = data["context"]
    context = TaskContext(
        goals=tuple(context_data["goals"]),
        environment=context_data.get("environment", ""),
        current_state=context_data.get("current_state", ""),
        constraints=tuple(context_data.get("constraints", ())),
        solution_examples=tuple(context_data.get("solution_examples", ())),
    )
    directive_data = data["directive"]
    try:
        directive = ResponseDirective(
            mode=directive_data["mode"],
            tag_name=directive_data.get("tag_name"),
            language_label=directive_data.get("language_label", "robotscript"),
            clarification_example=directive_data.get("clarification_example"),
        )
    except (ValueError, LoopPilotError) as exc:
        raise ScenarioError("directive", str(exc)) from exc
    limits_data = data.get("limits", {})
    goal = data.get("goal", {"predicate": "none"})
    return Scenario(
        name=data["name"],
        world_type=data["world"]["type"],
        world_seed=data["world"]["seed"],
        world_params=data["world"].get("params", {}),
        registry_functions=tuple(data["registry"]),
        context=context,
        directive=directive,
        llm=data["llm"],
        limits=ExecLimits(
            max_steps=limits_data.get("max_steps", 100_000),
            max_call_depth=limits_data.get("max_call_depth", 32),
        ),
        auto_approve=data.get("auto_approve", False),
        goal={"predicate": goal["predicate"], "params": goal.get("params", {})},
        mode=data.get("mode", "codegen"),
        base_dir=str(base_dir),
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    if not path.exists():
        bundled = bundled_scenario_path(path.stem if path.suffix else str(path))
        if bundled is not None:
            path = bundled
        else:
            raise ScenarioError("path", f"no such scenario file: {path}")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioError("file", f"invalid JSON at line {exc.lineno}: {exc.msg}") from exc
    return scenario_from_dict(data, base_dir=path.parent)


def bundled_scenario_path(name: str) -> Path | None:
    """Resolve a scenario shipped inside the package by bare name."""
    root = resources.files("looppilot") / "scenarios"
    candidate = root / f"{name}.json"
    try:
        if candidate.is_file():
            return Path(str(candidate))
    except (OSError, ModuleNotFoundError):
        return None
    return None


def list_bundled_scenarios() -> list[str]:
    root = resources.files("looppilot") / "scenarios"
    try:
        return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))
    except OSError:
        return []
