"""Exception types shared across the package."""

from __future__ import annotations


class LoopPilotError(Exception):
    """Base class for every error raised by this package."""


# --- function registry ---

class DuplicateName(LoopPilotError):
    pass


class InvalidIdentifier(LoopPilotError):
    pass


class EmptyRegistry(LoopPilotError):
    pass


class UnresolvedCall(LoopPilotError):
    def __init__(self, name: str, message: str | None = None):
        super().__init__(message or f"call to unregistered function {name!r}")
        self.name = name


class ArityMismatch(LoopPilotError):
    pass


class SelfRecursion(LoopPilotError):
    pass


class MissingBackendEffect(LoopPilotError):
    def __init__(self, name: str):
        super().__init__(f"backend provides no effect for primitive {name!r}")
        self.name = name


# --- parsing ---

class MalformedAction(LoopPilotError):
    pass


# --- command language ---

class ProgramSyntaxError(LoopPilotError):
    def __init__(self, line: int, col: int, expected: tuple[str, ...], found: str):
        super().__init__(
            f"line {line}, column {col}: expected {' or '.join(expected)}, found {found}"
        )
        self.line = line
        self.col = col
        self.expected = expected
        self.found = found


# --- worlds ---

class WorldError(LoopPilotError):
    pass


class NotSpawned(WorldError):
    pass


class NotAirborne(WorldError):
    pass


class OutOfBounds(WorldError):
    pass


class BadParams(WorldError):
    pass


class Blocked(WorldError):
    pass


class GripperFull(WorldError):
    pass


class GripperEmpty(WorldError):
    pass


class Overlap(WorldError):
    pass


class MissingDepth(WorldError):
    pass


# --- chat gateway ---

class GatewayError(LoopPilotError):
    pass


class NetworkError(GatewayError):
    pass


class RateLimited(GatewayError):
    pass


class ScriptExhausted(GatewayError):
    pass


class ReplayDivergence(GatewayError):
    def __init__(self, index: int, detail: str = ""):
        super().__init__(f"history diverges from recording at message {index}" + (f": {detail}" if detail else ""))
        self.index = index


# --- session engine ---

class NothingPending(LoopPilotError):
    pass


class VetoedByValidator(LoopPilotError):
    pass


class ScenarioError(LoopPilotError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"scenario field {field!r}: {reason}")
        self.field = field
        self.reason = reason


# --- prompt store ---

class DuplicateContent(LoopPilotError):
    pass


class BadCategory(LoopPilotError):
    pass


class UnknownEntry(LoopPilotError):
    pass


class FormatError(LoopPilotError):
    pass


class StoreLocked(LoopPilotError):
    pass
