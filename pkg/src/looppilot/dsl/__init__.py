"""The restricted robot command language: parser, AST, and sandboxed interpreter."""

from .ast import Program, walk_calls
from .interpreter import (
    BUILTIN_ARITIES,
    BUILTIN_CONSTANTS,
    ApiCall,
    ExecLimits,
    ExecTrace,
    TraceEvent,
    builtins,
    execute,
)
from .parser import parse_program

__all__ = [
    "ApiCall",
    "BUILTIN_ARITIES",
    "BUILTIN_CONSTANTS",
    "ExecLimits",
    "ExecTrace",
    "Program",
    "TraceEvent",
    "builtins",
    "execute",
    "parse_program",
    "walk_calls",
]
