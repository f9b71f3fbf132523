"""AST node types for the robot command language.

Every node carries the source line/column it was parsed from so that
validators and runtime errors can point back into the original text.
Nodes are frozen; a parsed Program is an immutable value.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union


@dataclass(frozen=True)
class Num:
    value: float
    line: int
    col: int


@dataclass(frozen=True)
class Str:
    value: str
    line: int
    col: int


@dataclass(frozen=True)
class Bool:
    value: bool
    line: int
    col: int


@dataclass(frozen=True)
class ListLit:
    items: tuple["Expr", ...]
    line: int
    col: int


@dataclass(frozen=True)
class Var:
    name: str
    line: int
    col: int


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * /
    left: "Expr"
    right: "Expr"
    line: int
    col: int


@dataclass(frozen=True)
class Compare:
    op: str  # == != < <= > >=
    left: "Expr"
    right: "Expr"
    line: int
    col: int


@dataclass(frozen=True)
class Logic:
    op: str  # and | or
    left: "Expr"
    right: "Expr"
    line: int
    col: int


@dataclass(frozen=True)
class Not:
    operand: "Expr"
    line: int
    col: int


@dataclass(frozen=True)
class Neg:
    operand: "Expr"
    line: int
    col: int


@dataclass(frozen=True)
class Index:
    obj: "Expr"
    index: "Expr"
    line: int
    col: int


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["Expr", ...]
    line: int
    col: int


Expr = Union[Num, Str, Bool, ListLit, Var, BinOp, Compare, Logic, Not, Neg, Index, Call]


@dataclass(frozen=True)
class Assign:
    name: str
    value: Expr
    line: int
    col: int


@dataclass(frozen=True)
class CallStmt:
    call: Call
    line: int
    col: int


@dataclass(frozen=True)
class If:
    cond: Expr
    then_body: tuple["Stmt", ...]
    else_body: tuple["Stmt", ...]
    line: int
    col: int


@dataclass(frozen=True)
class While:
    cond: Expr
    body: tuple["Stmt", ...]
    line: int
    col: int


@dataclass(frozen=True)
class ForRange:
    var: str
    start: Expr
    stop: Expr
    body: tuple["Stmt", ...]
    line: int
    col: int


@dataclass(frozen=True)
class Return:
    value: Expr | None
    line: int
    col: int


Stmt = Union[Assign, CallStmt, If, While, ForRange, Return]


@dataclass(frozen=True)
class Program:
    statements: tuple[Stmt, ...]
    source: str = ""


def walk_calls(node) -> list[Call]:
    """Collect every Call node in a Program or subtree, in source order."""
    found: list[Call] = []
    _walk(node, found)
    return found


def _walk(node, found: list[Call]) -> None:
    if isinstance(node, Program):
        for s in node.statements:
            _walk(s, found)
    elif isinstance(node, Assign):
        _walk(node.value, found)
    elif isinstance(node, CallStmt):
        _walk(node.call, found)
    elif isinstance(node, If):
        _walk(node.cond, found)
        for s in node.then_body:
            _walk(s, found)
        for s in node.else_body:
            _walk(s, found)
    elif isinstance(node, While):
        _walk(node.cond, found)
        for s in node.body:
            _walk(s, found)
    elif isinstance(node, ForRange):
        _walk(node.start, found)
        _walk(node.stop, found)
        for s in node.body:
            _walk(s, found)
    elif isinstance(node, Return):
        if node.value is not None:
            _walk(node.value, found)
    elif isinstance(node, Call):
        found.append(node)
        for a in node.args:
            _walk(a, found)
    elif isinstance(node, (BinOp, Compare, Logic)):
        _walk(node.left, found)
        _walk(node.right, found)
    elif isinstance(node, (Not, Neg)):
        _walk(node.operand, found)
    elif isinstance(node, Index):
        _walk(node.obj, found)
        _walk(node.index, found)
    elif isinstance(node, ListLit):
        for it in node.items:
            _walk(it, found)
    # literals and vars carry no nested calls
