"""Recursive-descent parser for the robot command language.

Grammar summary:

    program   := stmt*
    stmt      := IDENT '=' expr
               | call
               | 'if' expr block ('else' (block | if-stmt))?
               | 'while' expr block
               | 'for' IDENT 'in' 'range' '(' expr ',' expr ')' block
               | 'return' expr?
    block     := '{' stmt* '}'
    expr      := or-expr with the usual precedence:
                 or < and < not < comparison < '+/-' < '*//' < unary minus
                 < indexing < primary
    primary   := NUMBER | STRING | 'true' | 'false' | IDENT
               | IDENT '(' args ')' | '(' expr ')' | '[' args ']'

Statements are separated by newlines or semicolons; blocks use braces, so
the language survives the whitespace mangling that chat transport inflicts
on generated code.  Newlines inside parentheses or brackets are ignored.
Comments run from '#' to end of line.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ProgramSyntaxError
from . import ast

KEYWORDS = {"if", "else", "while", "for", "in", "range", "return", "true", "false", "and", "or", "not"}

_TWO_CHAR = {"==", "!=", "<=", ">="}
_ONE_CHAR = set("()[]{},=<>+-*/;")


@dataclass(frozen=True)
class Token:
    kind: str  # NUMBER STRING IDENT KEYWORD OP NEWLINE EOF
    value: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    line, col = 1, 1
    i = 0
    depth = 0  # ( and [ nesting; newlines inside are insignificant
    n = len(source)
    while i < n:
        ch = source[i]
        if ch == "\n":
            if depth == 0:
                tokens.append(Token("NEWLINE", "\n", line, col))
            i += 1
            line += 1
            col = 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        start_line, start_col = line, col
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            j = i
            while j < n and (source[j].isdigit() or source[j] == "."):
                j += 1
            if j < n and source[j] in "eE":
                k = j + 1
                if k < n and source[k] in "+-":
                    k += 1
                if k < n and source[k].isdigit():
                    j = k
                    while j < n and source[j].isdigit():
                        j += 1
            text = source[i:j]
            try:
                float(text)
            except ValueError:
                raise ProgramSyntaxError(start_line, start_col, ("number",), text)
            tokens.append(Token("NUMBER", text, start_line, start_col))
            col += j - i
            i = j
            continue
        if ch == '"':
            j = i + 1
            buf: list[str] = []
            while j < n and source[j] != '"':
                if source[j] == "\\" and j + 1 < n:
                    esc = source[j + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    j += 2
                elif source[j] == "\n":
                    raise ProgramSyntaxError(start_line, start_col, ('closing "',), "end of line")
                else:
                    buf.append(source[j])
                    j += 1
            if j >= n:
                raise ProgramSyntaxError(start_line, start_col, ('closing "',), "end of input")
            tokens.append(Token("STRING", "".join(buf), start_line, start_col))
            col += j + 1 - i
            i = j + 1
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (source[j].isalnum() or source[j] == "_"):
                j += 1
            word = source[i:j]
            kind = "KEYWORD" if word in KEYWORDS else "IDENT"
            tokens.append(Token(kind, word, start_line, start_col))
            col += j - i
            i = j
            continue
        pair = source[i:i + 2]
        if pair in _TWO_CHAR:
            tokens.append(Token("OP", pair, start_line, start_col))
            i += 2
            col += 2
            continue
        if ch in _ONE_CHAR:
            if ch in "([":
                depth += 1
            elif ch in ")]":
                depth = max(0, depth - 1)
            tokens.append(Token("OP", ch, start_line, start_col))
            i += 1
            col += 1
            continue
        raise ProgramSyntaxError(start_line, start_col, ("statement or expression",), repr(ch))
    tokens.append(Token("EOF", "", line, col))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    # --- token plumbing ---

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind: str, value: str | None = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind.lower()
            raise ProgramSyntaxError(tok.line, tok.col, (want,), self._describe(tok))
        return self.advance()

    @staticmethod
    def _describe(tok: Token) -> str:
        if tok.kind == "EOF":
            return "end of input"
        if tok.kind == "NEWLINE":
            return "end of line"
        return repr(tok.value)

    def skip_newlines(self) -> None:
        while self.peek().kind == "NEWLINE" or (self.peek().kind == "OP" and self.peek().value == ";"):
            self.advance()

    def end_of_stmt(self) -> None:
        tok = self.peek()
        if tok.kind in ("NEWLINE", "EOF"):
            if tok.kind == "NEWLINE":
                self.advance()
            return
        if tok.kind == "OP" and tok.value in (";", "}"):
            if tok.value == ";":
                self.advance()
            return
        raise ProgramSyntaxError(tok.line, tok.col, ("end of statement",), self._describe(tok))

    # --- statements ---

    def parse_program(self) -> tuple[ast.Stmt, ...]:
        stmts: list[ast.Stmt] = []
        self.skip_newlines()
        while self.peek().kind != "EOF":
            stmts.append(self.parse_stmt())
            self.skip_newlines()
        return tuple(stmts)

    def parse_block(self) -> tuple[ast.Stmt, ...]:
        self.skip_newlines()
        self.expect("OP", "{")
        stmts: list[ast.Stmt] = []
        self.skip_newlines()
        while not (self.peek().kind == "OP" and self.peek().value == "}"):
            if self.peek().kind == "EOF":
                tok = self.peek()
                raise ProgramSyntaxError(tok.line, tok.col, ("}",), "end of input")
            stmts.append(self.parse_stmt())
            self.skip_newlines()
        self.expect("OP", "}")
        return tuple(stmts)

    def parse_stmt(self) -> ast.Stmt:
        tok = self.peek()
        if tok.kind == "KEYWORD":
            if tok.value == "if":
                return self.parse_if()
            if tok.value == "while":
                return self.parse_while()
            if tok.value == "for":
                return self.parse_for()
            if tok.value == "return":
                return self.parse_return()
            raise ProgramSyntaxError(tok.line, tok.col, ("statement",), repr(tok.value))
        if tok.kind == "IDENT":
            nxt = self.peek(1)
            if nxt.kind == "OP" and nxt.value == "=":
                name = self.advance()
                self.advance()  # =
                value = self.parse_expr()
                self.end_of_stmt()
                return ast.Assign(name.value, value, name.line, name.col)
            if nxt.kind == "OP" and nxt.value == "(":
                call = self.parse_call(self.advance())
                self.end_of_stmt()
                return ast.CallStmt(call, call.line, call.col)
            raise ProgramSyntaxError(nxt.line, nxt.col, ("=", "("), self._describe(nxt))
        raise ProgramSyntaxError(tok.line, tok.col, ("statement",), self._describe(tok))

    def parse_if(self) -> ast.If:
        kw = self.expect("KEYWORD", "if")
        cond = self.parse_expr()
        then_body = self.parse_block()
        else_body: tuple[ast.Stmt, ...] = ()
        save = self.pos
        self.skip_newlines()
        tok = self.peek()
        if tok.kind == "KEYWORD" and tok.value == "else":
            self.advance()
            nxt = self.peek()
            if nxt.kind == "KEYWORD" and nxt.value == "if":
                else_body = (self.parse_if(),)
            else:
                else_body = self.parse_block()
        else:
            self.pos = save
        return ast.If(cond, then_body, else_body, kw.line, kw.col)

    def parse_while(self) -> ast.While:
        kw = self.expect("KEYWORD", "while")
        cond = self.parse_expr()
        body = self.parse_block()
        return ast.While(cond, body, kw.line, kw.col)

    def parse_for(self) -> ast.ForRange:
        kw = self.expect("KEYWORD", "for")
        var = self.expect("IDENT")
        self.expect("KEYWORD", "in")
        self.expect("KEYWORD", "range")
        self.expect("OP", "(")
        start = self.parse_expr()
        self.expect("OP", ",")
        stop = self.parse_expr()
        self.expect("OP", ")")
        body = self.parse_block()
        return ast.ForRange(var.value, start, stop, body, kw.line, kw.col)

    def parse_return(self) -> ast.Return:
        kw = self.expect("KEYWORD", "return")
        tok = self.peek()
        if tok.kind in ("NEWLINE", "EOF") or (tok.kind == "OP" and tok.value in (";", "}")):
            self.end_of_stmt()
            return ast.Return(None, kw.line, kw.col)
        value = self.parse_expr()
        self.end_of_stmt()
        return ast.Return(value, kw.line, kw.col)

    # --- expressions ---

    def parse_expr(self) -> ast.Expr:
        return self.parse_or()

    def parse_or(self) -> ast.Expr:
        left = self.parse_and()
        while self.peek().kind == "KEYWORD" and self.peek().value == "or":
            op = self.advance()
            right = self.parse_and()
            left = ast.Logic("or", left, right, op.line, op.col)
        return left

    def parse_and(self) -> ast.Expr:
        left = self.parse_not()
        while self.peek().kind == "KEYWORD" and self.peek().value == "and":
            op = self.advance()
            right = self.parse_not()
            left = ast.Logic("and", left, right, op.line, op.col)
        return left

    def parse_not(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind == "KEYWORD" and tok.value == "not":
            self.advance()
            return ast.Not(self.parse_not(), tok.line, tok.col)
        return self.parse_comparison()

    def parse_comparison(self) -> ast.Expr:
        left = self.parse_arith()
        tok = self.peek()
        if tok.kind == "OP" and tok.value in ("==", "!=", "<", "<=", ">", ">="):
            self.advance()
            right = self.parse_arith()
            return ast.Compare(tok.value, left, right, tok.line, tok.col)
        return left

    def parse_arith(self) -> ast.Expr:
        left = self.parse_term()
        while self.peek().kind == "OP" and self.peek().value in ("+", "-"):
            op = self.advance()
            right = self.parse_term()
            left = ast.BinOp(op.value, left, right, op.line, op.col)
        return left

    def parse_term(self) -> ast.Expr:
        left = self.parse_unary()
        while self.peek().kind == "OP" and self.peek().value in ("*", "/"):
            op = self.advance()
            right = self.parse_unary()
            left = ast.BinOp(op.value, left, right, op.line, op.col)
        return left

    def parse_unary(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind == "OP" and tok.value == "-":
            self.advance()
            return ast.Neg(self.parse_unary(), tok.line, tok.col)
        return self.parse_postfix()

    def parse_postfix(self) -> ast.Expr:
        expr = self.parse_primary()
        while self.peek().kind == "OP" and self.peek().value == "[":
            op = self.advance()
            index = self.parse_expr()
            self.expect("OP", "]")
            expr = ast.Index(expr, index, op.line, op.col)
        return expr

    def parse_primary(self) -> ast.Expr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            return ast.Num(float(tok.value), tok.line, tok.col)
        if tok.kind == "STRING":
            self.advance()
            return ast.Str(tok.value, tok.line, tok.col)
        if tok.kind == "KEYWORD" and tok.value in ("true", "false"):
            self.advance()
            return ast.Bool(tok.value == "true", tok.line, tok.col)
        if tok.kind == "IDENT":
            self.advance()
            if self.peek().kind == "OP" and self.peek().value == "(":
                return self.parse_call(tok)
            return ast.Var(tok.value, tok.line, tok.col)
        if tok.kind == "OP" and tok.value == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect("OP", ")")
            return inner
        if tok.kind == "OP" and tok.value == "[":
            self.advance()
            items: list[ast.Expr] = []
            if not (self.peek().kind == "OP" and self.peek().value == "]"):
                items.append(self.parse_expr())
                while self.peek().kind == "OP" and self.peek().value == ",":
                    self.advance()
                    items.append(self.parse_expr())
            close = self.expect("OP", "]")
            return ast.ListLit(tuple(items), tok.line, tok.col if close else tok.col)
        raise ProgramSyntaxError(tok.line, tok.col, ("expression",), self._describe(tok))

    def parse_call(self, name_tok: Token) -> ast.Call:
        self.expect("OP", "(")
        args: list[ast.Expr] = []
        if not (self.peek().kind == "OP" and self.peek().value == ")"):
            args.append(self.parse_expr())
            while self.peek().kind == "OP" and self.peek().value == ",":
                self.advance()
                args.append(self.parse_expr())
        self.expect("OP", ")")
        return ast.Call(name_tok.value, tuple(args), name_tok.line, name_tok.col)


def parse_program(source: str) -> ast.Program:
    """Parse source text into a Program, raising ProgramSyntaxError on bad input."""
    statements = _Parser(tokenize(source)).parse_program()
    return ast.Program(statements, source=source)
