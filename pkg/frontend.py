"""
frontend.py
===========
Lexer, recursive-descent parser and canonical pretty-printer for the graph DSL.

Grammar reference
-----------------
::

    program    := function+
    function   := 'function' IDENT '(' [param {',' param}] ')' block
    param      := type IDENT
    type       := 'int' | 'long' | 'float' | 'double' | 'bool' | 'node' | 'edge' | 'Graph'
                | ('propNode' | 'propEdge') '<' type '>' | ('setNode' | 'SetN') '<' IDENT '>'
    block      := '{' {stmt} '}'
    stmt       := type IDENT ['=' expr] ';'
                | lvalue '=' expr ';'
                | lvalue ('+=' | '*=' | '&&=' | '||=') expr ';' | lvalue '++' ';'
                | '<' lvalue {',' lvalue} '>' '=' '<' ('Min'|'Max') '(' expr ',' expr ')' {',' add} '>' ';'
                | ('forall' | 'for') '(' IDENT 'in' domain ')' block
                | 'fixedPoint' 'until' '(' IDENT ':' expr ')' block
                | 'iterateInBFS' '(' IDENT 'in' IDENT '.' 'nodes' '(' ')' 'from' expr ')' block
                      ['iterateInReverse' '(' [expr] ')' block]
                | 'if' '(' expr ')' body ['else' body]
                | 'while' '(' expr ')' block | 'do' block 'while' '(' expr ')' ';'
                | call ';' | 'return' [expr] ';' | block
    domain     := IDENT '.' ('nodes' | 'neighbors' | 'nodes_to') '(' [expr] ')' ['.' 'filter' '(' expr ')']
                | IDENT ['.' 'filter' '(' expr ')']
    expr       := and {'||' and}
    and        := rel {'&&' rel}
    rel        := add [('==' | '!=' | '<' | '<=' | '>' | '>=') add]
    add        := mul {('+' | '-') mul}
    mul        := unary {('*' | '/' | '%') unary}
    unary      := ('!' | '-') unary | postfix
    postfix    := primary {'.' IDENT ['(' [arg {',' arg}] ')']}
    arg        := [IDENT '='] expr
    primary    := INT | FLOAT | 'True' | 'False' | 'true' | 'false' | 'INF' | IDENT | '(' expr ')'

Statements end with ``;``; blocks take none. ``//`` and ``/* */`` comments are
trivia. ``iterateInReverse`` is only accepted as the trailing clause of an
``iterateInBFS`` and is stored on that node.
"""

from __future__ import annotations

import math
import re

from constants import MAX_NESTING_DEPTH
from dsl_ast import (
    Assign,
    Binary,
    Block,
    CallStmt,
    Decl,
    DoWhile,
    Domain,
    DslType,
    Expr,
    FixedPoint,
    ForAll,
    FunctionDecl,
    If,
    IterateInBFS,
    IterateInReverse,
    Literal,
    MethodCall,
    MinMaxAssign,
    Param,
    Program,
    PropAccess,
    ReduceAssign,
    ReduceOp,
    Return,
    Span,
    Stmt,
    Token,
    TokenKind,
    Unary,
    Var,
    While,
)
from errors import LexError, ParseError

KEYWORDS = frozenset({
    "function", "forall", "for", "in", "fixedPoint", "until", "iterateInBFS",
    "iterateInReverse", "from", "if", "else", "while", "do", "return", "filter",
    "Min", "Max", "INF",
    "int", "long", "float", "double", "bool", "node", "edge", "Graph",
    "propNode", "propEdge", "setNode", "SetN",
})
TYPE_KEYWORDS = frozenset({
    "int", "long", "float", "double", "bool", "node", "edge", "Graph",
    "propNode", "propEdge", "setNode", "SetN",
})
BOOL_LITERALS = {"True": True, "False": False, "true": True, "false": False}
DOMAIN_METHODS = ("nodes", "neighbors", "nodes_to")

_OPERATORS = ("&&=", "||=", "+=", "*=", "++", "==", "!=", "<=", ">=", "&&", "||",
              "+", "-", "*", "/", "%", "<", ">", "=", "!")
_PUNCTUATION = "(){},;:."
_DIGITS = frozenset("0123456789")

_TRIVIA_RE = re.compile(r"(?:[ \t\r\n]+|//[^\n]*|/\*.*?\*/)+", re.DOTALL)
_BAD_EXPONENT_RE = re.compile(r"(?:[0-9]+\.[0-9]*|\.[0-9]+|[0-9]+)[eE](?:[+-](?![0-9])|(?![+\-0-9]))")
_FLOAT_RE = re.compile(r"(?:[0-9]+\.[0-9]*|\.[0-9]+)(?:[eE][+-]?[0-9]+)?|[0-9]+[eE][+-]?[0-9]+")
_INT_RE = re.compile(r"[0-9]+")
_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_OPERATOR_RE = re.compile("|".join(re.escape(op) for op in _OPERATORS))

_REDUCE_TOKENS = {op.value: op for op in ReduceOp}


# ---------------------------------------------------------------------------
# Lexer
# ---------------------------------------------------------------------------

def _advance_position(text: str, line: int, column: int) -> tuple[int, int]:
    newlines = text.count("\n")
    if newlines:
        return line + newlines, len(text) - text.rfind("\n")
    return line, column + len(text)


def _decode(source: str | bytes) -> str:
    if isinstance(source, str):
        return source
    try:
        return source.decode("utf-8")
    except UnicodeDecodeError as exc:
        prefix = source[:exc.start].decode("utf-8", errors="replace")
        line, column = _advance_position(prefix, 1, 1)
        raise LexError("source is not valid UTF-8", Span(line, column, 1)) from None


def tokenize(source: str | bytes) -> list[Token]:
    """Split *source* into tokens; the last token is always EOF.

    Comments and whitespace are kept as the ``leading`` trivia of the next
    token, so ``"".join(t.leading + t.lexeme for t in tokens) == source``.
    """
    text = _decode(source)
    tokens: list[Token] = []
    pos, line, column = 0, 1, 1
    end = len(text)

    while True:
        leading = ""
        trivia = _TRIVIA_RE.match(text, pos)
        if trivia:
            leading = trivia.group(0)
            pos = trivia.end()
            line, column = _advance_position(leading, line, column)
        if pos < end and text.startswith("/*", pos):
            raise LexError("unterminated comment", Span(line, column, 2))
        if pos >= end:
            tokens.append(Token(TokenKind.EOF, "", Span(line, column, 0), leading))
            return tokens

        kind, lexeme = _match_token(text, pos, line, column)
        tokens.append(Token(kind, lexeme, Span(line, column, len(lexeme)), leading))
        pos += len(lexeme)
        line, column = _advance_position(lexeme, line, column)


def _match_token(text: str, pos: int, line: int, column: int) -> tuple[TokenKind, str]:
    ch = text[pos]
    if ch in _DIGITS or (ch == "." and pos + 1 < len(text) and text[pos + 1] in _DIGITS):
        bad = _BAD_EXPONENT_RE.match(text, pos)
        if bad:
            raise LexError(f"unterminated literal '{bad.group(0)}'",
                           Span(line, column, len(bad.group(0))))
        m = _FLOAT_RE.match(text, pos)
        if m:
            lexeme = m.group(0)
            if math.isinf(float(lexeme)):
                raise LexError(f"float literal '{lexeme}' is out of range",
                               Span(line, column, len(lexeme)))
            return TokenKind.FLOAT, lexeme
        return TokenKind.INTEGER, _INT_RE.match(text, pos).group(0)

    m = _IDENT_RE.match(text, pos)
    if m:
        word = m.group(0)
        if word in BOOL_LITERALS:
            return TokenKind.BOOL, word
        if word in KEYWORDS:
            return TokenKind.KEYWORD, word
        return TokenKind.IDENTIFIER, word

    m = _OPERATOR_RE.match(text, pos)
    if m:
        return TokenKind.OPERATOR, m.group(0)
    if ch in _PUNCTUATION:
        return TokenKind.PUNCTUATION, ch
    raise LexError(f"unrecognized character {ch!r}", Span(line, column, 1))


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_PREC_OR, _PREC_AND, _PREC_REL, _PREC_ADD, _PREC_MUL, _PREC_UNARY, _PREC_POSTFIX = range(1, 8)
_BINARY_PREC = {
    "||": _PREC_OR, "&&": _PREC_AND,
    "==": _PREC_REL, "!=": _PREC_REL, "<": _PREC_REL, "<=": _PREC_REL,
    ">": _PREC_REL, ">=": _PREC_REL,
    "+": _PREC_ADD, "-": _PREC_ADD,
    "*": _PREC_MUL, "/": _PREC_MUL, "%": _PREC_MUL,
}
_RELATIONAL = frozenset(op for op, p in _BINARY_PREC.items() if p == _PREC_REL)


class Parser:
    """Recursive-descent parser over a token list produced by ``tokenize``."""

    def __init__(self, tokens: list[Token]):
        if not tokens or tokens[-1].kind is not TokenKind.EOF:
            raise ParseError("token stream must end with end-of-input")
        self.tokens = tokens
        self.pos = 0
        self.depth = 0

    # ------------------------------------------------------------------
    # Token helpers
    # ------------------------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def advance(self) -> Token:
        tok = self.peek()
        if tok.kind is not TokenKind.EOF:
            self.pos += 1
        return tok

    def at(self, lexeme: str, offset: int = 0) -> bool:
        tok = self.peek(offset)
        return tok.lexeme == lexeme and tok.kind is not TokenKind.EOF

    def accept(self, lexeme: str) -> Token | None:
        if self.at(lexeme):
            return self.advance()
        return None

    def expect(self, lexeme: str) -> Token:
        if self.at(lexeme):
            return self.advance()
        raise self.error(f"unexpected {self._describe(self.peek())}", {lexeme})

    def expect_identifier(self) -> Token:
        tok = self.peek()
        if tok.kind is TokenKind.IDENTIFIER:
            return self.advance()
        raise self.error(f"unexpected {self._describe(tok)}", {"identifier"})

    def error(self, message: str, expected=()) -> ParseError:
        return ParseError(message, self.peek().span, frozenset(expected))

    @staticmethod
    def _describe(tok: Token) -> str:
        if tok.kind is TokenKind.EOF:
            return "end of input"
        return f"{tok.kind.value} '{tok.lexeme}'"

    def _enter(self) -> None:
        self.depth += 1
        if self.depth > MAX_NESTING_DEPTH:
            raise self.error("nesting too deep")

    def _leave(self) -> None:
        self.depth -= 1

    # ------------------------------------------------------------------
    # Declarations
    # ------------------------------------------------------------------

    def parse_program(self) -> Program:
        start = self.peek().span
        functions = []
        while self.peek().kind is not TokenKind.EOF:
            functions.append(self.parse_function())
        if not functions:
            raise self.error("empty program", {"function"})
        return Program(functions, span=start)

    def parse_function(self) -> FunctionDecl:
        start = self.expect("function").span
        name = self.expect_identifier().lexeme
        self.expect("(")
        params = []
        if not self.at(")"):
            params.append(self.parse_param())
            while self.accept(","):
                params.append(self.parse_param())
        self.expect(")")
        body = self.parse_block()
        return FunctionDecl(name, params, body, span=start)

    def parse_param(self) -> Param:
        start = self.peek().span
        ty = self.parse_type()
        return Param(ty, self.expect_identifier().lexeme, span=start)

    def parse_type(self) -> DslType:
        tok = self.peek()
        if tok.kind is not TokenKind.KEYWORD or tok.lexeme not in TYPE_KEYWORDS:
            raise self.error(f"unexpected {self._describe(tok)}", {"type"})
        self.advance()
        if tok.lexeme in ("propNode", "propEdge"):
            self.expect("<")
            elem = self.parse_type()
            self.expect(">")
            return DslType(tok.lexeme, elem)
        if tok.lexeme in ("setNode", "SetN"):
            self.expect("<")
            graph = self.expect_identifier().lexeme
            self.expect(">")
            return DslType("setNode", graph=graph)
        return DslType(tok.lexeme)

    # ------------------------------------------------------------------
    # Statements
    # ------------------------------------------------------------------

    def parse_block(self) -> Block:
        start = self.expect("{").span
        self._enter()
        stmts = []
        while not self.at("}"):
            if self.peek().kind is TokenKind.EOF:
                raise self.error("unterminated block", {"}"})
            stmts.append(self.parse_statement())
        self.expect("}")
        self._leave()
        return Block(stmts, span=start)

    def parse_statement(self) -> Stmt:
        tok = self.peek()
        self._enter()
        try:
            if tok.kind is TokenKind.KEYWORD:
                handler = self._keyword_handlers().get(tok.lexeme)
                if handler is not None:
                    return handler()
                if tok.lexeme in TYPE_KEYWORDS:
                    return self.parse_decl()
                if tok.lexeme == "iterateInReverse":
                    raise self.error("iterateInReverse must directly follow an iterateInBFS block")
            if tok.lexeme == "{" and tok.kind is TokenKind.PUNCTUATION:
                return self.parse_block()
            if tok.lexeme == "<" and tok.kind is TokenKind.OPERATOR:
                return self.parse_minmax()
            if tok.kind is TokenKind.IDENTIFIER:
                return self.parse_simple_statement()
            raise self.error(f"unexpected {self._describe(tok)}", {"statement"})
        finally:
            self._leave()

    def _keyword_handlers(self):
        return {
            "forall": self.parse_forall,
            "for": self.parse_forall,
            "fixedPoint": self.parse_fixed_point,
            "iterateInBFS": self.parse_bfs,
            "if": self.parse_if,
            "while": self.parse_while,
            "do": self.parse_do_while,
            "return": self.parse_return,
        }

    def parse_decl(self) -> Decl:
        start = self.peek().span
        ty = self.parse_type()
        name = self.expect_identifier().lexeme
        init = self.parse_expr() if self.accept("=") else None
        self.expect(";")
        return Decl(ty, name, init, span=start)

    def parse_simple_statement(self) -> Stmt:
        start = self.peek().span
        target = self.parse_postfix()
        tok = self.peek()
        if tok.lexeme == "=" and tok.kind is TokenKind.OPERATOR:
            self._check_lvalue(target)
            self.advance()
            value = self.parse_expr()
            self.expect(";")
            return Assign(target, value, span=start)
        if tok.kind is TokenKind.OPERATOR and tok.lexeme in _REDUCE_TOKENS:
            self._check_lvalue(target)
            self.advance()
            op = _REDUCE_TOKENS[tok.lexeme]
            value = None if op is ReduceOp.COUNT else self.parse_expr()
            self.expect(";")
            return ReduceAssign(target, op, value, span=start)
        if tok.lexeme == ";" and isinstance(target, MethodCall):
            self.advance()
            return CallStmt(target, span=start)
        raise self.error(f"unexpected {self._describe(tok)}",
                         {"=", ";", *_REDUCE_TOKENS})

    def _check_lvalue(self, expr: Expr) -> None:
        if isinstance(expr, Var):
            return
        if isinstance(expr, PropAccess) and isinstance(expr.obj, Var):
            return
        raise ParseError("invalid assignment target", expr.span, frozenset({"lvalue"}))

    def parse_lvalue(self) -> Expr:
        target = self.parse_postfix()
        self._check_lvalue(target)
        return target

    def parse_minmax(self) -> MinMaxAssign:
        start = self.expect("<").span
        targets = [self.parse_lvalue()]
        while self.accept(","):
            targets.append(self.parse_lvalue())
        if not self.accept(">="):
            self.expect(">")
            self.expect("=")
        self.expect("<")
        kind_tok = self.peek()
        if kind_tok.lexeme not in ("Min", "Max"):
            raise self.error(f"unexpected {self._describe(kind_tok)}", {"Min", "Max"})
        self.advance()
        self.expect("(")
        first = self.parse_expr()
        self.expect(",")
        second = self.parse_expr()
        self.expect(")")
        attached = []
        while self.accept(","):
            attached.append(self.parse_binary(_PREC_ADD))
        self.expect(">")
        self.expect(";")
        return MinMaxAssign(targets, kind_tok.lexeme, (first, second), attached, span=start)

    def parse_domain(self) -> Domain:
        start = self.peek().span
        source = self.expect_identifier().lexeme
        kind, arg = "container", None
        if self.at(".") and self.peek(1).lexeme in DOMAIN_METHODS:
            self.advance()
            kind = self.advance().lexeme
            self.expect("(")
            if kind != "nodes":
                arg = self.parse_expr()
            self.expect(")")
        flt = None
        if self.at(".") and self.at("filter", 1):
            self.advance()
            self.advance()
            self.expect("(")
            flt = self.parse_expr()
            self.expect(")")
        return Domain(kind, source, arg, flt, span=start)

    def parse_forall(self) -> ForAll:
        tok = self.advance()
        self.expect("(")
        var = self.expect_identifier().lexeme
        self.expect("in")
        domain = self.parse_domain()
        self.expect(")")
        body = self.parse_block()
        return ForAll(var, domain, body, parallel=tok.lexeme == "forall", span=tok.span)

    def parse_fixed_point(self) -> FixedPoint:
        start = self.expect("fixedPoint").span
        self.expect("until")
        self.expect("(")
        flag = self.expect_identifier().lexeme
        self.expect(":")
        convergence = self.parse_expr()
        self.expect(")")
        return FixedPoint(flag, convergence, self.parse_block(), span=start)

    def parse_bfs(self) -> IterateInBFS:
        start = self.expect("iterateInBFS").span
        self.expect("(")
        var = self.expect_identifier().lexeme
        self.expect("in")
        graph = self.expect_identifier().lexeme
        self.expect(".")
        self.expect("nodes")
        self.expect("(")
        self.expect(")")
        self.expect("from")
        root = self.parse_expr()
        self.expect(")")
        body = self.parse_block()
        reverse = None
        if self.at("iterateInReverse"):
            rev_start = self.advance().span
            self.expect("(")
            flt = None if self.at(")") else self.parse_expr()
            self.expect(")")
            reverse = IterateInReverse(flt, self.parse_block(), span=rev_start)
        return IterateInBFS(var, graph, root, body, reverse, span=start)

    def _parse_body(self) -> Stmt:
        if self.at("{"):
            return self.parse_block()
        return self.parse_statement()

    def parse_if(self) -> If:
        start = self.expect("if").span
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        then = self._parse_body()
        orelse = self._parse_body() if self.accept("else") else None
        return If(cond, then, orelse, span=start)

    def parse_while(self) -> While:
        start = self.expect("while").span
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        return While(cond, self.parse_block(), span=start)

    def parse_do_while(self) -> DoWhile:
        start = self.expect("do").span
        body = self.parse_block()
        self.expect("while")
        self.expect("(")
        cond = self.parse_expr()
        self.expect(")")
        self.expect(";")
        return DoWhile(body, cond, span=start)

    def parse_return(self) -> Return:
        start = self.expect("return").span
        value = None if self.at(";") else self.parse_expr()
        self.expect(";")
        return Return(value, span=start)

    # ------------------------------------------------------------------
    # Expressions
    # ------------------------------------------------------------------

    def parse_expr(self) -> Expr:
        return self.parse_binary(_PREC_OR)

    def parse_binary(self, min_prec: int) -> Expr:
        self._enter()
        left = self.parse_unary()
        while True:
            tok = self.peek()
            prec = _BINARY_PREC.get(tok.lexeme) if tok.kind is TokenKind.OPERATOR else None
            if prec is None or prec < min_prec:
                break
            self.advance()
            right = self.parse_binary(prec + 1)
            left = Binary(tok.lexeme, left, right, span=tok.span)
            if prec == _PREC_REL and self.peek().lexeme in _RELATIONAL \
                    and self.peek().kind is TokenKind.OPERATOR:
                raise self.error("relational operators do not chain")
        self._leave()
        return left

    def parse_unary(self) -> Expr:
        tok = self.peek()
        if tok.kind is TokenKind.OPERATOR and tok.lexeme in ("!", "-"):
            self.advance()
            self._enter()
            operand = self.parse_unary()
            self._leave()
            return Unary(tok.lexeme, operand, span=tok.span)
        return self.parse_postfix()

    def parse_postfix(self) -> Expr:
        expr = self.parse_primary()
        while self.at(".") and self.peek(1).kind is TokenKind.IDENTIFIER:
            dot = self.advance()
            name = self.advance().lexeme
            if self.accept("("):
                args, named = self.parse_args()
                expr = MethodCall(expr, name, args, named, span=dot.span)
            else:
                expr = PropAccess(expr, name, span=dot.span)
        return expr

    def parse_args(self) -> tuple[list[Expr], list[tuple[str, Expr]]]:
        args: list[Expr] = []
        named: list[tuple[str, Expr]] = []
        if self.accept(")"):
            return args, named
        while True:
            if self.peek().kind is TokenKind.IDENTIFIER and self.at("=", 1):
                name = self.advance().lexeme
                self.advance()
                named.append((name, self.parse_expr()))
            else:
                args.append(self.parse_expr())
            if not self.accept(","):
                break
        self.expect(")")
        return args, named

    def parse_primary(self) -> Expr:
        tok = self.peek()
        if tok.kind is TokenKind.INTEGER:
            self.advance()
            return Literal(int(tok.lexeme), "int", span=tok.span)
        if tok.kind is TokenKind.FLOAT:
            self.advance()
            return Literal(float(tok.lexeme), "float", span=tok.span)
        if tok.kind is TokenKind.BOOL:
            self.advance()
            return Literal(BOOL_LITERALS[tok.lexeme], "bool", span=tok.span)
        if tok.kind is TokenKind.KEYWORD and tok.lexeme == "INF":
            self.advance()
            return Literal(None, "inf", span=tok.span)
        if tok.kind is TokenKind.IDENTIFIER:
            self.advance()
            return Var(tok.lexeme, span=tok.span)
        if self.accept("("):
            expr = self.parse_expr()
            self.expect(")")
            return expr
        raise self.error(f"unexpected {self._describe(tok)}", {"expression"})


def parse(tokens: list[Token]) -> Program:
    """Parse a token stream from ``tokenize`` into a Program."""
    return Parser(tokens).parse_program()


def parse_source(source: str | bytes) -> Program:
    return parse(tokenize(source))


# ---------------------------------------------------------------------------
# Pretty-printer
# ---------------------------------------------------------------------------

def _expr_prec(expr: Expr) -> int:
    if isinstance(expr, Binary):
        return _BINARY_PREC[expr.op]
    if isinstance(expr, Unary):
        return _PREC_UNARY
    return _PREC_POSTFIX


def format_expr(expr: Expr, min_prec: int = 0) -> str:
    """Render *expr* with the minimal parentheses that preserve its shape."""
    if isinstance(expr, Literal):
        text = _format_literal(expr)
    elif isinstance(expr, Var):
        text = expr.name
    elif isinstance(expr, PropAccess):
        text = f"{format_expr(expr.obj, _PREC_POSTFIX)}.{expr.prop}"
    elif isinstance(expr, MethodCall):
        parts = [format_expr(a) for a in expr.args]
        parts += [f"{name} = {format_expr(value)}" for name, value in expr.named]
        text = f"{format_expr(expr.obj, _PREC_POSTFIX)}.{expr.method}({', '.join(parts)})"
    elif isinstance(expr, Unary):
        text = f"{expr.op}{format_expr(expr.operand, _PREC_UNARY)}"
    elif isinstance(expr, Binary):
        prec = _BINARY_PREC[expr.op]
        left_min = prec + 1 if prec == _PREC_REL else prec
        text = (f"{format_expr(expr.left, left_min)} {expr.op} "
                f"{format_expr(expr.right, prec + 1)}")
    else:
        raise TypeError(f"not an expression: {expr!r}")
    if _expr_prec(expr) < min_prec:
        return f"({text})"
    return text


def _format_literal(lit: Literal) -> str:
    if lit.kind == "inf":
        return "INF"
    if lit.kind == "bool":
        return "True" if lit.value else "False"
    if lit.kind == "float":
        text = repr(float(lit.value))
        return text if any(c in text for c in ".eE") else text + ".0"
    return str(lit.value)


def format_domain(domain: Domain) -> str:
    if domain.kind == "container":
        text = domain.source
    elif domain.kind == "nodes":
        text = f"{domain.source}.nodes()"
    else:
        text = f"{domain.source}.{domain.kind}({format_expr(domain.arg)})"
    if domain.filter is not None:
        text += f".filter({format_expr(domain.filter)})"
    return text


class _PrettyPrinter:
    def __init__(self, indent: int = 4):
        self.unit = " " * indent
        self.lines: list[str] = []

    def emit(self, depth: int, text: str) -> None:
        self.lines.append(self.unit * depth + text)

    def program(self, program: Program) -> str:
        for i, fn in enumerate(program.functions):
            if i:
                self.lines.append("")
            params = ", ".join(f"{p.type} {p.name}" for p in fn.params)
            self.emit(0, f"function {fn.name}({params}) {{")
            self.block_body(fn.body, 1)
            self.emit(0, "}")
        return "\n".join(self.lines) + "\n"

    def block_body(self, block: Block, depth: int) -> None:
        for stmt in block.stmts:
            self.stmt(stmt, depth)

    def opened(self, depth: int, header: str, body: Block) -> None:
        self.emit(depth, header + " {")
        self.block_body(body, depth + 1)
        self.emit(depth, "}")

    def stmt(self, stmt: Stmt, depth: int) -> None:
        if isinstance(stmt, Block):
            self.emit(depth, "{")
            self.block_body(stmt, depth + 1)
            self.emit(depth, "}")
        elif isinstance(stmt, Decl):
            init = f" = {format_expr(stmt.init)}" if stmt.init is not None else ""
            self.emit(depth, f"{stmt.type} {stmt.name}{init};")
        elif isinstance(stmt, Assign):
            self.emit(depth, f"{format_expr(stmt.target)} = {format_expr(stmt.value)};")
        elif isinstance(stmt, ReduceAssign):
            if stmt.op is ReduceOp.COUNT:
                self.emit(depth, f"{format_expr(stmt.target)}++;")
            else:
                self.emit(depth, f"{format_expr(stmt.target)} {stmt.op.value} "
                                 f"{format_expr(stmt.value)};")
        elif isinstance(stmt, ForAll):
            keyword = "forall" if stmt.parallel else "for"
            self.opened(depth, f"{keyword} ({stmt.var} in {format_domain(stmt.domain)})",
                        stmt.body)
        elif isinstance(stmt, FixedPoint):
            self.opened(depth, f"fixedPoint until ({stmt.flag}: "
                               f"{format_expr(stmt.convergence)})", stmt.body)
        elif isinstance(stmt, IterateInBFS):
            self.opened(depth, f"iterateInBFS ({stmt.var} in {stmt.graph}.nodes() from "
                               f"{format_expr(stmt.root)})", stmt.body)
            if stmt.reverse is not None:
                flt = stmt.reverse.filter
                cond = format_expr(flt) if flt is not None else ""
                self.opened(depth, f"iterateInReverse ({cond})", stmt.reverse.body)
        elif isinstance(stmt, If):
            self.branch(depth, f"if ({format_expr(stmt.cond)})", stmt.then)
            if stmt.orelse is not None:
                self.branch(depth, "else", stmt.orelse)
        elif isinstance(stmt, While):
            self.opened(depth, f"while ({format_expr(stmt.cond)})", stmt.body)
        elif isinstance(stmt, DoWhile):
            self.opened(depth, "do", stmt.body)
            self.lines[-1] += f" while ({format_expr(stmt.cond)});"
        elif isinstance(stmt, MinMaxAssign):
            targets = ", ".join(format_expr(t) for t in stmt.targets)
            values = [f"{stmt.kind}({format_expr(stmt.compare[0])}, "
                      f"{format_expr(stmt.compare[1])})"]
            values += [format_expr(v, _PREC_ADD) for v in stmt.attached]
            self.emit(depth, f"<{targets}> = <{', '.join(values)}>;")
        elif isinstance(stmt, CallStmt):
            self.emit(depth, f"{format_expr(stmt.call)};")
        elif isinstance(stmt, Return):
            value = f" {format_expr(stmt.value)}" if stmt.value is not None else ""
            self.emit(depth, f"return{value};")
        else:
            raise TypeError(f"not a statement: {stmt!r}")

    def branch(self, depth: int, header: str, body: Stmt) -> None:
        if isinstance(body, Block):
            self.opened(depth, header, body)
        else:
            self.emit(depth, header)
            self.stmt(body, depth + 1)


def pretty_print(program: Program, indent: int = 4) -> str:
    """Canonical source text for *program*; reparsing yields an equal AST."""
    return _PrettyPrinter(indent).program(program)
