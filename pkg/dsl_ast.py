"""
dsl_ast.py
==========
Source spans, tokens, DSL types and the Program abstract syntax tree.

Every node carries a ``span``; spans and the annotations added by semantic
analysis (``meta``, ``ty``) are excluded from equality, so two trees compare
equal when they are structurally identical regardless of where they came from.
"""

from __future__ import annotations

import enum
from collections.abc import Iterator
from dataclasses import dataclass, field, fields


@dataclass(frozen=True)
class Span:
    line: int
    column: int
    length: int = 0

    def __str__(self) -> str:
        return f"{self.line}:{self.column}"


NO_SPAN = Span(0, 0, 0)


class TokenKind(enum.Enum):
    KEYWORD = "keyword"
    IDENTIFIER = "identifier"
    INTEGER = "integer-literal"
    FLOAT = "float-literal"
    BOOL = "bool-literal"
    OPERATOR = "operator"
    PUNCTUATION = "punctuation"
    EOF = "end-of-input"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    lexeme: str
    span: Span
    # whitespace and comments preceding the lexeme
    leading: str = ""


# ── Types ────────────────────────────────────────────────────────────────────

_NUMERIC_RANK = {"int": 0, "long": 1, "float": 2, "double": 3}


@dataclass(frozen=True)
class DslType:
    name: str
    elem: DslType | None = None
    # graph name for setNode<g>
    graph: str | None = None

    @property
    def is_numeric(self) -> bool:
        return self.name in _NUMERIC_RANK or self.name == "inf"

    @property
    def is_integral(self) -> bool:
        return self.name in ("int", "long", "node")

    @property
    def is_float(self) -> bool:
        return self.name in ("float", "double")

    @property
    def is_property(self) -> bool:
        return self.name in ("propNode", "propEdge")

    def __str__(self) -> str:
        if self.name in ("propNode", "propEdge"):
            return f"{self.name}<{self.elem}>"
        if self.name == "setNode":
            return f"setNode<{self.graph}>"
        return self.name


INT = DslType("int")
LONG = DslType("long")
FLOAT = DslType("float")
DOUBLE = DslType("double")
BOOL = DslType("bool")
NODE = DslType("node")
EDGE = DslType("edge")
GRAPH = DslType("Graph")
VOID = DslType("void")
INF_TYPE = DslType("inf")
NODE_DOMAIN = DslType("nodeDomain")


def numeric_join(a: DslType, b: DslType) -> DslType:
    """Usual arithmetic conversion over int < long < float < double."""
    if a.name == "inf":
        return b if b.is_numeric and b.name != "inf" else INT
    if b.name == "inf":
        return a
    a_name = "int" if a.name == "node" else a.name
    b_name = "int" if b.name == "node" else b.name
    return DslType(max(a_name, b_name, key=lambda n: _NUMERIC_RANK[n]))


def assignable(target: DslType, value: DslType) -> bool:
    if target == value:
        return True
    if value.name == "inf":
        return target.is_numeric
    if target.is_numeric and (value.is_numeric or value.name == "node"):
        return True
    if target.name == "node" and value.is_integral:
        return True
    return False


# ── AST ──────────────────────────────────────────────────────────────────────

@dataclass
class Node:
    span: Span = field(default=NO_SPAN, compare=False, repr=False, kw_only=True)
    meta: dict = field(default_factory=dict, compare=False, repr=False, kw_only=True)


@dataclass
class Expr(Node):
    ty: DslType | None = field(default=None, compare=False, repr=False, kw_only=True)


@dataclass
class Literal(Expr):
    value: object
    # int | float | bool | inf
    kind: str


@dataclass
class Var(Expr):
    name: str


@dataclass
class PropAccess(Expr):
    obj: Expr
    prop: str


@dataclass
class Unary(Expr):
    op: str
    operand: Expr


@dataclass
class Binary(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass
class MethodCall(Expr):
    obj: Expr
    method: str
    args: list[Expr] = field(default_factory=list)
    named: list[tuple[str, Expr]] = field(default_factory=list)


@dataclass
class Domain(Node):
    # nodes | neighbors | nodes_to | container
    kind: str
    source: str
    arg: Expr | None = None
    filter: Expr | None = None


class ReduceOp(enum.Enum):
    SUM = "+="
    PRODUCT = "*="
    COUNT = "++"
    ALL = "&&="
    ANY = "||="

    @property
    def label(self) -> str:
        return self.name.capitalize()


@dataclass
class Stmt(Node):
    pass


@dataclass
class Block(Stmt):
    stmts: list[Stmt] = field(default_factory=list)


@dataclass
class Decl(Stmt):
    type: DslType
    name: str
    init: Expr | None = None


@dataclass
class Assign(Stmt):
    target: Expr
    value: Expr


@dataclass
class ReduceAssign(Stmt):
    target: Expr
    op: ReduceOp
    value: Expr | None = None


@dataclass
class ForAll(Stmt):
    var: str
    domain: Domain
    body: Block
    parallel: bool = True


@dataclass
class FixedPoint(Stmt):
    flag: str
    convergence: Expr
    body: Block


@dataclass
class IterateInReverse(Stmt):
    filter: Expr | None
    body: Block


@dataclass
class IterateInBFS(Stmt):
    var: str
    graph: str
    root: Expr
    body: Block
    reverse: IterateInReverse | None = None


@dataclass
class If(Stmt):
    cond: Expr
    then: Stmt
    orelse: Stmt | None = None


@dataclass
class While(Stmt):
    cond: Expr
    body: Block


@dataclass
class DoWhile(Stmt):
    body: Block
    cond: Expr


@dataclass
class MinMaxAssign(Stmt):
    targets: list[Expr]
    # Min | Max
    kind: str
    compare: tuple[Expr, Expr]
    attached: list[Expr] = field(default_factory=list)


@dataclass
class CallStmt(Stmt):
    call: MethodCall


@dataclass
class Return(Stmt):
    value: Expr | None = None


@dataclass
class Param(Node):
    type: DslType
    name: str


@dataclass
class FunctionDecl(Node):
    name: str
    params: list[Param]
    body: Block


@dataclass
class Program(Node):
    functions: list[FunctionDecl]

    def function(self, name: str | None = None) -> FunctionDecl:
        """Return the entry function: *name* if given, else the first one."""
        if name is None:
            return self.functions[0]
        for fn in self.functions:
            if fn.name == name:
                return fn
        raise KeyError(name)


def children(node: Node) -> Iterator[Node]:
    for f in fields(node):
        if f.name in ("span", "meta", "ty"):
            continue
        yield from _nodes_in(getattr(node, f.name))


def _nodes_in(value) -> Iterator[Node]:
    if isinstance(value, Node):
        yield value
    elif isinstance(value, (list, tuple)):
        for item in value:
            yield from _nodes_in(item)


def walk(node: Node) -> Iterator[Node]:
    """Pre-order traversal of *node* and all its descendants."""
    stack = [node]
    while stack:
        current = stack.pop()
        yield current
        stack.extend(reversed(list(children(current))))
