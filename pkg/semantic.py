"""
semantic.py
===========
Type checking and the static analyses shared by the interpreter and every code
generator.

``type_check`` resolves every name against a scoped ``SymbolTable`` and returns
an ``AnnotatedProgram`` (a deep copy of the input with ``Expr.ty`` and
``meta["symbol"]`` filled in). ``analyze`` then derives, for the entry
function:

- parallel regions (outermost ``forall``, BFS bodies, reverse-BFS bodies and
  whole-property copies) with their copy-in / copy-out / device-only sets,
- transfer scopes (maximal runs of sibling regions) and their placement, with
  loop-invariant transfers promoted out of host loops,
- reductions, fixed-point flag fusion sites and data-race warnings.

All analyses are pure functions of the annotated tree.
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass, field

import yaml

from dsl_ast import (
    BOOL,
    EDGE,
    FLOAT,
    GRAPH,
    INF_TYPE,
    INT,
    LONG,
    NODE,
    VOID,
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
    Program,
    PropAccess,
    ReduceAssign,
    ReduceOp,
    Return,
    Span,
    Stmt,
    Unary,
    Var,
    While,
    assignable,
    numeric_join,
    walk,
)
from errors import DataRaceWarning, Diagnostic, TypeCheckError

GRAPH_ARRAYS = ("offsets", "dests", "weights", "rev_offsets", "rev_srcs")

# graph method -> (argument types, result type)
GRAPH_METHODS = {
    "num_nodes":     ((), INT),
    "num_edges":     ((), INT),
    "count_outNbrs": ((NODE,), INT),
    "count_inNbrs":  ((NODE,), INT),
    "get_edge":      ((NODE, NODE), EDGE),
    "is_an_edge":    ((NODE, NODE), BOOL),
    "minWt":         ((), INT),
    "maxWt":         ((), INT),
}
DOMAIN_ONLY_METHODS = ("nodes", "neighbors", "nodes_to")

_ARITHMETIC = frozenset({"+", "-", "*", "/"})
_ORDERING = frozenset({"<", "<=", ">", ">="})
_EQUALITY = frozenset({"==", "!="})
_LOGICAL = frozenset({"&&", "||"})


# ── Symbols ──────────────────────────────────────────────────────────────────

def symbol_kind(ty: DslType) -> str:
    return {
        "Graph": "graph",
        "node": "node",
        "edge": "edge",
        "propNode": "node-property",
        "propEdge": "edge-property",
        "setNode": "node-set",
    }.get(ty.name, "scalar")


@dataclass(frozen=True)
class Symbol:
    name: str
    kind: str
    type: DslType
    uid: int
    span: Span = field(compare=False, repr=False)
    param: bool = False

    @property
    def value_type(self) -> DslType:
        """Element type for properties, the declared type otherwise."""
        return self.type.elem if self.type.is_property else self.type

    @property
    def is_graph_alias(self) -> bool:
        """Graph handles and unbound edge-property parameters (the CSR weights)."""
        return self.kind == "graph" or (self.kind == "edge-property" and self.param)


class SymbolTable:
    """Scoped name -> Symbol map; shadowing is allowed across scopes only."""

    def __init__(self):
        self._scopes: list[dict[str, Symbol]] = [{}]
        self._next_uid = 0
        self.symbols: list[Symbol] = []

    def push(self) -> None:
        self._scopes.append({})

    def pop(self) -> None:
        self._scopes.pop()

    def declare(self, name: str, ty: DslType, span: Span, param: bool = False) -> Symbol:
        if name in self._scopes[-1]:
            previous = self._scopes[-1][name]
            raise TypeCheckError(
                f"'{name}' is already declared in this scope (line {previous.span.line})", span)
        sym = Symbol(name, symbol_kind(ty), ty, self._next_uid, span, param)
        self._next_uid += 1
        self.symbols.append(sym)
        self._scopes[-1][name] = sym
        return sym

    def bind(self, sym: Symbol) -> None:
        self._scopes[-1][sym.name] = sym

    def lookup(self, name: str) -> Symbol | None:
        for scope in reversed(self._scopes):
            if name in scope:
                return scope[name]
        return None


# ── Type checking ────────────────────────────────────────────────────────────

@dataclass
class AnnotatedProgram:
    program: Program
    entry: FunctionDecl
    params: list[Symbol]
    symbols: list[Symbol]
    return_type: DslType | None = None

    @property
    def name(self) -> str:
        return self.entry.name

    def param(self, name: str) -> Symbol | None:
        return next((p for p in self.params if p.name == name), None)


_ALL_NODES = "all-nodes"


def _numeric_like(ty: DslType | None) -> bool:
    return ty is not None and (ty.is_numeric or ty.name == "node")


class TypeChecker:
    """Annotates one function in place; raises TypeCheckError on the first error."""

    def __init__(self, debug: bool = False):
        self.debug = debug
        self.table = SymbolTable()
        # iteration node a bare property name refers to (filters, convergence)
        self.implicit: Symbol | str | None = None
        self.bfs_vars: list[Symbol] = []
        self.return_type: DslType | None = None

    def _log(self, message: str):
        if self.debug:
            print(f"[SEMANTIC] {message}", file=sys.stderr)

    def error(self, message: str, span: Span | None) -> TypeCheckError:
        return TypeCheckError(message, span)

    # ------------------------------------------------------------------
    # Functions and statements
    # ------------------------------------------------------------------

    def check_function(self, fn: FunctionDecl) -> list[Symbol]:
        self._log(f"checking function {fn.name}")
        self.table.push()
        params = []
        for p in fn.params:
            if p.type.name == "setNode":
                self._check_set_graph(p.type, p.span)
            sym = self.table.declare(p.name, p.type, p.span, param=True)
            p.meta["symbol"] = sym
            params.append(sym)
        self.check_block(fn.body)
        self.table.pop()
        return params

    def check_block(self, block: Block) -> None:
        self.table.push()
        for stmt in block.stmts:
            self.check_stmt(stmt)
        self.table.pop()

    def check_stmt(self, stmt: Stmt) -> None:
        handler = getattr(self, f"_stmt_{type(stmt).__name__}", None)
        if handler is None:
            raise self.error(f"unsupported statement {type(stmt).__name__}", stmt.span)
        handler(stmt)

    def _stmt_Block(self, stmt: Block) -> None:
        self.check_block(stmt)

    def _check_set_graph(self, ty: DslType, span: Span) -> None:
        graph = self.table.lookup(ty.graph)
        if graph is None or graph.kind != "graph":
            raise self.error(f"setNode refers to unknown graph '{ty.graph}'", span)

    def _stmt_Decl(self, stmt: Decl) -> None:
        if stmt.type.name == "setNode":
            self._check_set_graph(stmt.type, stmt.span)
        if stmt.init is not None:
            value = self.expr(stmt.init)
            if not assignable(stmt.type, value):
                raise self.error(f"cannot initialize {stmt.type} '{stmt.name}' with {value}",
                                 stmt.init.span)
        stmt.meta["symbol"] = self.table.declare(stmt.name, stmt.type, stmt.span)

    def _lvalue(self, target: Expr) -> DslType:
        if isinstance(target, Var):
            sym = self._resolve(target.name, target.span)
            if sym.kind in ("graph", "node-set"):
                raise self.error(f"cannot assign to {sym.kind} '{sym.name}'", target.span)
            target.meta["symbol"] = sym
            target.ty = sym.type
            return sym.type
        return self.expr(target)

    def _stmt_Assign(self, stmt: Assign) -> None:
        target = self._lvalue(stmt.target)
        value = self.expr(stmt.value)
        if target.is_property:
            if not (isinstance(stmt.value, Var) and value == target):
                raise self.error(f"whole-property assignment to {target} needs a property "
                                 f"of the same type, got {value}", stmt.value.span)
            return
        if not assignable(target, value):
            raise self.error(f"cannot assign {value} to {target}", stmt.span)

    def _stmt_ReduceAssign(self, stmt: ReduceAssign) -> None:
        target = self._lvalue(stmt.target)
        if stmt.op in (ReduceOp.SUM, ReduceOp.PRODUCT, ReduceOp.COUNT):
            if not target.is_numeric:
                raise self.error(f"{stmt.op.label} reduction needs a numeric target, "
                                 f"got {target}", stmt.span)
        elif target != BOOL:
            raise self.error(f"{stmt.op.label} reduction needs a bool target, got {target}",
                             stmt.span)
        if stmt.value is not None:
            value = self.expr(stmt.value)
            if not assignable(target, value):
                raise self.error(f"cannot reduce {value} into {target}", stmt.value.span)

    def _check_domain(self, domain: Domain) -> None:
        source = self._resolve(domain.source, domain.span)
        domain.meta["symbol"] = source
        if domain.kind == "container":
            if source.kind != "node-set":
                raise self.error(f"cannot iterate over {source.type} '{source.name}'",
                                 domain.span)
        else:
            if source.kind != "graph":
                raise self.error(f"'{domain.kind}' is only defined on graphs", domain.span)
            if domain.arg is not None:
                arg = self.expr(domain.arg)
                if arg != NODE:
                    raise self.error(f"'{domain.kind}' expects a node, got {arg}",
                                     domain.arg.span)

    def _stmt_ForAll(self, stmt: ForAll) -> None:
        self._check_domain(stmt.domain)
        arg = stmt.domain.arg
        if (stmt.domain.kind == "neighbors" and isinstance(arg, Var) and self.bfs_vars
                and arg.meta.get("symbol") is self.bfs_vars[-1]):
            stmt.meta["bfs_children"] = True
        self.table.push()
        iterator = self.table.declare(stmt.var, NODE, stmt.span)
        stmt.meta["symbol"] = iterator
        if stmt.domain.filter is not None:
            saved, self.implicit = self.implicit, iterator
            if self.expr(stmt.domain.filter) != BOOL:
                raise self.error("filter must be a bool expression", stmt.domain.filter.span)
            self.implicit = saved
        self.check_block(stmt.body)
        self.table.pop()

    def _stmt_FixedPoint(self, stmt: FixedPoint) -> None:
        flag = self._resolve(stmt.flag, stmt.span)
        if flag.kind != "scalar" or flag.type != BOOL:
            raise self.error(f"fixedPoint flag '{stmt.flag}' must be a bool variable",
                             stmt.span)
        stmt.meta["flag"] = flag
        saved, self.implicit = self.implicit, _ALL_NODES
        if self.expr(stmt.convergence) != BOOL:
            raise self.error("convergence expression must be bool", stmt.convergence.span)
        self.implicit = saved
        self.check_block(stmt.body)

    def _stmt_IterateInBFS(self, stmt: IterateInBFS) -> None:
        graph = self._resolve(stmt.graph, stmt.span)
        if graph.kind != "graph":
            raise self.error(f"'{stmt.graph}' is not a graph", stmt.span)
        root = self.expr(stmt.root)
        if root != NODE and not root.is_integral:
            raise self.error(f"BFS root must be a node, got {root}", stmt.root.span)
        self.table.push()
        var = self.table.declare(stmt.var, NODE, stmt.span)
        stmt.meta["symbol"] = var
        self.bfs_vars.append(var)
        self.check_block(stmt.body)
        self.table.pop()
        if stmt.reverse is not None:
            rev = stmt.reverse
            rev.meta["symbol"] = var
            self.table.push()
            self.table.bind(var)
            if rev.filter is not None:
                saved, self.implicit = self.implicit, var
                if self.expr(rev.filter) != BOOL:
                    raise self.error("iterateInReverse filter must be bool", rev.filter.span)
                self.implicit = saved
            self.check_block(rev.body)
            self.table.pop()
        self.bfs_vars.pop()

    def _stmt_IterateInReverse(self, stmt: IterateInReverse) -> None:
        raise self.error("iterateInReverse must follow an iterateInBFS block", stmt.span)

    def _as_block(self, stmt: Stmt | None) -> Block | None:
        if stmt is None or isinstance(stmt, Block):
            return stmt
        return Block([stmt], span=stmt.span)

    def _cond(self, cond: Expr) -> None:
        if self.expr(cond) != BOOL:
            raise self.error("condition must be bool", cond.span)

    def _stmt_If(self, stmt: If) -> None:
        self._cond(stmt.cond)
        stmt.then = self._as_block(stmt.then)
        stmt.orelse = self._as_block(stmt.orelse)
        self.check_block(stmt.then)
        if stmt.orelse is not None:
            self.check_block(stmt.orelse)

    def _stmt_While(self, stmt: While) -> None:
        self._cond(stmt.cond)
        self.check_block(stmt.body)

    def _stmt_DoWhile(self, stmt: DoWhile) -> None:
        self.check_block(stmt.body)
        self._cond(stmt.cond)

    def _stmt_MinMaxAssign(self, stmt: MinMaxAssign) -> None:
        types = []
        for target in stmt.targets:
            ty = self._lvalue(target)
            if ty.is_property:
                raise self.error("Min/Max targets must be scalar or node properties "
                                 "accessed through a node", target.span)
            types.append(ty)
        if not types[0].is_numeric:
            raise self.error(f"{stmt.kind} subject must be numeric, got {types[0]}",
                             stmt.targets[0].span)
        for arg in stmt.compare:
            ty = self.expr(arg)
            if not assignable(types[0], ty):
                raise self.error(f"{stmt.kind} argument of type {ty} does not match "
                                 f"{types[0]}", arg.span)
        if len(stmt.attached) != len(stmt.targets) - 1:
            raise self.error(f"{len(stmt.targets)} targets need {len(stmt.targets) - 1} "
                             f"attached values, got {len(stmt.attached)}", stmt.span)
        for ty, value in zip(types[1:], stmt.attached):
            vt = self.expr(value)
            if not assignable(ty, vt):
                raise self.error(f"attached value of type {vt} does not match {ty}",
                                 value.span)

    def _stmt_CallStmt(self, stmt: CallStmt) -> None:
        self.expr(stmt.call)

    def _stmt_Return(self, stmt: Return) -> None:
        self.return_type = self.expr(stmt.value) if stmt.value is not None else VOID

    # ------------------------------------------------------------------
    # Expressions
    # ------------------------------------------------------------------

    def _resolve(self, name: str, span: Span) -> Symbol:
        sym = self.table.lookup(name)
        if sym is None:
            raise self.error(f"undeclared symbol '{name}'", span)
        return sym

    def expr(self, expr: Expr) -> DslType:
        handler = getattr(self, f"_expr_{type(expr).__name__}")
        ty = handler(expr)
        expr.ty = ty
        return ty

    def _expr_Literal(self, expr: Literal) -> DslType:
        if expr.kind == "int":
            return INT if expr.value <= 2**31 - 1 else LONG
        return {"float": FLOAT, "bool": BOOL, "inf": INF_TYPE}[expr.kind]

    def _expr_Var(self, expr: Var) -> DslType:
        sym = self._resolve(expr.name, expr.span)
        expr.meta["symbol"] = sym
        if sym.kind == "node-property" and self.implicit is not None:
            expr.meta["implicit"] = True
            return sym.value_type
        return sym.type

    def _expr_PropAccess(self, expr: PropAccess) -> DslType:
        obj = self.expr(expr.obj)
        sym = self.table.lookup(expr.prop)
        if sym is None:
            raise self.error(f"undeclared property '{expr.prop}'", expr.span)
        if obj == NODE:
            wanted = "node-property"
        elif obj == EDGE:
            wanted = "edge-property"
        else:
            raise self.error(f"property '{expr.prop}' accessed on non-node value of type {obj}",
                             expr.span)
        if sym.kind != wanted:
            raise self.error(f"'{expr.prop}' is not a {wanted}", expr.span)
        expr.meta["symbol"] = sym
        return sym.value_type

    def _expr_Unary(self, expr: Unary) -> DslType:
        operand = self.expr(expr.operand)
        if expr.op == "!":
            if operand != BOOL:
                raise self.error(f"operator '!' needs a bool operand, got {operand}", expr.span)
            return BOOL
        if not _numeric_like(operand):
            raise self.error(f"operator '-' needs a numeric operand, got {operand}", expr.span)
        return INT if operand == NODE else operand

    def _expr_Binary(self, expr: Binary) -> DslType:
        left = self.expr(expr.left)
        right = self.expr(expr.right)
        op = expr.op
        mismatch = self.error(f"operator '{op}' cannot combine {left} and {right}", expr.span)
        if op in _ARITHMETIC:
            if not (_numeric_like(left) and _numeric_like(right)):
                raise mismatch
            return numeric_join(left, right)
        if op == "%":
            if not (left.is_integral and right.is_integral):
                raise mismatch
            return numeric_join(left, right)
        if op in _ORDERING:
            if not (_numeric_like(left) and _numeric_like(right)):
                raise mismatch
            return BOOL
        if op in _EQUALITY:
            if (_numeric_like(left) and _numeric_like(right)) or left == right:
                return BOOL
            raise mismatch
        if op in _LOGICAL:
            if left != BOOL or right != BOOL:
                raise mismatch
            return BOOL
        raise self.error(f"unknown operator '{op}'", expr.span)

    def _expr_MethodCall(self, expr: MethodCall) -> DslType:
        obj = self.expr(expr.obj)
        if obj != GRAPH:
            raise self.error(f"method '{expr.method}' called on {obj}; methods are only "
                             f"defined on graphs", expr.span)
        if expr.method == "attachNodeProperty":
            return self._attach(expr)
        if expr.method in DOMAIN_ONLY_METHODS:
            raise self.error(f"'{expr.method}()' is only valid as a forall domain", expr.span)
        if expr.method not in GRAPH_METHODS:
            raise self.error(f"unknown graph method '{expr.method}'", expr.span)
        params, result = GRAPH_METHODS[expr.method]
        if expr.named or len(expr.args) != len(params):
            raise self.error(f"'{expr.method}' expects {len(params)} argument(s)", expr.span)
        for arg in expr.args:
            ty = self.expr(arg)
            if ty != NODE and not ty.is_integral:
                raise self.error(f"'{expr.method}' expects node arguments, got {ty}", arg.span)
        return result

    def _attach(self, expr: MethodCall) -> DslType:
        if expr.args or not expr.named:
            raise self.error("attachNodeProperty takes named initializers (prop = value)",
                             expr.span)
        resolved = []
        for name, value in expr.named:
            sym = self.table.lookup(name)
            if sym is None:
                raise self.error(f"undeclared property '{name}'", expr.span)
            if sym.kind != "node-property":
                raise self.error(f"'{name}' is not a node property", expr.span)
            ty = self.expr(value)
            if not assignable(sym.value_type, ty):
                raise self.error(f"cannot initialize {sym.type} '{name}' with {ty}", value.span)
            resolved.append(sym)
        expr.meta["properties"] = resolved
        return VOID


def type_check(program: Program, entry: str | None = None,
               debug: bool = False) -> AnnotatedProgram:
    """Type-check every function of *program* and annotate a copy of it.

    Parameters
    ----------
    program : Program
        Parsed program; it is not modified.
    entry : str, optional
        Name of the entry function. Defaults to the first function.
    """
    annotated = copy.deepcopy(program)
    seen: set[str] = set()
    result = None
    for fn in annotated.functions:
        if fn.name in seen:
            raise TypeCheckError(f"function '{fn.name}' is defined twice", fn.span)
        seen.add(fn.name)
        checker = TypeChecker(debug=debug)
        params = checker.check_function(fn)
        if (entry is None and result is None) or fn.name == entry:
            result = AnnotatedProgram(annotated, fn, params, checker.table.symbols,
                                      checker.return_type)
    if result is None:
        raise TypeCheckError(f"no function named '{entry}'")
    return result


# ── Analysis records ─────────────────────────────────────────────────────────

@dataclass
class RegionInfo:
    id: int
    # forall | bfs | reverse | copy
    kind: str
    kernel: str
    stmt: Stmt = field(repr=False)
    span: Span = field(repr=False)
    copy_in: frozenset[str] = frozenset()
    copy_out: frozenset[str] = frozenset()
    device_only: frozenset[str] = frozenset()
    graph_symbols: frozenset[str] = frozenset()
    full_writes: frozenset[str] = frozenset()

    @property
    def body(self) -> Block | None:
        if self.kind == "copy":
            return None
        return self.stmt.body


@dataclass
class TransferScope:
    regions: tuple[int, ...]
    copy_in: frozenset[str]
    copy_out: frozenset[str]
    block: Block = field(repr=False)
    first: int = 0
    last: int = 0


@dataclass
class TransferSpan:
    """Host-to-device copies before ``block.stmts[first]``, device-to-host after ``[last]``."""

    symbols_in: frozenset[str]
    symbols_out: frozenset[str]
    block: Block = field(repr=False)
    first: int
    last: int
    regions: tuple[int, ...] = ()
    promoted: bool = False


@dataclass
class TransferAnalysis:
    function: str
    regions: list[RegionInfo]
    scopes: list[TransferScope]
    spans: list[TransferSpan]
    # id(stmt) -> region id for every statement inside a region
    stmt_region: dict[int, int] = field(default_factory=dict, repr=False)
    # id(root stmt) -> region, keyed by the ForAll / IterateInBFS / IterateInReverse / Assign
    region_roots: dict[int, RegionInfo] = field(default_factory=dict, repr=False)

    def region(self, region_id: int) -> RegionInfo:
        return self.regions[region_id]

    def region_of(self, stmt: Stmt) -> RegionInfo | None:
        """Region rooted at *stmt*, if any."""
        return self.region_roots.get(id(stmt))

    def enclosing_region(self, stmt: Stmt) -> RegionInfo | None:
        rid = self.stmt_region.get(id(stmt))
        return None if rid is None else self.regions[rid]

    def spans_before(self, block: Block, index: int) -> list[TransferSpan]:
        return [s for s in self.spans if s.block is block and s.first == index]

    def spans_after(self, block: Block, index: int) -> list[TransferSpan]:
        return [s for s in self.spans if s.block is block and s.last == index]

    def symbols_on_device(self) -> list[str]:
        names: set[str] = set()
        for r in self.regions:
            names |= r.copy_in | r.copy_out
        return sorted(names)


@dataclass
class ReductionInfo:
    target: str
    # Sum | Product | Count | All | Any
    operator: str
    region: int
    is_fixed_point_flag: bool = False
    span: Span | None = field(default=None, repr=False)
    # False when the target is declared inside the region
    atomic: bool = True
    stmt: Stmt | None = field(default=None, repr=False, compare=False)


@dataclass
class FusedSite:
    stmt: Stmt = field(repr=False)
    # always | conditional | never: whether the write can break convergence
    mode: str
    region: int | None
    # target position for Min/Max statements, 0 otherwise
    target_index: int = 0
    value: Expr | None = field(default=None, repr=False)

    @property
    def span(self) -> Span:
        return self.stmt.span


@dataclass
class FixedPointInfo:
    flag: str
    property: str | None
    # all-false | all-true | expression
    polarity: str
    stmt: FixedPoint = field(repr=False)
    fused_update_sites: list[FusedSite] = field(default_factory=list)

    @property
    def converged_value(self) -> bool | None:
        return {"all-false": False, "all-true": True}.get(self.polarity)

    @property
    def fused(self) -> bool:
        return self.polarity != "expression"


@dataclass
class Analyses:
    transfers: TransferAnalysis
    reductions: list[ReductionInfo]
    fixed_points: list[FixedPointInfo]
    warnings: list[Diagnostic]

    def fixed_point(self, stmt: FixedPoint) -> FixedPointInfo:
        return next(fp for fp in self.fixed_points if fp.stmt is stmt)

    def fused_sites(self, stmt: Stmt) -> list[tuple[FixedPointInfo, FusedSite]]:
        return [(fp, site) for fp in self.fixed_points
                for site in fp.fused_update_sites if site.stmt is stmt]

    def reduction(self, stmt: Stmt) -> ReductionInfo | None:
        for r in self.reductions:
            if not r.is_fixed_point_flag and r.stmt is stmt:
                return r
        return None


# ── Access collection ────────────────────────────────────────────────────────

@dataclass
class _Access:
    reads: set[Symbol] = field(default_factory=set)
    writes: set[Symbol] = field(default_factory=set)

    def update(self, other: _Access) -> None:
        self.reads |= other.reads
        self.writes |= other.writes

    @property
    def touched(self) -> set[Symbol]:
        return self.reads | self.writes


def _expr_reads(expr: Expr | None, out: set[Symbol]) -> None:
    if expr is None:
        return
    for node in walk(expr):
        sym = node.meta.get("symbol")
        if isinstance(sym, Symbol) and isinstance(node, (Var, PropAccess)):
            out.add(sym)


def _target_access(target: Expr, acc: _Access, read_target: bool) -> None:
    sym = target.meta["symbol"]
    acc.writes.add(sym)
    if read_target:
        acc.reads.add(sym)
    if isinstance(target, PropAccess):
        _expr_reads(target.obj, acc.reads)


def direct_access(stmt: Stmt) -> _Access:
    """Symbols read and written by *stmt* itself, excluding nested statements."""
    acc = _Access()
    if isinstance(stmt, Decl):
        acc.writes.add(stmt.meta["symbol"])
        _expr_reads(stmt.init, acc.reads)
    elif isinstance(stmt, Assign):
        _target_access(stmt.target, acc, read_target=False)
        _expr_reads(stmt.value, acc.reads)
    elif isinstance(stmt, ReduceAssign):
        _target_access(stmt.target, acc, read_target=True)
        _expr_reads(stmt.value, acc.reads)
    elif isinstance(stmt, ForAll):
        acc.writes.add(stmt.meta["symbol"])
        acc.reads.add(stmt.domain.meta["symbol"])
        _expr_reads(stmt.domain.arg, acc.reads)
        _expr_reads(stmt.domain.filter, acc.reads)
    elif isinstance(stmt, FixedPoint):
        acc.reads.add(stmt.meta["flag"])
        acc.writes.add(stmt.meta["flag"])
        _expr_reads(stmt.convergence, acc.reads)
    elif isinstance(stmt, IterateInBFS):
        acc.writes.add(stmt.meta["symbol"])
        _expr_reads(stmt.root, acc.reads)
    elif isinstance(stmt, IterateInReverse):
        _expr_reads(stmt.filter, acc.reads)
    elif isinstance(stmt, (If, While, DoWhile)):
        _expr_reads(stmt.cond, acc.reads)
    elif isinstance(stmt, MinMaxAssign):
        for i, target in enumerate(stmt.targets):
            _target_access(target, acc, read_target=i == 0)
        for value in (*stmt.compare, *stmt.attached):
            _expr_reads(value, acc.reads)
    elif isinstance(stmt, CallStmt):
        _expr_reads(stmt.call, acc.reads)
        acc.writes.update(stmt.call.meta.get("properties", ()))
    elif isinstance(stmt, Return):
        _expr_reads(stmt.value, acc.reads)
    return acc


def graph_needs(node) -> set[str]:
    """CSR arrays a subtree dereferences."""
    needs: set[str] = set()
    for n in walk(node):
        if isinstance(n, Domain):
            if n.kind == "neighbors":
                needs |= {"offsets", "dests"}
            elif n.kind == "nodes_to":
                needs |= {"rev_offsets", "rev_srcs"}
        elif isinstance(n, MethodCall):
            if n.method in ("get_edge", "is_an_edge"):
                needs |= {"offsets", "dests"}
            elif n.method == "count_outNbrs":
                needs.add("offsets")
            elif n.method == "count_inNbrs":
                needs.add("rev_offsets")
            elif n.method in ("minWt", "maxWt"):
                needs.add("weights")
        elif isinstance(n, PropAccess):
            sym = n.meta.get("symbol")
            if sym is not None and sym.is_graph_alias:
                needs.add("weights")
        elif isinstance(n, IterateInReverse):
            needs |= {"offsets", "dests"}
    return needs


def child_statements(stmt: Stmt) -> list[Stmt]:
    if isinstance(stmt, Block):
        return list(stmt.stmts)
    if isinstance(stmt, (ForAll, FixedPoint, While, DoWhile, IterateInReverse)):
        return [stmt.body]
    if isinstance(stmt, IterateInBFS):
        return [stmt.body] + ([stmt.reverse] if stmt.reverse is not None else [])
    if isinstance(stmt, If):
        return [stmt.then] + ([stmt.orelse] if stmt.orelse is not None else [])
    return []


def is_host_loop(stmt: Stmt) -> bool:
    return (isinstance(stmt, (FixedPoint, While, DoWhile))
            or (isinstance(stmt, ForAll) and not stmt.parallel))


def is_whole_property_copy(stmt: Stmt) -> bool:
    return (isinstance(stmt, Assign) and isinstance(stmt.target, Var)
            and stmt.target.ty is not None and stmt.target.ty.is_property)


@dataclass
class _StmtInfo:
    stmt: Stmt
    index: int
    end: int = 0
    block: Block | None = None
    position: int = -1
    parent: Stmt | None = None


def _convergence_form(expr: Expr) -> tuple[Symbol | None, str]:
    def prop(e):
        sym = e.meta.get("symbol") if isinstance(e, Var) else None
        return sym if sym is not None and sym.kind == "node-property" else None

    if isinstance(expr, Unary) and expr.op == "!" and prop(expr.operand):
        return prop(expr.operand), "all-false"
    if prop(expr):
        return prop(expr), "all-true"
    if isinstance(expr, Binary) and expr.op in _EQUALITY:
        for side, other in ((expr.left, expr.right), (expr.right, expr.left)):
            if prop(side) and isinstance(other, Literal) and other.kind == "bool":
                truth = bool(other.value) == (expr.op == "==")
                return prop(side), "all-true" if truth else "all-false"
    return None, "expression"


# ── Analyzer ─────────────────────────────────────────────────────────────────

class ProgramAnalyzer:
    """Computes every analysis of the entry function of an AnnotatedProgram."""

    def __init__(self, program: AnnotatedProgram, debug: bool = False):
        self.program = program
        self.fn = program.entry
        self.debug = debug
        self.order: list[_StmtInfo] = []
        self.info: dict[int, _StmtInfo] = {}
        self._index_statements(self.fn.body, None, -1, None)
        self.direct = [direct_access(i.stmt) for i in self.order]
        self.decl_index: dict[Symbol, int] = {}
        for info in self.order:
            if isinstance(info.stmt, (Decl, ForAll, IterateInBFS)):
                self.decl_index.setdefault(info.stmt.meta["symbol"], info.index)

    def _log(self, message: str):
        if self.debug:
            print(f"[SEMANTIC] {message}", file=sys.stderr)

    def _index_statements(self, stmt: Stmt, block: Block | None, position: int,
                          parent: Stmt | None) -> None:
        info = _StmtInfo(stmt, len(self.order), block=block, position=position, parent=parent)
        self.order.append(info)
        self.info[id(stmt)] = info
        for i, child in enumerate(child_statements(stmt)):
            if isinstance(stmt, Block):
                self._index_statements(child, stmt, i, stmt)
            else:
                self._index_statements(child, None, -1, stmt)
        info.end = len(self.order) - 1

    def subtree(self, stmt: Stmt) -> list[_StmtInfo]:
        info = self.info[id(stmt)]
        return self.order[info.index:info.end + 1]

    def subtree_access(self, stmt: Stmt) -> _Access:
        acc = _Access()
        for info in self.subtree(stmt):
            acc.update(self.direct[info.index])
        return acc

    # ------------------------------------------------------------------
    # Regions
    # ------------------------------------------------------------------

    def find_regions(self) -> list[RegionInfo]:
        regions: list[RegionInfo] = []
        covered_until = -1
        for info in self.order:
            if info.index <= covered_until:
                continue
            stmt = info.stmt
            roots = []
            if isinstance(stmt, ForAll) and stmt.parallel:
                roots.append(("forall", stmt))
                covered_until = info.end
            elif isinstance(stmt, IterateInBFS):
                roots.append(("bfs", stmt))
                if stmt.reverse is not None:
                    roots.append(("reverse", stmt.reverse))
                covered_until = info.end
            elif is_whole_property_copy(stmt):
                roots.append(("copy", stmt))
            for kind, root in roots:
                rid = len(regions)
                regions.append(RegionInfo(rid, kind, f"{self.fn.name}_kernel_{rid}", root,
                                          root.span))
        return regions

    def region_statements(self, region: RegionInfo) -> list[_StmtInfo]:
        if region.kind == "bfs":
            return self.subtree(region.stmt.body)
        return self.subtree(region.stmt)

    def region_locals(self, region: RegionInfo) -> set[Symbol]:
        local: set[Symbol] = set()
        if region.kind in ("bfs", "reverse"):
            local.add(region.stmt.meta["symbol"])
        for info in self.region_statements(region):
            if isinstance(info.stmt, (Decl, ForAll)):
                local.add(info.stmt.meta["symbol"])
        return local

    def full_writes(self, region: RegionInfo) -> set[Symbol]:
        stmt = region.stmt
        if region.kind == "copy":
            return {stmt.target.meta["symbol"]}
        if region.kind != "forall" or stmt.domain.kind != "nodes" or stmt.domain.filter:
            return set()
        iterator = stmt.meta["symbol"]
        full = set()
        for s in stmt.body.stmts:
            if (isinstance(s, Assign) and isinstance(s.target, PropAccess)
                    and isinstance(s.target.obj, Var)
                    and s.target.obj.meta.get("symbol") is iterator):
                full.add(s.target.meta["symbol"])
        return full

    def enclosing_loops(self, stmt: Stmt) -> list[Stmt]:
        loops = []
        parent = self.info[id(stmt)].parent
        while parent is not None:
            if is_host_loop(parent):
                loops.append(parent)
            parent = self.info[id(parent)].parent
        return loops

    def live_after(self, sym: Symbol, region: RegionInfo) -> bool:
        if sym.param and sym.kind in ("node-property", "edge-property"):
            return True
        end = self.region_statements(region)[-1].index
        if any(sym in acc.reads for acc in self.direct[end + 1:]):
            return True
        return any(sym in self.subtree_access(loop).reads
                   for loop in self.enclosing_loops(region.stmt))

    # ------------------------------------------------------------------
    # Fixed points
    # ------------------------------------------------------------------

    def fixed_points(self, stmt_region: dict[int, int]) -> list[FixedPointInfo]:
        result = []
        for info in self.order:
            stmt = info.stmt
            if not isinstance(stmt, FixedPoint):
                continue
            prop, polarity = _convergence_form(stmt.convergence)
            fp = FixedPointInfo(stmt.flag, prop.name if prop else None, polarity, stmt)
            if prop is not None:
                converged = polarity == "all-true"
                for inner in self.subtree(stmt.body):
                    fp.fused_update_sites.extend(
                        self._sites(inner.stmt, prop, converged, stmt_region))
            result.append(fp)
        return result

    @staticmethod
    def _site_mode(value: Expr | None, converged: bool) -> str:
        if isinstance(value, Literal) and value.kind == "bool":
            return "never" if bool(value.value) == converged else "always"
        return "conditional"

    def _sites(self, stmt: Stmt, prop: Symbol, converged: bool,
               stmt_region: dict[int, int]) -> list[FusedSite]:
        region = stmt_region.get(id(stmt))
        sites = []
        if isinstance(stmt, (Assign, ReduceAssign)) and isinstance(stmt.target, PropAccess) \
                and stmt.target.meta["symbol"] is prop:
            mode = self._site_mode(stmt.value, converged) if isinstance(stmt, Assign) \
                else "conditional"
            sites.append(FusedSite(stmt, mode, region, 0, stmt.value))
        elif is_whole_property_copy(stmt) and stmt.target.meta["symbol"] is prop:
            sites.append(FusedSite(stmt, "conditional", region, 0, stmt.value))
        elif isinstance(stmt, MinMaxAssign):
            for i, target in enumerate(stmt.targets[1:], start=1):
                if isinstance(target, PropAccess) and target.meta["symbol"] is prop:
                    value = stmt.attached[i - 1]
                    sites.append(FusedSite(stmt, self._site_mode(value, converged), region,
                                           i, value))
        elif isinstance(stmt, CallStmt):
            for name, value in stmt.call.named:
                if name == prop.name:
                    sites.append(FusedSite(stmt, self._site_mode(value, converged), region,
                                           0, value))
        return sites

    # ------------------------------------------------------------------
    # Scopes and placement
    # ------------------------------------------------------------------

    def _host_statements(self, loop: Stmt, stmt_region: dict[int, int]) -> list[_StmtInfo]:
        return [info for info in self.subtree(loop)[1:] if id(info.stmt) not in stmt_region]

    def _promotable(self, sym: Symbol, loop: Stmt, stmt_region: dict[int, int]) -> bool:
        info = self.info[id(loop)]
        declared = self.decl_index.get(sym, -1)
        if info.index <= declared <= info.end:
            return False
        if isinstance(loop, FixedPoint):
            # the loop test only reads the fused flag
            header = {loop.meta["flag"]}
        else:
            header = self.direct[info.index].touched
        if sym in header:
            return False
        return not any(sym in self.direct[h.index].touched
                       for h in self._host_statements(loop, stmt_region))

    def _placement(self, sym: Symbol, scope: TransferScope, stmt_region: dict[int, int]):
        block, first, last = scope.block, scope.first, scope.last
        while True:
            owner = self.info[id(block)].parent
            if owner is None:
                break
            if isinstance(owner, Block):
                candidate = block
            elif is_host_loop(owner) and self._promotable(sym, owner, stmt_region):
                candidate = owner
            else:
                break
            cinfo = self.info[id(candidate)]
            block, first, last = cinfo.block, cinfo.position, cinfo.position
        return block, first, last

    def scopes(self, regions: list[RegionInfo], region_syms,
               stmt_region: dict[int, int]) -> list[TransferScope]:
        scopes: list[TransferScope] = []
        # statements that sit in a host block and start one or two regions
        owners: dict[int, list[int]] = {}
        for r in regions:
            owner = r.stmt
            if r.kind == "reverse":
                owner = self.info[id(r.stmt)].parent
            owners.setdefault(id(owner), []).append(r.id)

        for info in self.order:
            if isinstance(info.stmt, Block) and id(info.stmt) not in stmt_region:
                self._block_scopes(info.stmt, owners, region_syms, scopes)
        return scopes

    def _block_scopes(self, block: Block, owners: dict[int, list[int]], region_syms,
                      scopes: list[TransferScope]) -> None:
        run: list[int] = []
        run_syms: set[Symbol] = set()
        first = last = -1
        pending: list[_Access] = []

        def close():
            if run:
                cin = frozenset().union(*(self._names(region_syms[r][0]) for r in run))
                cout = frozenset().union(*(self._names(region_syms[r][1]) for r in run))
                scopes.append(TransferScope(tuple(run), cin, cout, block, first, last))

        for pos, stmt in enumerate(block.stmts):
            if id(stmt) in owners:
                ids = owners[id(stmt)]
                syms = set().union(*(region_syms[r][0] | region_syms[r][1] for r in ids))
                if run and all(not (acc.touched & (run_syms | syms)) for acc in pending):
                    run.extend(ids)
                    run_syms |= syms
                    last = pos
                else:
                    close()
                    run, run_syms, first, last = list(ids), set(syms), pos, pos
                pending = []
            elif any(id(s.stmt) in owners for s in self.subtree(stmt)):
                close()
                run, run_syms, pending = [], set(), []
            else:
                pending.append(self.subtree_access(stmt))
        close()

    @staticmethod
    def _names(symbols) -> frozenset[str]:
        return frozenset(s.name for s in symbols)

    # ------------------------------------------------------------------
    # Entry point
    # ------------------------------------------------------------------

    def run(self) -> Analyses:
        regions = self.find_regions()
        stmt_region: dict[int, int] = {}
        roots: dict[int, RegionInfo] = {}
        for r in regions:
            roots[id(r.stmt)] = r
            for info in self.region_statements(r):
                stmt_region[id(info.stmt)] = r.id

        fixed_points = self.fixed_points(stmt_region)
        flag_syms: dict[int, set[Symbol]] = {}
        reductions: list[ReductionInfo] = []
        for fp in fixed_points:
            flag = fp.stmt.meta["flag"]
            for rid in sorted({s.region for s in fp.fused_update_sites
                               if s.region is not None and s.mode != "never"}):
                if flag not in flag_syms.setdefault(rid, set()):
                    flag_syms[rid].add(flag)
                    reductions.append(ReductionInfo(fp.flag, ReduceOp.ANY.label, rid, True,
                                                    fp.stmt.span, stmt=fp.stmt))

        warnings: list[Diagnostic] = []
        region_syms: dict[int, tuple[set[Symbol], set[Symbol]]] = {}
        for r in regions:
            acc = _Access()
            stmts = self.region_statements(r)
            for info in stmts:
                acc.update(self.direct[info.index])
            local = self.region_locals(r)
            reads = {s for s in acc.reads - local if not s.is_graph_alias}
            writes = {s for s in acc.writes - local if not s.is_graph_alias}
            full = self.full_writes(r)
            cin = reads | (writes - full)
            cout = {s for s in writes if self.live_after(s, r)}
            for flag in flag_syms.get(r.id, ()):
                cin.add(flag)
                cout.add(flag)
            region_syms[r.id] = (cin, cout)
            r.copy_in = self._names(cin)
            r.copy_out = self._names(cout)
            r.device_only = self._names(local)
            r.full_writes = self._names(full)
            needs = set()
            for info in stmts:
                needs |= graph_needs(info.stmt) if not isinstance(info.stmt, Block) else set()
            if r.kind == "bfs":
                needs |= {"offsets", "dests"}
            r.graph_symbols = frozenset(needs)

            for info in stmts:
                stmt = info.stmt
                if isinstance(stmt, ReduceAssign):
                    target = stmt.target.meta["symbol"]
                    reductions.append(ReductionInfo(target.name, stmt.op.label, r.id, False,
                                                    stmt.span, atomic=target not in local,
                                                    stmt=stmt))
                elif (isinstance(stmt, Assign) and isinstance(stmt.target, Var)
                      and r.kind != "copy"):
                    target = stmt.target.meta["symbol"]
                    if target not in local and target.kind in ("scalar", "node", "edge"):
                        warnings.append(DataRaceWarning.at(stmt.span, target.name, r.id))
            self._log(f"region {r.id} ({r.kind}): in={sorted(r.copy_in)} "
                      f"out={sorted(r.copy_out)}")

        scopes = self.scopes(regions, region_syms, stmt_region)
        spans = self._spans(scopes, region_syms, stmt_region)
        reductions.sort(key=lambda red: (red.region, red.span.line if red.span else 0,
                                         red.span.column if red.span else 0,
                                         red.is_fixed_point_flag))
        transfers = TransferAnalysis(self.fn.name, regions, scopes, spans, stmt_region, roots)
        return Analyses(transfers, reductions, fixed_points, warnings)

    def _spans(self, scopes, region_syms, stmt_region) -> list[TransferSpan]:
        by_key: dict[tuple[int, int, int], dict] = {}
        symbol_by_name: dict[str, Symbol] = {}
        for cin, cout in region_syms.values():
            for s in cin | cout:
                symbol_by_name.setdefault(s.name, s)

        for scope in scopes:
            for direction, names in (("in", scope.copy_in), ("out", scope.copy_out)):
                for name in sorted(names):
                    sym = symbol_by_name[name]
                    block, first, last = self._placement(sym, scope, stmt_region)
                    key = (id(block), first, last)
                    entry = by_key.setdefault(key, {
                        "block": block, "first": first, "last": last,
                        "in": set(), "out": set(), "regions": set(),
                        "promoted": block is not scope.block,
                    })
                    entry[direction].add(name)
                    if entry["promoted"] and direction == "out":
                        # zero-trip loops must not copy back uninitialized device memory
                        entry["in"].add(name)
                    entry["regions"].update(scope.regions)

        spans = [TransferSpan(frozenset(e["in"]), frozenset(e["out"]), e["block"], e["first"],
                              e["last"], tuple(sorted(e["regions"])), e["promoted"])
                 for e in by_key.values()]
        spans.sort(key=lambda s: (self.info[id(s.block)].index, s.first, s.last))
        return spans


# ── Public API ───────────────────────────────────────────────────────────────

def analyze(program: AnnotatedProgram, debug: bool = False) -> Analyses:
    return ProgramAnalyzer(program, debug=debug).run()


def analyze_transfers(program: AnnotatedProgram) -> TransferAnalysis:
    return analyze(program).transfers


def detect_reductions(program: AnnotatedProgram) -> list[ReductionInfo]:
    return analyze(program).reductions


def fixed_point_info(program: AnnotatedProgram) -> list[FixedPointInfo]:
    return analyze(program).fixed_points


def data_race_warnings(program: AnnotatedProgram) -> list[Diagnostic]:
    return analyze(program).warnings


def analysis_report(analyses: Analyses, file: str = "<input>") -> str:
    """Deterministic YAML rendering of every analysis, for golden tests and the CLI."""
    t = analyses.transfers
    data = {
        "function": t.function,
        "regions": [{
            "id": r.id,
            "kind": r.kind,
            "kernel": r.kernel,
            "line": r.span.line,
            "copy_in": sorted(r.copy_in),
            "copy_out": sorted(r.copy_out),
            "device_only": sorted(r.device_only),
            "graph_symbols": sorted(r.graph_symbols),
        } for r in t.regions],
        "scopes": [{
            "regions": list(s.regions),
            "copy_in": sorted(s.copy_in),
            "copy_out": sorted(s.copy_out),
        } for s in t.scopes],
        "transfers": [{
            "line": s.block.stmts[s.first].span.line,
            "regions": list(s.regions),
            "promoted": s.promoted,
            "to_device": sorted(s.symbols_in),
            "to_host": sorted(s.symbols_out),
        } for s in t.spans],
        "reductions": [{
            "target": r.target,
            "operator": r.operator,
            "region": r.region,
            "fixed_point_flag": r.is_fixed_point_flag,
        } for r in analyses.reductions],
        "fixed_points": [{
            "flag": fp.flag,
            "property": fp.property,
            "polarity": fp.polarity,
            "line": fp.stmt.span.line,
            "fused_sites": [{"line": s.span.line, "mode": s.mode, "region": s.region}
                            for s in fp.fused_update_sites],
        } for fp in analyses.fixed_points],
        "warnings": [w.format() for w in analyses.warnings],
    }
    if file != "<input>":
        data["warnings"] = [w.format().replace("<input>", file, 1) for w in analyses.warnings]
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None)
