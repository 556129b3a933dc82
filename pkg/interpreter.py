"""
interpreter.py
==============
Tree-walking executor for annotated programs over a ``CsrGraph``.

Sequential mode visits every domain in ascending order and is deterministic.
Parallel mode runs each parallel region (outermost ``forall`` and every BFS
level) on a thread pool owned by the call; reductions and Min/Max updates take
a lock, filters of parallel loops are evaluated on a snapshot before the
iterations start.

Arithmetic follows C: integer ``/`` and ``%`` truncate toward zero and any
division by zero raises ``InterpreterError``.
"""

from __future__ import annotations

import contextlib
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import psutil

from constants import FIXED_POINT_CAP_BASE, FIXED_POINT_CAP_PER_NODE, INF_BY_TYPE
from csr import CsrGraph
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
    If,
    IterateInBFS,
    Literal,
    MethodCall,
    MinMaxAssign,
    PropAccess,
    ReduceAssign,
    ReduceOp,
    Return,
    Span,
    Stmt,
    Unary,
    Var,
    While,
)
from errors import InterpreterError, NonTermination
from semantic import (
    Analyses,
    AnnotatedProgram,
    FixedPointInfo,
    Symbol,
    analyze,
    is_whole_property_copy,
)

_DTYPES = {
    "int": np.int64,
    "long": np.int64,
    "node": np.int64,
    "edge": np.int64,
    "float": np.float64,
    "double": np.float64,
    "bool": np.bool_,
}


def dtype_for(ty: DslType):
    return _DTYPES[ty.name]


class _Inf:
    """INF before it meets a concrete numeric type."""

    def __repr__(self) -> str:
        return "INF"


INF = _Inf()


def _inf_for(ty: DslType | None):
    name = ty.name if ty is not None else "int"
    if name in ("node", "edge", "inf"):
        name = "int"
    return INF_BY_TYPE.get(name, INF_BY_TYPE["int"])


def coerce(value, ty: DslType):
    """Convert *value* to the Python representation of DSL type *ty*."""
    if value is INF:
        value = _inf_for(ty)
    if ty.name in ("float", "double"):
        return float(value)
    if ty.name == "bool":
        return bool(value)
    if ty.name in ("int", "long", "node", "edge"):
        return int(value)
    return value


def c_divide(a, b, integral: bool, span: Span | None):
    if b == 0:
        raise InterpreterError("division by zero", span)
    if integral:
        q = abs(a) // abs(b)
        return q if (a >= 0) == (b > 0) else -q
    return a / b


def c_remainder(a, b, span: Span | None):
    if b == 0:
        raise InterpreterError("division by zero", span)
    r = abs(a) % abs(b)
    return r if a >= 0 else -r


# ── Results ──────────────────────────────────────────────────────────────────

@dataclass
class BfsContext:
    root: int
    level: np.ndarray
    level_order: list[np.ndarray] = field(default_factory=list)

    @property
    def hops(self) -> int:
        return len(self.level_order) - 1


def bfs_levels(graph: CsrGraph, root: int) -> BfsContext:
    """Level-synchronous BFS: one pass per level until a pass assigns nothing."""
    if not 0 <= root < graph.n:
        raise InterpreterError(f"BFS root {root} is not a node of a {graph.n}-node graph")
    level = np.full(graph.n, -1, dtype=np.int64)
    level[root] = 0
    frontier = np.array([root], dtype=np.int64)
    order = [frontier]
    current = 0
    while True:
        ranges = [graph.dests[graph.offsets[v]:graph.offsets[v + 1]] for v in frontier]
        candidates = np.unique(np.concatenate(ranges)) if ranges else np.zeros(0, np.int64)
        fresh = candidates[level[candidates] == -1]
        if len(fresh) == 0:
            break
        current += 1
        level[fresh] = current
        frontier = fresh
        order.append(fresh)
    level.setflags(write=False)
    return BfsContext(root, level, order)


@dataclass
class PropertyStore:
    n: int
    properties: dict[str, np.ndarray] = field(default_factory=dict)
    scalars: dict[str, object] = field(default_factory=dict)
    return_value: object = None

    def as_lines(self) -> list[str]:
        """``name<TAB>node<TAB>value`` per property element, then ``name<TAB>value``."""
        lines = []
        for name in sorted(self.properties):
            values = self.properties[name].tolist()
            lines.extend(f"{name}\t{v}\t{_format(x)}" for v, x in enumerate(values))
        for name in sorted(self.scalars):
            lines.append(f"{name}\t{_format(self.scalars[name])}")
        if self.return_value is not None:
            lines.append(f"return\t{_format(self.return_value)}")
        return lines


def _format(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple, frozenset)):
        return ",".join(str(v) for v in sorted(value))
    return str(value)


@dataclass
class TransferAudit:
    """Records reads of symbols a region did not receive through its copy-in set."""

    violations: list[str] = field(default_factory=list)
    regions_entered: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


# ── Environment ──────────────────────────────────────────────────────────────

class Env:
    __slots__ = ("vars", "parent", "implicit")

    def __init__(self, parent: Env | None = None, implicit: int | None = None):
        self.vars: dict[Symbol, object] = {}
        self.parent = parent
        self.implicit = implicit if implicit is not None or parent is None else parent.implicit

    def lookup(self, sym: Symbol):
        env = self
        while env is not None:
            if sym in env.vars:
                return env.vars[sym]
            env = env.parent
        raise InterpreterError(f"'{sym.name}' has no value", sym.span)

    def assign(self, sym: Symbol, value) -> None:
        env = self
        while env is not None:
            if sym in env.vars:
                env.vars[sym] = value
                return
            env = env.parent
        self.vars[sym] = value

    def declare(self, sym: Symbol, value) -> None:
        self.vars[sym] = value


class _ReturnSignal(Exception):
    def __init__(self, value):
        self.value = value


# ── Interpreter ──────────────────────────────────────────────────────────────

class Interpreter:
    """Executes the entry function of an AnnotatedProgram.

    Parameters
    ----------
    program : AnnotatedProgram
        Output of ``semantic.type_check``.
    graph : CsrGraph
        Graph bound to the function's Graph parameter.
    mode : str
        ``"seq"`` or ``"par"``.
    threads : int, optional
        Worker count for parallel mode; defaults to the physical core count.
    """

    def __init__(self, program: AnnotatedProgram, graph: CsrGraph, mode: str = "seq",
                 threads: int | None = None, max_iterations: int | None = None,
                 audit: TransferAudit | None = None, debug: bool = False,
                 analyses: Analyses | None = None):
        if mode not in ("seq", "par"):
            raise InterpreterError(f"unknown mode '{mode}' (expected seq or par)")
        self.program = program
        self.graph = graph
        self.mode = mode
        self.threads = threads or psutil.cpu_count(logical=False) or 1
        self.cap = max_iterations or FIXED_POINT_CAP_PER_NODE * graph.n + FIXED_POINT_CAP_BASE
        self.audit = audit
        self.debug = debug
        self.analyses = analyses or analyze(program)
        self.transfers = self.analyses.transfers
        self.lock = threading.RLock()
        self.pool: ThreadPoolExecutor | None = None
        self.bfs_stack: list[BfsContext] = []
        # id(fixedPoint stmt) -> a non-converging write happened this iteration
        self.unconverged: dict[int, bool] = {}
        self.fused = {}
        for fp in self.analyses.fixed_points:
            for site in fp.fused_update_sites:
                self.fused.setdefault(id(site.stmt), []).append((fp, site))
        self.allowed: frozenset[str] | None = None
        self.region_id: int | None = None

    def _log(self, message: str):
        if self.debug:
            print(f"[INTERP] {message}", file=sys.stderr)

    # ------------------------------------------------------------------
    # Entry
    # ------------------------------------------------------------------

    def run(self, args: dict) -> PropertyStore:
        root = Env()
        for sym in self.program.params:
            root.declare(sym, self.bind_argument(sym, args))
        unknown = set(args) - {p.name for p in self.program.params}
        if unknown:
            raise InterpreterError(f"unknown argument(s): {', '.join(sorted(unknown))}")

        store = PropertyStore(self.graph.n)
        self._log(f"running {self.program.name} on {self.graph!r} ({self.mode})")
        try:
            if self.mode == "par":
                self.pool = ThreadPoolExecutor(max_workers=self.threads,
                                               thread_name_prefix="graphdsl")
            try:
                self.exec_block(self.program.entry.body, root, new_scope=False)
            except _ReturnSignal as ret:
                store.return_value = ret.value
        finally:
            if self.pool is not None:
                self.pool.shutdown(wait=True)
                self.pool = None

        for sym, value in root.vars.items():
            if sym.kind == "node-property":
                store.properties[sym.name] = value
            elif sym.kind in ("scalar", "node"):
                store.scalars[sym.name] = value
        return store

    def bind_argument(self, sym: Symbol, args: dict):
        g = self.graph
        if sym.kind == "graph":
            return g
        if sym.kind == "edge-property":
            if sym.name in args:
                return self._array_argument(sym, args[sym.name], g.m)
            return g.weights.copy()
        if sym.kind == "node-property":
            if sym.name in args:
                return self._array_argument(sym, args[sym.name], g.n)
            return np.zeros(g.n, dtype=dtype_for(sym.value_type))
        if sym.name not in args:
            raise InterpreterError(f"unbound argument '{sym.name}'", sym.span)
        value = args[sym.name]
        if sym.kind == "node-set":
            if isinstance(value, str):
                value = range(g.n) if value == "all" else [int(v) for v in value.split(",") if v]
            nodes = frozenset(int(v) for v in value)
            bad = [v for v in nodes if not 0 <= v < g.n]
            if bad:
                raise InterpreterError(f"'{sym.name}' contains non-node {min(bad)}", sym.span)
            return nodes
        if isinstance(value, str):
            value = _parse_scalar(value, sym)
        value = coerce(value, sym.type)
        if sym.kind == "node" and not 0 <= value < g.n:
            raise InterpreterError(f"'{sym.name}' = {value} is not a node of the graph",
                                   sym.span)
        return value

    @staticmethod
    def _array_argument(sym: Symbol, value, length: int) -> np.ndarray:
        array = np.array(value, dtype=dtype_for(sym.value_type))
        if array.shape != (length,):
            raise InterpreterError(f"'{sym.name}' needs {length} values, got {array.shape}",
                                   sym.span)
        return array

    # ------------------------------------------------------------------
    # Audit
    # ------------------------------------------------------------------

    def _read(self, sym: Symbol) -> None:
        if self.allowed is None or sym.is_graph_alias or sym.name in self.allowed:
            return
        self.audit.violations.append(
            f"region {self.region_id}: '{sym.name}' read without being copied in")

    @contextlib.contextmanager
    def _region(self, region):
        if self.audit is None or region is None or self.allowed is not None:
            yield
            return
        self.audit.regions_entered += 1
        self.allowed = region.copy_in | region.device_only
        self.region_id = region.id
        try:
            yield
        finally:
            self.allowed = None
            self.region_id = None

    def _locked(self, atomic: bool):
        if self.pool is not None and atomic:
            return self.lock
        return contextlib.nullcontext()

    # ------------------------------------------------------------------
    # Statements
    # ------------------------------------------------------------------

    def exec_block(self, block: Block, env: Env, new_scope: bool = True) -> None:
        scope = Env(env) if new_scope else env
        for stmt in block.stmts:
            self.exec(stmt, scope)

    def exec(self, stmt: Stmt, env: Env) -> None:
        getattr(self, f"_exec_{type(stmt).__name__}")(stmt, env)

    def _exec_Block(self, stmt: Block, env: Env) -> None:
        self.exec_block(stmt, env)

    def _exec_Decl(self, stmt: Decl, env: Env) -> None:
        sym = stmt.meta["symbol"]
        if sym.kind == "node-property":
            value = np.zeros(self.graph.n, dtype=dtype_for(sym.value_type))
        elif sym.kind == "edge-property":
            value = np.zeros(self.graph.m, dtype=dtype_for(sym.value_type))
        elif sym.kind == "node-set":
            value = frozenset()
        elif stmt.init is not None:
            value = coerce(self.eval(stmt.init, env), sym.type)
        else:
            value = coerce(0, sym.type)
        env.declare(sym, value)

    def _element(self, target: PropAccess, env: Env,
                 read: bool = True) -> tuple[np.ndarray, int]:
        sym = target.meta["symbol"]
        if read:
            self._read(sym)
        array = env.lookup(sym)
        index = self.eval(target.obj, env)
        if not 0 <= index < len(array):
            raise InterpreterError(f"'{sym.name}' accessed on out-of-range element {index}",
                                   target.span)
        return array, index

    def _store(self, target: Expr, value, env: Env) -> None:
        sym = target.meta["symbol"]
        if isinstance(target, PropAccess):
            array, index = self._element(target, env, read=False)
            array[index] = coerce(value, sym.value_type)
        else:
            env.assign(sym, coerce(value, sym.type))

    def _load(self, target: Expr, env: Env):
        if isinstance(target, PropAccess):
            array, index = self._element(target, env)
            return array[index].item()
        sym = target.meta["symbol"]
        self._read(sym)
        return env.lookup(sym)

    def _note_fused(self, stmt: Stmt, env: Env, written: dict[int, object]) -> None:
        for fp, site in self.fused.get(id(stmt), ()):
            if site.target_index in written and bool(written[site.target_index]) \
                    != fp.converged_value:
                self.unconverged[id(fp.stmt)] = True

    def _exec_Assign(self, stmt: Assign, env: Env) -> None:
        if is_whole_property_copy(stmt):
            with self._region(self.transfers.region_of(stmt)):
                source = stmt.value.meta["symbol"]
                self._read(source)
                target = env.lookup(stmt.target.meta["symbol"])
                np.copyto(target, env.lookup(source))
            if id(stmt) in self.fused:
                for fp, _ in self.fused[id(stmt)]:
                    if np.any(target != fp.converged_value):
                        self.unconverged[id(fp.stmt)] = True
            return
        value = self.eval(stmt.value, env)
        self._store(stmt.target, value, env)
        if id(stmt) in self.fused:
            self._note_fused(stmt, env, {0: value})

    def _exec_ReduceAssign(self, stmt: ReduceAssign, env: Env) -> None:
        value = self.eval(stmt.value, env) if stmt.value is not None else 1
        target = stmt.target
        ty = target.ty
        reduction = self.analyses.reduction(stmt)
        with self._locked(reduction is None or reduction.atomic):
            old = self._load(target, env)
            if stmt.op is ReduceOp.COUNT or stmt.op is ReduceOp.SUM:
                new = _inf_aware(old, ty) + _inf_aware(value, ty)
            elif stmt.op is ReduceOp.PRODUCT:
                new = _inf_aware(old, ty) * _inf_aware(value, ty)
            elif stmt.op is ReduceOp.ALL:
                new = bool(old) and bool(value)
            else:
                new = bool(old) or bool(value)
            self._store(target, new, env)
        if id(stmt) in self.fused:
            self._note_fused(stmt, env, {0: new})

    def _exec_MinMaxAssign(self, stmt: MinMaxAssign, env: Env) -> None:
        subject = stmt.targets[0]
        ty = subject.ty
        with self._locked(True):
            a = _inf_aware(self.eval(stmt.compare[0], env), ty)
            b = _inf_aware(self.eval(stmt.compare[1], env), ty)
            best = min(a, b) if stmt.kind == "Min" else max(a, b)
            current = self._load(subject, env)
            improves = best < current if stmt.kind == "Min" else best > current
            if not improves:
                return
            attached = [self.eval(v, env) for v in stmt.attached]
            self._store(subject, best, env)
            written = {0: best}
            for i, (target, value) in enumerate(zip(stmt.targets[1:], attached), start=1):
                self._store(target, value, env)
                written[i] = value
        if id(stmt) in self.fused:
            self._note_fused(stmt, env, written)

    def _exec_CallStmt(self, stmt: CallStmt, env: Env) -> None:
        self.eval(stmt.call, env)
        if id(stmt) in self.fused:
            for fp, site in self.fused[id(stmt)]:
                value = dict(stmt.call.named)[fp.property]
                if bool(self.eval(value, env)) != fp.converged_value:
                    self.unconverged[id(fp.stmt)] = True

    def _exec_Return(self, stmt: Return, env: Env) -> None:
        value = self.eval(stmt.value, env) if stmt.value is not None else None
        if value is not None and self.program.return_type is not None:
            value = coerce(value, self.program.return_type)
        raise _ReturnSignal(value)

    def _exec_If(self, stmt: If, env: Env) -> None:
        if self.eval(stmt.cond, env):
            self.exec_block(stmt.then, env)
        elif stmt.orelse is not None:
            self.exec_block(stmt.orelse, env)

    def _exec_While(self, stmt: While, env: Env) -> None:
        while self.eval(stmt.cond, env):
            self.exec_block(stmt.body, env)

    def _exec_DoWhile(self, stmt: DoWhile, env: Env) -> None:
        while True:
            self.exec_block(stmt.body, env)
            if not self.eval(stmt.cond, env):
                break

    # ------------------------------------------------------------------
    # Loops
    # ------------------------------------------------------------------

    def _domain_elements(self, stmt: ForAll, env: Env) -> list[int]:
        domain: Domain = stmt.domain
        g = self.graph
        source = domain.meta["symbol"]
        self._read(source)
        if domain.kind == "nodes":
            return list(range(g.n))
        if domain.kind == "container":
            return sorted(env.lookup(source))
        v = self.eval(domain.arg, env)
        if not 0 <= v < g.n:
            raise InterpreterError(f"{domain.kind}({v}) on a {g.n}-node graph", domain.span)
        if domain.kind == "nodes_to":
            return g.rev_srcs[g.rev_offsets[v]:g.rev_offsets[v + 1]].tolist()
        nbrs = g.dests[g.offsets[v]:g.offsets[v + 1]]
        if stmt.meta.get("bfs_children") and self.bfs_stack:
            level = self.bfs_stack[-1].level
            nbrs = nbrs[level[nbrs] == level[v] + 1]
        return nbrs.tolist()

    def _passes(self, stmt: ForAll, element: int, env: Env) -> bool:
        if stmt.domain.filter is None:
            return True
        scope = Env(env, implicit=element)
        scope.declare(stmt.meta["symbol"], element)
        return bool(self.eval(stmt.domain.filter, scope))

    def _iteration(self, body: Block, sym: Symbol, element: int, env: Env) -> None:
        scope = Env(env)
        scope.declare(sym, element)
        self.exec_block(body, scope, new_scope=False)

    def _parallel(self, elements: list[int], body: Block, sym: Symbol, env: Env) -> None:
        if not elements:
            return
        chunk = max(1, len(elements) // (self.threads * 4))
        batches = [elements[i:i + chunk] for i in range(0, len(elements), chunk)]

        def work(batch):
            for element in batch:
                self._iteration(body, sym, element, env)

        for future in [self.pool.submit(work, b) for b in batches]:
            future.result()

    def _exec_ForAll(self, stmt: ForAll, env: Env) -> None:
        sym = stmt.meta["symbol"]
        region = self.transfers.region_of(stmt)
        with self._region(region):
            elements = self._domain_elements(stmt, env)
            if region is not None and self.pool is not None:
                selected = [e for e in elements if self._passes(stmt, e, env)]
                self._parallel(selected, stmt.body, sym, env)
                return
            for element in elements:
                if self._passes(stmt, element, env):
                    self._iteration(stmt.body, sym, element, env)

    def _exec_FixedPoint(self, stmt: FixedPoint, env: Env) -> None:
        fp: FixedPointInfo = self.analyses.fixed_point(stmt)
        flag = stmt.meta["flag"]
        iteration = 0
        while True:
            iteration += 1
            if iteration > self.cap:
                raise NonTermination(f"fixedPoint on '{fp.flag}' did not converge within "
                                     f"{self.cap} iterations", stmt.span)
            self.unconverged[id(stmt)] = False
            self.exec_block(stmt.body, env)
            converged = not self.unconverged[id(stmt)] and self._holds_everywhere(stmt, env)
            env.assign(flag, converged)
            if converged:
                self._log(f"fixedPoint '{fp.flag}' converged after {iteration} iteration(s)")
                return

    def _holds_everywhere(self, stmt: FixedPoint, env: Env) -> bool:
        for v in range(self.graph.n):
            if not self.eval(stmt.convergence, Env(env, implicit=v)):
                return False
        return True

    def _exec_IterateInBFS(self, stmt: IterateInBFS, env: Env) -> None:
        root = self.eval(stmt.root, env)
        ctx = bfs_levels(self.graph, root)
        sym = stmt.meta["symbol"]
        self.bfs_stack.append(ctx)
        self._log(f"BFS from {root}: {ctx.hops + 1} level(s)")
        try:
            with self._region(self.transfers.region_of(stmt)):
                for nodes in ctx.level_order:
                    self._level(nodes.tolist(), stmt.body, sym, env)
            if stmt.reverse is not None:
                rev = stmt.reverse
                with self._region(self.transfers.region_of(rev)):
                    for nodes in reversed(ctx.level_order):
                        selected = nodes.tolist()
                        if rev.filter is not None:
                            selected = [v for v in selected if self._reverse_passes(rev, sym, v,
                                                                                     env)]
                        self._level(selected, rev.body, sym, env)
        finally:
            self.bfs_stack.pop()

    def _reverse_passes(self, rev, sym: Symbol, v: int, env: Env) -> bool:
        scope = Env(env, implicit=v)
        scope.declare(sym, v)
        return bool(self.eval(rev.filter, scope))

    def _level(self, nodes: list[int], body: Block, sym: Symbol, env: Env) -> None:
        if self.pool is not None:
            self._parallel(nodes, body, sym, env)
            return
        for v in nodes:
            self._iteration(body, sym, v, env)

    # ------------------------------------------------------------------
    # Expressions
    # ------------------------------------------------------------------

    def eval(self, expr: Expr, env: Env):
        return getattr(self, f"_eval_{type(expr).__name__}")(expr, env)

    def _eval_Literal(self, expr: Literal, env: Env):
        return INF if expr.kind == "inf" else expr.value

    def _eval_Var(self, expr: Var, env: Env):
        sym = expr.meta["symbol"]
        self._read(sym)
        if expr.meta.get("implicit"):
            return env.lookup(sym)[env.implicit].item()
        return env.lookup(sym)

    def _eval_PropAccess(self, expr: PropAccess, env: Env):
        array, index = self._element(expr, env)
        return array[index].item()

    def _eval_Unary(self, expr: Unary, env: Env):
        value = self.eval(expr.operand, env)
        if expr.op == "!":
            return not value
        return -_inf_aware(value, expr.ty)

    def _eval_Binary(self, expr: Binary, env: Env):
        op = expr.op
        if op == "&&":
            return bool(self.eval(expr.left, env)) and bool(self.eval(expr.right, env))
        if op == "||":
            return bool(self.eval(expr.left, env)) or bool(self.eval(expr.right, env))
        left = self.eval(expr.left, env)
        right = self.eval(expr.right, env)
        if left is INF or right is INF:
            other = expr.right if left is INF else expr.left
            left = _inf_aware(left, other.ty)
            right = _inf_aware(right, other.ty)
        if op == "+":
            result = left + right
        elif op == "-":
            result = left - right
        elif op == "*":
            result = left * right
        elif op == "/":
            result = c_divide(left, right, expr.ty.is_integral, expr.span)
        elif op == "%":
            result = c_remainder(left, right, expr.span)
        elif op == "==":
            return left == right
        elif op == "!=":
            return left != right
        elif op == "<":
            return left < right
        elif op == "<=":
            return left <= right
        elif op == ">":
            return left > right
        elif op == ">=":
            return left >= right
        else:
            raise InterpreterError(f"unknown operator '{op}'", expr.span)
        return float(result) if expr.ty.is_float else result

    def _eval_MethodCall(self, expr: MethodCall, env: Env):
        g = self.graph
        method = expr.method
        if method == "attachNodeProperty":
            for sym, (_, value_expr) in zip(expr.meta["properties"], expr.named):
                value = coerce(self.eval(value_expr, env), sym.value_type)
                env.lookup(sym).fill(value)
            return None
        args = [self.eval(a, env) for a in expr.args]
        for a in args:
            if not 0 <= a < g.n:
                raise InterpreterError(f"{method}: {a} is not a node", expr.span)
        if method == "num_nodes":
            return g.n
        if method == "num_edges":
            return g.m
        if method == "count_outNbrs":
            return g.out_degree(args[0])
        if method == "count_inNbrs":
            return g.in_degree(args[0])
        if method == "is_an_edge":
            return g.edge_id(args[0], args[1]) >= 0
        if method == "get_edge":
            eid = g.edge_id(args[0], args[1])
            if eid < 0:
                raise InterpreterError(f"no edge ({args[0]}, {args[1]})", expr.span)
            return eid
        if method == "minWt":
            return int(g.weights.min()) if g.m else 0
        if method == "maxWt":
            return int(g.weights.max()) if g.m else 0
        raise InterpreterError(f"unknown graph method '{method}'", expr.span)


def _inf_aware(value, ty: DslType | None):
    return _inf_for(ty) if value is INF else value


def _parse_scalar(text: str, sym: Symbol):
    if sym.type.name == "bool":
        lowered = text.strip().lower()
        if lowered in ("1", "true", "yes"):
            return True
        if lowered in ("0", "false", "no"):
            return False
        raise InterpreterError(f"'{sym.name}' expects a bool, got '{text}'", sym.span)
    try:
        return float(text) if sym.type.is_float else int(text)
    except ValueError:
        raise InterpreterError(f"'{sym.name}' expects {sym.type}, got '{text}'",
                               sym.span) from None


def run(program: AnnotatedProgram, graph: CsrGraph, args: dict | None = None,
        mode: str = "seq", threads: int | None = None, max_iterations: int | None = None,
        audit: TransferAudit | None = None, debug: bool = False) -> PropertyStore:
    """Execute *program* on *graph* and return the final property and scalar state."""
    interpreter = Interpreter(program, graph, mode=mode, threads=threads,
                              max_iterations=max_iterations, audit=audit, debug=debug)
    return interpreter.run(dict(args or {}))
