"""
codegen.py
==========
Backend-independent half of source generation.

``generate`` walks the entry function of an AnnotatedProgram once per backend.
The shared ``Emitter`` translates expressions and statements and decides where
transfers, launches and fused convergence stores go. Each backend subclass
(``backend_cuda``, ``backend_openacc``, ``backend_sycl``, ``backend_opencl``)
only supplies the text of its idioms: kernel wrappers, atomics, copies,
launches and the fixed prelude.

Naming
------
* Device copies carry ``CodegenConfig.device_var_prefix`` (``gpu_dist``).
  Device scalars live in one-element buffers and are read as ``gpu_x[0]``.
* CSR arrays keep the host struct field names: ``OA`` (offsets),
  ``edgeList`` (destinations), ``weight``, ``rev_OA`` and ``srcList``.
* Kernels are named ``<function>_kernel_<region id>``.
"""

from __future__ import annotations

import abc
import enum
import sys
from collections.abc import Iterator
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from constants import (
    DEFAULT_INDENT,
    DEFAULT_NUM_THREADS,
    DEVICE_VAR_PREFIX,
    INF_BY_TYPE,
    PRELUDE_BEGIN,
    PRELUDE_END,
)
from dsl_ast import (
    Assign,
    Binary,
    Block,
    CallStmt,
    Decl,
    DoWhile,
    DslType,
    Expr,
    FixedPoint,
    ForAll,
    If,
    IterateInBFS,
    IterateInReverse,
    Literal,
    MethodCall,
    MinMaxAssign,
    PropAccess,
    ReduceAssign,
    ReduceOp,
    Return,
    Stmt,
    Unary,
    Var,
    While,
    walk,
)
from errors import ConfigError, UnsupportedConstruct
from frontend import _BINARY_PREC, _PREC_REL, _PREC_UNARY
from semantic import (
    GRAPH_ARRAYS,
    Analyses,
    AnnotatedProgram,
    FixedPointInfo,
    FusedSite,
    RegionInfo,
    Symbol,
    TransferSpan,
    is_whole_property_copy,
)

# CSR array -> field name in the emitted graph struct
GRAPH_FIELDS = {
    "offsets": "OA",
    "dests": "edgeList",
    "weights": "weight",
    "rev_offsets": "rev_OA",
    "rev_srcs": "srcList",
}

# element count of each CSR array, in terms of the host locals V and E
GRAPH_LENGTHS = {
    "offsets": "V + 1",
    "dests": "E",
    "weights": "E",
    "rev_offsets": "V + 1",
    "rev_srcs": "E",
}

# names the emitted host code declares itself
RESERVED_NAMES = frozenset({
    "V", "E", "g", "start", "stop", "milliseconds", "status", "event", "program",
    "context", "device", "platform", "command_queue", "Q", "h", "i", "bfs_root",
    "bfs_finished", "hops_from_source", "level", "numBlocks", "threadsPerBlock",
    "NUM_THREADS", "global_size",
})

INTERNAL_TRANSFERS = frozenset({"bfs_finished"})


# ── Backends and configuration ───────────────────────────────────────────────

class BackendKind(enum.Enum):
    CUDA = "cuda"
    OPENACC = "openacc"
    SYCL = "sycl"
    OPENCL = "opencl"

    @property
    def label(self) -> str:
        return _BACKEND_LABELS[self]

    @property
    def extension(self) -> str:
        return "cu" if self is BackendKind.CUDA else "cpp"

    @classmethod
    def parse(cls, text: str) -> BackendKind:
        try:
            return cls(text.strip().lower())
        except ValueError:
            known = ", ".join(b.value for b in cls)
            raise ConfigError(f"unknown backend '{text}' (known: {known})") from None


_BACKEND_LABELS = {
    BackendKind.CUDA: "CUDA",
    BackendKind.OPENACC: "OpenACC",
    BackendKind.SYCL: "SYCL",
    BackendKind.OPENCL: "OpenCL",
}


@dataclass
class CodegenConfig:
    """Launch width, naming and formatting knobs shared by every backend."""

    # CUDA threads per block; SYCL and OpenCL global work size
    num_threads: int = DEFAULT_NUM_THREADS
    device_var_prefix: str = DEVICE_VAR_PREFIX
    float_atomics_emulation: bool = False
    indent: int = DEFAULT_INDENT

    def validate(self) -> CodegenConfig:
        if isinstance(self.num_threads, bool) or not isinstance(self.num_threads, int) \
                or self.num_threads <= 0:
            raise ConfigError(f"num_threads must be a positive integer, got {self.num_threads!r}")
        if isinstance(self.indent, bool) or not isinstance(self.indent, int) or self.indent < 0:
            raise ConfigError(f"indent must be a non-negative integer, got {self.indent!r}")
        if not isinstance(self.device_var_prefix, str) \
                or not self.device_var_prefix.isidentifier():
            raise ConfigError(f"device_var_prefix must be an identifier prefix, "
                              f"got {self.device_var_prefix!r}")
        if not isinstance(self.float_atomics_emulation, bool):
            raise ConfigError("float_atomics_emulation must be true or false")
        return self

    def for_backend(self, backend: BackendKind) -> CodegenConfig:
        """OpenCL has no native float atomics, so emulation is forced on."""
        if backend is BackendKind.OPENCL and not self.float_atomics_emulation:
            return replace(self, float_atomics_emulation=True)
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict | None) -> CodegenConfig:
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown codegen option(s): {', '.join(unknown)}")
        return cls(**data).validate()


def load_codegen_config(path: str | Path) -> CodegenConfig:
    try:
        with open(path, encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigError(f"no codegen config at {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping of codegen options")
    return CodegenConfig.from_dict(data)


# ── Output ───────────────────────────────────────────────────────────────────

@dataclass
class EmitUnit:
    """Generated files for one (program, backend) pair plus structural metadata."""

    name: str
    function: str
    backend: BackendKind
    files: list[tuple[str, str]]
    structure: dict = field(default_factory=dict)
    config: CodegenConfig = field(default_factory=CodegenConfig)

    @property
    def line_counts(self) -> dict[str, int]:
        return {name: len(text.splitlines()) for name, text in self.files}

    def body_line_count(self) -> int:
        """Non-blank lines outside the prelude markers, summed over all files."""
        count = 0
        for _, text in self.files:
            inside = False
            for line in text.splitlines():
                stripped = line.strip()
                if stripped == PRELUDE_BEGIN:
                    inside = True
                elif stripped == PRELUDE_END:
                    inside = False
                elif stripped and not inside:
                    count += 1
        return count

    def file(self, suffix: str) -> str:
        """Text of the first file whose name ends with *suffix*."""
        for name, text in self.files:
            if name.endswith(suffix):
                return text
        raise KeyError(suffix)

    @property
    def text(self) -> str:
        return "".join(text for _, text in self.files)

    def write(self, out_dir: str | Path) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, text in self.files:
            path = out / name
            path.write_text(text, encoding="utf-8")
            written.append(path)
        return written


class CodeWriter:
    """Indented line buffer; ``block`` opens a brace scope."""

    def __init__(self, indent: int = DEFAULT_INDENT):
        self.lines: list[str] = []
        self.level = 0
        self.unit = " " * indent

    def line(self, text: str = "") -> None:
        self.lines.append(f"{self.unit * self.level}{text}" if text else "")

    def raw(self, text: str) -> None:
        """Append preformatted lines at the current level."""
        for line in text.strip("\n").splitlines():
            self.line(line)

    @contextmanager
    def block(self, header: str = "", close: str = "}") -> Iterator[None]:
        self.line(f"{header} {{" if header else "{")
        self.level += 1
        try:
            yield
        finally:
            self.level -= 1
            self.line(close)

    @property
    def text(self) -> str:
        return "\n".join(self.lines) + "\n" if self.lines else ""


@dataclass(frozen=True)
class KernelParam:
    name: str
    ctype: str
    pointer: bool = True
    # argument text at the launch site
    host: str = ""

    @property
    def decl(self) -> str:
        return f"{self.ctype}* {self.name}" if self.pointer else f"{self.ctype} {self.name}"


@dataclass(frozen=True)
class Scope:
    device: bool = False
    region: RegionInfo | None = None
    # node index for properties named implicitly inside filters
    implicit: str | None = None
    # enclosing neighbor loops: (source text, iterator, edge variable)
    edges: tuple[tuple[str, str, str], ...] = ()
    depth: int = 0

    def inner(self, **changes) -> Scope:
        return replace(self, **changes)


# ── Emitter ──────────────────────────────────────────────────────────────────

_REDUCE_TEXT = {ReduceOp.SUM: "+=", ReduceOp.PRODUCT: "*="}


class Emitter(abc.ABC):
    """Shared translation of the entry function; backends fill in the idioms."""

    backend: BackendKind
    # statement that skips the rest of a region iteration
    skip = "return;"
    bool_type = "bool"
    # whether the BFS level flag moves through explicit copies
    explicit_flag_copies = True

    def __init__(self, program: AnnotatedProgram, analyses: Analyses,
                 cfg: CodegenConfig, name: str | None = None, debug: bool = False):
        self.program = program
        self.fn = program.entry
        self.analyses = analyses
        self.transfers = analyses.transfers
        self.cfg = cfg
        self.name = name or self.fn.name
        self.debug = debug
        self.kernels = CodeWriter(cfg.indent)
        self.structure: dict = {"kernels": [], "launches": [], "transfers": [],
                                "kernel_params": {}, "symbol_types": {}}
        self.graph = next((p.name for p in program.params if p.kind == "graph"), "g")
        self._taken = set(RESERVED_NAMES) | {s.name for s in program.symbols}
        self._locals = {r.id: self._region_locals(r) for r in self.transfers.regions}
        self.device_symbols = self._device_symbols()
        self.graph_arrays = [f for f in GRAPH_ARRAYS
                             if any(f in r.graph_symbols for r in self.transfers.regions)]
        self.has_bfs = any(r.kind == "bfs" for r in self.transfers.regions)
        self._host_arrays: list[list[str]] = []
        self._hoisted: set[int] = set()
        for name, sym in self.device_symbols.items():
            self.structure["symbol_types"][name] = sym.value_type.name

    def _log(self, message: str):
        if self.debug:
            print(f"[CODEGEN] {message}", file=sys.stderr)

    def unsupported(self, construct: str, node=None) -> UnsupportedConstruct:
        return UnsupportedConstruct(self.backend.label, construct,
                                    getattr(node, "span", None))

    # ------------------------------------------------------------------
    # Symbols
    # ------------------------------------------------------------------

    @staticmethod
    def _region_locals(region: RegionInfo) -> set[Symbol]:
        local = set()
        if region.kind in ("bfs", "reverse"):
            local.add(region.stmt.meta["symbol"])
        root = region.stmt.body if region.kind == "bfs" else region.stmt
        for node in walk(root):
            if isinstance(node, (Decl, ForAll)):
                local.add(node.meta["symbol"])
        return local

    @staticmethod
    def outside(region: RegionInfo) -> list[str]:
        """Host-declared symbols a region touches, in kernel parameter order."""
        return sorted(region.copy_in | region.copy_out | region.full_writes)

    def _device_symbols(self) -> dict[str, Symbol]:
        by_name: dict[str, Symbol] = {}
        for fp in self.analyses.fixed_points:
            by_name.setdefault(fp.flag, fp.stmt.meta["flag"])
        for region in self.transfers.regions:
            for node in walk(region.stmt):
                sym = node.meta.get("symbol")
                if isinstance(sym, Symbol):
                    by_name.setdefault(sym.name, sym)
        result = {}
        for region in self.transfers.regions:
            for name in self.outside(region):
                sym = by_name[name]
                if sym.kind in ("node-set", "graph"):
                    raise self.unsupported(f"{sym.kind} '{name}' inside a parallel region",
                                           region)
                result[name] = sym
        return dict(sorted(result.items()))

    def fresh(self, base: str) -> str:
        """A function-wide unique name derived from *base*."""
        name, i = base, 1
        while name in self._taken:
            name = f"{base}{i}"
            i += 1
        self._taken.add(name)
        return name

    def loop_name(self, base: str) -> str:
        """A name for a block-scoped loop index that shadows no program symbol."""
        name, i = base, 1
        while name in self._taken:
            name = f"{base}{i}"
            i += 1
        return name

    # ------------------------------------------------------------------
    # Types and names
    # ------------------------------------------------------------------

    def ctype(self, ty: DslType) -> str:
        if ty.is_property:
            ty = ty.elem
        if ty.name in ("node", "edge"):
            return "int"
        if ty.name == "bool":
            return self.bool_type
        if ty.name in ("int", "long", "float", "double"):
            return ty.name
        raise self.unsupported(f"type {ty}")

    def param_decl(self, sym: Symbol) -> str:
        if sym.kind == "graph":
            return f"graph& {sym.name}"
        if sym.kind in ("node-property", "edge-property"):
            return f"{self.ctype(sym.type)}* {sym.name}"
        if sym.kind == "node-set":
            return f"std::set<int>& {sym.name}"
        return f"{self.ctype(sym.type)} {sym.name}"

    def return_type(self) -> str:
        ty = self.program.return_type
        return "void" if ty is None or ty.name == "void" else self.ctype(ty)

    def device_array(self, name: str) -> str:
        return f"{self.cfg.device_var_prefix}{name}"

    def device_scalar(self, name: str) -> str:
        return f"{self.cfg.device_var_prefix}{name}[0]"

    def device_graph(self, field_name: str) -> str:
        return f"{self.cfg.device_var_prefix}{GRAPH_FIELDS[field_name]}"

    def graph_ref(self, field_name: str, device: bool) -> str:
        if device:
            return self.device_graph(field_name)
        return f"{self.graph}.{GRAPH_FIELDS[field_name]}"

    def level_ref(self) -> str:
        return self.device_array("level")

    def length(self, sym: Symbol) -> str | None:
        """Element count of a device buffer; None for one-element scalars."""
        if sym.kind == "node-property":
            return "V"
        if sym.kind == "edge-property":
            return "E"
        return None

    def size_expr(self, sym: Symbol) -> str:
        ctype = self.ctype(sym.type)
        n = self.length(sym)
        return f"sizeof({ctype}) * {n}" if n else f"sizeof({ctype})"

    @staticmethod
    def host_pointer(sym: Symbol) -> str:
        return sym.name if sym.kind in ("node-property", "edge-property") else f"&{sym.name}"

    def is_local(self, sym: Symbol, scope: Scope) -> bool:
        return scope.region is not None and sym in self._locals[scope.region.id]

    def array(self, sym: Symbol, scope: Scope) -> str:
        if sym.is_graph_alias:
            return self.graph_ref("weights", scope.device)
        return self.device_array(sym.name) if scope.device else sym.name

    def value(self, sym: Symbol, scope: Scope) -> str:
        if sym.kind in ("node-property", "edge-property"):
            return self.array(sym, scope)
        if scope.device and not self.is_local(sym, scope):
            return self.device_scalar(sym.name)
        return sym.name

    # ------------------------------------------------------------------
    # Expressions
    # ------------------------------------------------------------------

    def expr(self, e: Expr, scope: Scope, hint: DslType | None = None) -> str:
        return self._expr(e, scope, hint, 0)

    def _expr(self, e: Expr, scope: Scope, hint: DslType | None, min_prec: int) -> str:
        if isinstance(e, Literal):
            return self.literal(e, hint)
        if isinstance(e, Var):
            sym = e.meta["symbol"]
            if e.meta.get("implicit"):
                return f"{self.array(sym, scope)}[{scope.implicit}]"
            return self.value(sym, scope)
        if isinstance(e, PropAccess):
            sym = e.meta["symbol"]
            return f"{self.array(sym, scope)}[{self._expr(e.obj, scope, None, 0)}]"
        if isinstance(e, MethodCall):
            return self.method_call(e, scope)
        if isinstance(e, Unary):
            operand = self._expr(e.operand, scope, hint, _PREC_UNARY)
            if isinstance(e.operand, Unary):
                operand = f"({operand})"
            text, prec = f"{e.op}{operand}", _PREC_UNARY
        elif isinstance(e, Binary):
            prec = _BINARY_PREC[e.op]
            left_min = prec + 1 if prec == _PREC_REL else prec
            left = self._expr(e.left, scope, _hint(e.right, hint), left_min)
            right = self._expr(e.right, scope, _hint(e.left, hint), prec + 1)
            text = f"{left} {e.op} {right}"
        else:
            raise self.unsupported(f"expression {type(e).__name__}", e)
        return f"({text})" if prec < min_prec else text

    def literal(self, e: Literal, hint: DslType | None) -> str:
        if e.kind == "inf":
            name = hint.name if hint is not None and hint.name in INF_BY_TYPE else "int"
            return _INF_TEXT[name]
        if e.kind == "bool":
            return "true" if e.value else "false"
        if e.kind == "float":
            text = repr(float(e.value))
            return text if any(c in text for c in ".eE") else f"{text}.0"
        return str(e.value)

    def method_call(self, e: MethodCall, scope: Scope) -> str:
        method = e.method
        args = [self.expr(a, scope) for a in e.args]
        device = scope.device
        if method == "num_nodes":
            return "V" if device else f"{self.graph}.num_nodes()"
        if method == "num_edges":
            return f"{self.graph_ref('offsets', True)}[V]" if device \
                else f"{self.graph}.num_edges()"
        if method in ("count_outNbrs", "count_inNbrs"):
            offsets = self.graph_ref("offsets" if method == "count_outNbrs" else "rev_offsets",
                                     device)
            return f"({offsets}[{args[0]} + 1] - {offsets}[{args[0]}])"
        if method == "get_edge":
            for source, iterator, edge in reversed(scope.edges):
                if source == args[0] and iterator == args[1]:
                    return edge
            if not device:
                return f"{self.graph}.getEdge({args[0]}, {args[1]})"
            return (f"findEdge({self.graph_ref('offsets', True)}, "
                    f"{self.graph_ref('dests', True)}, {args[0]}, {args[1]})")
        if method == "is_an_edge":
            if not device:
                return f"{self.graph}.isEdge({args[0]}, {args[1]})"
            return (f"isEdge({self.graph_ref('offsets', True)}, "
                    f"{self.graph_ref('dests', True)}, {args[0]}, {args[1]})")
        if method in ("minWt", "maxWt"):
            if device:
                raise self.unsupported(f"{method}() inside a parallel region", e)
            return f"{self.graph}.{method}()"
        raise self.unsupported(f"{method}() as an expression", e)

    # ------------------------------------------------------------------
    # Statements
    # ------------------------------------------------------------------

    def stmt(self, s: Stmt, scope: Scope, w: CodeWriter) -> None:
        handler = getattr(self, f"_stmt_{type(s).__name__}", None)
        if handler is None:
            raise self.unsupported(type(s).__name__, s)
        handler(s, scope, w)

    def block(self, block: Block, scope: Scope, w: CodeWriter) -> None:
        if scope.device:
            for s in block.stmts:
                self.stmt(s, scope, w)
            return
        self._host_arrays.append([])
        for i, s in enumerate(block.stmts):
            for span in sorted(self.transfers.spans_before(block, i), key=lambda sp: -sp.last):
                self.open_span(span, block, w)
            self.stmt(s, scope, w)
            for span in sorted(self.transfers.spans_after(block, i), key=lambda sp: -sp.first):
                self.close_span(span, w)
        arrays = self._host_arrays.pop()
        if not (block.stmts and isinstance(block.stmts[-1], Return)):
            for name in arrays:
                w.line(f"free({name});")

    def branch(self, s: Stmt, scope: Scope, w: CodeWriter) -> None:
        if isinstance(s, Block):
            self.block(s, scope, w)
        else:
            self.stmt(s, scope, w)

    def _stmt_Block(self, s: Block, scope: Scope, w: CodeWriter) -> None:
        with w.block():
            self.block(s, scope, w)

    def _stmt_Decl(self, s: Decl, scope: Scope, w: CodeWriter) -> None:
        sym = s.meta["symbol"]
        if sym.kind in ("node-property", "edge-property"):
            if scope.device:
                raise self.unsupported("property declaration inside a parallel region", s)
            if id(s) not in self._hoisted:
                w.line(self.host_array_decl(sym))
                self._host_arrays[-1].append(sym.name)
            return
        if sym.kind == "node-set":
            if scope.device:
                raise self.unsupported("node set inside a parallel region", s)
            w.line(f"std::set<int> {sym.name};")
            return
        if sym.kind == "graph":
            raise self.unsupported("graph declaration", s)
        init = self.expr(s.init, scope, sym.type) if s.init is not None else None
        if id(s) in self._hoisted:
            if init is not None:
                w.line(f"{sym.name} = {init};")
            return
        suffix = f" = {init}" if init is not None else ""
        w.line(f"{self.ctype(sym.type)} {sym.name}{suffix};")

    def host_array_decl(self, sym: Symbol) -> str:
        ctype = self.ctype(sym.type)
        count = "V" if sym.kind == "node-property" else "E"
        return f"{ctype}* {sym.name} = ({ctype}*)malloc(sizeof({ctype}) * {count});"

    def _stmt_Assign(self, s: Assign, scope: Scope, w: CodeWriter) -> None:
        region = self.transfers.region_of(s)
        if region is not None and not scope.device:
            self.emit_region(region, w)
            return
        if is_whole_property_copy(s):
            raise self.unsupported("whole-property copy inside a parallel region", s)
        ty = s.target.meta["symbol"].value_type
        target = self.expr(s.target, scope)
        w.line(f"{target} = {self.expr(s.value, scope, ty)};")
        self.fused_stores(s, scope, w, {0: target})

    def _stmt_ReduceAssign(self, s: ReduceAssign, scope: Scope, w: CodeWriter) -> None:
        sym = s.target.meta["symbol"]
        ty = sym.value_type
        target = self.expr(s.target, scope)
        value = "1" if s.op is ReduceOp.COUNT else self.expr(s.value, scope, ty)
        info = self.analyses.reduction(s) if scope.device else None
        if info is not None and info.atomic and s.op in (ReduceOp.ALL, ReduceOp.ANY):
            # idempotent store: every racing writer stores the same value
            if s.op is ReduceOp.ALL:
                w.line(f"if (!({value})) {target} = false;")
            else:
                w.line(f"if ({value}) {target} = true;")
        elif info is not None and info.atomic:
            self.atomic_update(info.operator, target, value, sym, scope, w)
        else:
            w.line(self.plain_reduce(s.op, target, value))
        self.fused_stores(s, scope, w, {0: target})

    @staticmethod
    def plain_reduce(op: ReduceOp, target: str, value: str) -> str:
        if op is ReduceOp.COUNT:
            return f"{target}++;"
        if op is ReduceOp.ALL:
            return f"{target} = {target} && ({value});"
        if op is ReduceOp.ANY:
            return f"{target} = {target} || ({value});"
        return f"{target} {_REDUCE_TEXT[op]} {value};"

    def _stmt_MinMaxAssign(self, s: MinMaxAssign, scope: Scope, w: CodeWriter) -> None:
        first = s.targets[0].meta["symbol"]
        ty = first.value_type
        targets = {i: self.expr(t, scope) for i, t in enumerate(s.targets)}
        current = self.expr(s.compare[0], scope, ty)
        candidate = self.fresh(f"{first.name}_new")
        w.line(f"{self.ctype(ty)} {candidate} = {self.expr(s.compare[1], scope, ty)};")
        op = ">" if s.kind == "Min" else "<"
        with w.block(f"if ({current} {op} {candidate})"):
            if scope.device:
                self.atomic_minmax(s.kind, targets[0], candidate, first, scope, w)
            else:
                w.line(f"{targets[0]} = {candidate};")
            for i, (target, value) in enumerate(zip(s.targets[1:], s.attached), start=1):
                value_ty = target.meta["symbol"].value_type
                w.line(f"{targets[i]} = {self.expr(value, scope, value_ty)};")
            self.fused_stores(s, scope, w, targets)

    def _stmt_CallStmt(self, s: CallStmt, scope: Scope, w: CodeWriter) -> None:
        call = s.call
        if call.method != "attachNodeProperty":
            raise self.unsupported(f"{call.method}() as a statement", s)
        if scope.device:
            raise self.unsupported("attachNodeProperty inside a parallel region", s)
        t = self.loop_name("t")
        with w.block(f"for (int {t} = 0; {t} < V; {t}++)"):
            for sym, (_, value) in zip(call.meta["properties"], call.named):
                w.line(f"{sym.name}[{t}] = {self.expr(value, scope, sym.value_type)};")
            for fp, site in self.analyses.fused_sites(s):
                self.fused_line(fp, site, f"{fp.property}[{t}]", scope, w)

    def _stmt_Return(self, s: Return, scope: Scope, w: CodeWriter) -> None:
        if scope.device:
            raise self.unsupported("return inside a parallel region", s)
        value = None
        if s.value is not None:
            value = self.expr(s.value, scope, self.program.return_type)
            if not isinstance(s.value, (Literal, Var)):
                result = self.fresh("result")
                w.line(f"{self.return_type()} {result} = {value};")
                value = result
        for arrays in self._host_arrays:
            for name in arrays:
                w.line(f"free({name});")
        self.teardown(w)
        w.line(f"return {value};" if value is not None else "return;")

    def _stmt_If(self, s: If, scope: Scope, w: CodeWriter) -> None:
        with w.block(f"if ({self.expr(s.cond, scope)})"):
            self.branch(s.then, scope, w)
        if s.orelse is not None:
            with w.block("else"):
                self.branch(s.orelse, scope, w)

    def _stmt_While(self, s: While, scope: Scope, w: CodeWriter) -> None:
        if scope.device:
            raise self.unsupported("while inside a parallel region", s)
        with w.block(f"while ({self.expr(s.cond, scope)})"):
            self.block(s.body, scope, w)

    def _stmt_DoWhile(self, s: DoWhile, scope: Scope, w: CodeWriter) -> None:
        if scope.device:
            raise self.unsupported("do-while inside a parallel region", s)
        with w.block("do", close=f"}} while ({self.expr(s.cond, scope)});"):
            self.block(s.body, scope, w)

    def _stmt_FixedPoint(self, s: FixedPoint, scope: Scope, w: CodeWriter) -> None:
        if scope.device:
            raise self.unsupported("fixedPoint inside a parallel region", s)
        fp = self.analyses.fixed_point(s)
        if not fp.fused:
            raise self.unsupported("fixedPoint over a general convergence expression", s)
        with w.block(f"while (!{s.flag})"):
            w.line(f"{s.flag} = true;")
            self.block(s.body, scope, w)

    def _stmt_ForAll(self, s: ForAll, scope: Scope, w: CodeWriter) -> None:
        region = self.transfers.region_of(s)
        if region is not None and not scope.device:
            self.emit_region(region, w)
            return
        domain = s.domain
        var = s.var
        inner = scope
        prologue = None
        if domain.kind == "nodes":
            header = f"for (int {var} = 0; {var} < V; {var}++)"
        elif domain.kind == "container":
            if scope.device:
                raise self.unsupported("node-set loop inside a parallel region", s)
            header = f"for (int {var} : {domain.source})"
        else:
            source = self.expr(domain.arg, scope)
            forward = domain.kind == "neighbors"
            offsets = self.graph_ref("offsets" if forward else "rev_offsets", scope.device)
            targets = self.graph_ref("dests" if forward else "rev_srcs", scope.device)
            edge = "edge" if scope.depth == 0 else f"edge{scope.depth}"
            header = f"for (int {edge} = {offsets}[{source}]; {edge} < {offsets}[{source} + 1]; " \
                     f"{edge}++)"
            prologue = f"int {var} = {targets}[{edge}];"
            edges = scope.edges + ((source, var, edge),) if forward else scope.edges
            inner = scope.inner(depth=scope.depth + 1, edges=edges)
        with w.block(header):
            if prologue:
                w.line(prologue)
            if s.meta.get("bfs_children") and scope.device \
                    and scope.region.kind in ("bfs", "reverse"):
                w.line(f"if ({self.level_ref()}[{var}] != hops_from_source + 1) continue;")
            if domain.filter is not None:
                cond = self.expr(domain.filter, inner.inner(implicit=var))
                w.line(f"if (!({cond})) continue;")
            self.block(s.body, inner, w)

    def _stmt_IterateInBFS(self, s: IterateInBFS, scope: Scope, w: CodeWriter) -> None:
        if scope.device:
            raise self.unsupported("iterateInBFS inside a parallel region", s)
        forward = self.transfers.region_of(s)
        reverse = self.transfers.region_of(s.reverse) if s.reverse is not None else None
        with w.block():
            w.line(f"int bfs_root = {self.expr(s.root, scope)};")
            self.init_levels(w)
            w.line("int hops_from_source = 0;")
            w.line(f"{self.bool_type} bfs_finished;")
            with w.block("do", close="} while (!bfs_finished);"):
                w.line("bfs_finished = true;")
                self.bfs_flag_to_device(w)
                self.emit_region(forward, w)
                self.bfs_flag_to_host(w)
                w.line("hops_from_source++;")
            if reverse is not None:
                with w.block("while (hops_from_source > 0)"):
                    w.line("hops_from_source--;")
                    self.emit_region(reverse, w)

    def _stmt_IterateInReverse(self, s: IterateInReverse, scope: Scope, w: CodeWriter) -> None:
        raise self.unsupported("iterateInReverse outside iterateInBFS", s)

    # ------------------------------------------------------------------
    # Fused convergence flags
    # ------------------------------------------------------------------

    def fused_stores(self, stmt: Stmt, scope: Scope, w: CodeWriter,
                     targets: dict[int, str]) -> None:
        for fp, site in self.analyses.fused_sites(stmt):
            self.fused_line(fp, site, targets.get(site.target_index), scope, w)

    def fused_line(self, fp: FixedPointInfo, site: FusedSite, written: str | None,
                   scope: Scope, w: CodeWriter) -> None:
        if site.mode == "never":
            return
        flag = self.value(fp.stmt.meta["flag"], scope)
        if site.mode == "always":
            w.line(f"{flag} = false;")
        elif fp.converged_value:
            w.line(f"if (!{written}) {flag} = false;")
        else:
            w.line(f"if ({written}) {flag} = false;")

    # ------------------------------------------------------------------
    # Regions
    # ------------------------------------------------------------------

    def thread_var(self, region: RegionInfo) -> str:
        if region.kind in ("bfs", "reverse"):
            return region.stmt.meta["symbol"].name
        if region.kind == "copy":
            return self.loop_name("v")
        if region.stmt.domain.kind == "nodes":
            return region.stmt.var
        return self.loop_name("t")

    def kernel_params(self, region: RegionInfo) -> list[KernelParam]:
        params = [KernelParam("V", "int", False, "V")]
        for f in GRAPH_ARRAYS:
            if f in region.graph_symbols:
                name = self.device_graph(f)
                params.append(KernelParam(name, "int", True, name))
        if region.kind in ("bfs", "reverse"):
            params.append(KernelParam(self.level_ref(), "int", True, self.level_ref()))
            params.append(KernelParam("hops_from_source", "int", False, "hops_from_source"))
        if region.kind == "bfs":
            name = self.device_array("bfs_finished")
            params.append(KernelParam(name, self.bool_type, True, name))
        for name in self.outside(region):
            sym = self.device_symbols[name]
            params.append(KernelParam(self.device_array(name), self.ctype(sym.type), True,
                                      self.device_array(name)))
        return params

    def region_body(self, region: RegionInfo, tv: str, w: CodeWriter) -> None:
        """Per-thread body of *region*; the thread variable *tv* is already bound."""
        scope = Scope(device=True, region=region)
        stmt = region.stmt
        if region.kind == "copy":
            written = f"{self.device_array(stmt.target.meta['symbol'].name)}[{tv}]"
            w.line(f"{written} = {self.device_array(stmt.value.meta['symbol'].name)}[{tv}];")
            for fp, site in self.analyses.fused_sites(stmt):
                self.fused_line(fp, site, written, scope, w)
            return
        if region.kind in ("bfs", "reverse"):
            level = self.level_ref()
            w.line(f"if ({level}[{tv}] != hops_from_source) {self.skip}")
            if region.kind == "bfs":
                offsets = self.graph_ref("offsets", True)
                nbr = self.loop_name("bfs_nbr")
                with w.block(f"for (int edge = {offsets}[{tv}]; edge < {offsets}[{tv} + 1]; "
                             f"edge++)"):
                    w.line(f"int {nbr} = {self.graph_ref('dests', True)}[edge];")
                    with w.block(f"if ({level}[{nbr}] == -1)"):
                        w.line(f"{level}[{nbr}] = hops_from_source + 1;")
                        w.line(f"{self.device_scalar('bfs_finished')} = false;")
            elif stmt.filter is not None:
                cond = self.expr(stmt.filter, scope.inner(implicit=tv))
                w.line(f"if (!({cond})) {self.skip}")
            self.block(stmt.body, scope, w)
            return
        domain = stmt.domain
        if domain.kind == "container":
            raise self.unsupported("parallel forall over a node set", stmt)
        if domain.kind != "nodes":
            forward = domain.kind == "neighbors"
            source = self.expr(domain.arg, scope)
            offsets = self.graph_ref("offsets" if forward else "rev_offsets", True)
            targets = self.graph_ref("dests" if forward else "rev_srcs", True)
            w.line(f"if ({tv} >= {offsets}[{source} + 1] - {offsets}[{source}]) {self.skip}")
            w.line(f"int edge = {offsets}[{source}] + {tv};")
            w.line(f"int {stmt.var} = {targets}[edge];")
            edges = ((source, stmt.var, "edge"),) if forward else ()
            scope = scope.inner(depth=1, edges=edges)
        if domain.filter is not None:
            cond = self.expr(domain.filter, scope.inner(implicit=stmt.var))
            w.line(f"if (!({cond})) {self.skip}")
        self.block(stmt.body, scope, w)

    def record_launch(self, region: RegionInfo, params: list[KernelParam] | None = None):
        if region.kernel not in self.structure["kernels"]:
            self.structure["kernels"].append(region.kernel)
        self.structure["launches"].append(region.kernel)
        if params is not None:
            self.structure["kernel_params"][region.kernel] = [p.name for p in params]
        self._log(f"region {region.id} ({region.kind}) -> {region.kernel}")

    def record_transfer(self, direction: str, name: str) -> None:
        self.structure["transfers"].append({"direction": direction, "symbol": name})

    # ------------------------------------------------------------------
    # Transfers
    # ------------------------------------------------------------------

    def open_span(self, span: TransferSpan, block: Block, w: CodeWriter) -> None:
        for name in sorted(span.symbols_in):
            self.copy_to_device(self.device_symbols[name], w)
            self.record_transfer("H2D", name)

    def close_span(self, span: TransferSpan, w: CodeWriter) -> None:
        for name in sorted(span.symbols_out):
            self.copy_to_host(self.device_symbols[name], w)
            self.record_transfer("D2H", name)

    # ------------------------------------------------------------------
    # Assembly
    # ------------------------------------------------------------------

    def function(self) -> CodeWriter:
        w = CodeWriter(self.cfg.indent)
        params = ", ".join(self.param_decl(p) for p in self.program.params)
        with w.block(f"{self.return_type()} {self.fn.name}({params})"):
            w.line(f"int V = {self.graph}.num_nodes();")
            w.line(f"int E = {self.graph}.num_edges();")
            self.setup(w)
            self.block(self.fn.body, Scope(), w)
            stmts = self.fn.body.stmts
            if not (stmts and isinstance(stmts[-1], Return)):
                self.teardown(w)
        return w

    def generate(self) -> EmitUnit:
        function = self.function()
        files = self.assemble(function)
        self._log(f"{self.backend.label}: {len(self.structure['kernels'])} kernel(s), "
                  f"{len(self.structure['transfers'])} transfer statement(s)")
        return EmitUnit(self.name, self.fn.name, self.backend, files, self.structure, self.cfg)

    def file_name(self, extension: str | None = None) -> str:
        return f"{self.name}_{self.backend.value}.{extension or self.backend.extension}"

    @staticmethod
    def prelude(*parts: str) -> str:
        body = "\n\n".join(p.strip("\n") for p in parts if p.strip())
        return f"{PRELUDE_BEGIN}\n{body}\n{PRELUDE_END}\n"

    # ------------------------------------------------------------------
    # Backend hooks
    # ------------------------------------------------------------------

    @abc.abstractmethod
    def setup(self, w: CodeWriter) -> None:
        """Device initialization, graph copies, device allocations, timer start."""

    @abc.abstractmethod
    def teardown(self, w: CodeWriter) -> None:
        """Timer stop and device release; emitted before every return."""

    @abc.abstractmethod
    def emit_region(self, region: RegionInfo, w: CodeWriter) -> None:
        """Kernel definition (where the backend splits code) and its launch."""

    @abc.abstractmethod
    def copy_to_device(self, sym: Symbol, w: CodeWriter) -> None: ...

    @abc.abstractmethod
    def copy_to_host(self, sym: Symbol, w: CodeWriter) -> None: ...

    @abc.abstractmethod
    def atomic_update(self, operator: str, target: str, value: str, sym: Symbol,
                      scope: Scope, w: CodeWriter) -> None: ...

    @abc.abstractmethod
    def atomic_minmax(self, kind: str, target: str, candidate: str, sym: Symbol,
                      scope: Scope, w: CodeWriter) -> None: ...

    @abc.abstractmethod
    def init_levels(self, w: CodeWriter) -> None: ...

    @abc.abstractmethod
    def bfs_flag_to_device(self, w: CodeWriter) -> None: ...

    @abc.abstractmethod
    def bfs_flag_to_host(self, w: CodeWriter) -> None: ...

    @abc.abstractmethod
    def assemble(self, function: CodeWriter) -> list[tuple[str, str]]: ...

    # ------------------------------------------------------------------
    # Structural contract, shared with structural_check
    # ------------------------------------------------------------------

    @classmethod
    @abc.abstractmethod
    def idiom_token(cls, construct: str, type_name: str, scalar: bool, target: str,
                    cfg: CodegenConfig) -> str | None:
        """Text that must appear for one reduction, Min/Max or flag construct."""

    @classmethod
    @abc.abstractmethod
    def transfer_events(cls, text: str, cfg: CodegenConfig) -> list[tuple[int, str, str]]:
        """(offset, H2D|D2H, name) for every transfer statement in *text*."""

    @classmethod
    @abc.abstractmethod
    def split_violations(cls, unit: EmitUnit) -> list[str]:
        """Kernel/host layout problems of *unit*."""


def _hint(other: Expr, fallback: DslType | None) -> DslType | None:
    ty = other.ty
    if ty is not None and ty.name in INF_BY_TYPE:
        return ty
    return fallback


_INF_TEXT = {
    "int": str(INF_BY_TYPE["int"]),
    "long": f"{INF_BY_TYPE['long']}L",
    "float": "(FLT_MAX / 2)",
    "double": "(DBL_MAX / 2)",
}


# ── Host prelude shared by every backend ─────────────────────────────────────

HOST_INCLUDES = """
#include <algorithm>
#include <chrono>
#include <cfloat>
#include <climits>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>
"""

HOST_GRAPH = """
struct graph {
    int V = 0;
    int E = 0;
    int* OA = nullptr;
    int* edgeList = nullptr;
    int* weight = nullptr;
    int* rev_OA = nullptr;
    int* srcList = nullptr;

    int num_nodes() const { return V; }
    int num_edges() const { return E; }
    int minWt() const { return E ? *std::min_element(weight, weight + E) : 0; }
    int maxWt() const { return E ? *std::max_element(weight, weight + E) : 0; }

    // adjacency lists are sorted, so lookups are binary searches
    int getEdge(int u, int w) const {
        int lo = OA[u], hi = OA[u + 1];
        while (lo < hi) {
            int mid = lo + (hi - lo) / 2;
            if (edgeList[mid] < w) lo = mid + 1; else hi = mid;
        }
        return lo < OA[u + 1] && edgeList[lo] == w ? lo : -1;
    }
    bool isEdge(int u, int w) const { return getEdge(u, w) >= 0; }
};

// "u v [w]" per line; "# nodes: N" and "# directed: 0|1" headers.
// Undirected unless declared directed; duplicate pairs keep the smallest weight.
inline graph loadGraph(const char* path) {
    std::ifstream in(path);
    std::vector<std::tuple<int, int, int>> edges;
    int n = 0;
    bool directed = false;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream fields(line);
        if (line.rfind("#", 0) == 0) {
            std::string hash, key;
            int value = 0;
            fields >> hash >> key >> value;
            if (key == "nodes:") n = std::max(n, value);
            if (key == "directed:") directed = value != 0;
            continue;
        }
        int u, v, w = 1;
        if (!(fields >> u >> v)) continue;
        fields >> w;
        edges.emplace_back(u, v, w);
        n = std::max(n, std::max(u, v) + 1);
    }
    if (!directed) {
        size_t m = edges.size();
        for (size_t i = 0; i < m; i++) {
            auto [u, v, w] = edges[i];
            edges.emplace_back(v, u, w);
        }
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end(),
                            [](const auto& a, const auto& b) {
                                return std::get<0>(a) == std::get<0>(b)
                                    && std::get<1>(a) == std::get<1>(b);
                            }),
                edges.end());
    graph g;
    g.V = n;
    g.E = (int)edges.size();
    g.OA = (int*)calloc(n + 1, sizeof(int));
    g.rev_OA = (int*)calloc(n + 1, sizeof(int));
    g.edgeList = (int*)malloc(sizeof(int) * g.E);
    g.weight = (int*)malloc(sizeof(int) * g.E);
    g.srcList = (int*)malloc(sizeof(int) * g.E);
    for (int i = 0; i < g.E; i++) {
        auto [u, v, w] = edges[i];
        g.OA[u + 1]++;
        g.rev_OA[v + 1]++;
        g.edgeList[i] = v;
        g.weight[i] = w;
    }
    for (int v = 0; v < n; v++) {
        g.OA[v + 1] += g.OA[v];
        g.rev_OA[v + 1] += g.rev_OA[v];
    }
    std::vector<int> fill(g.rev_OA, g.rev_OA + n);
    for (int i = 0; i < g.E; i++) {
        g.srcList[fill[std::get<1>(edges[i])]++] = std::get<0>(edges[i]);
    }
    return g;
}
"""

HOST_TIMER_START = "auto start = std::chrono::high_resolution_clock::now();"

HOST_TIMER_STOP = """
auto stop = std::chrono::high_resolution_clock::now();
double milliseconds = std::chrono::duration<double, std::milli>(stop - start).count();
printf("Time: %.6f ms\\n", milliseconds);
"""


# ── Entry point ──────────────────────────────────────────────────────────────

def emitter_class(backend: BackendKind) -> type[Emitter]:
    if backend is BackendKind.CUDA:
        from backend_cuda import CudaEmitter
        return CudaEmitter
    if backend is BackendKind.OPENACC:
        from backend_openacc import OpenAccEmitter
        return OpenAccEmitter
    if backend is BackendKind.SYCL:
        from backend_sycl import SyclEmitter
        return SyclEmitter
    from backend_opencl import OpenClEmitter
    return OpenClEmitter


def generate(program: AnnotatedProgram, analyses: Analyses, backend: BackendKind | str,
             cfg: CodegenConfig | None = None, name: str | None = None,
             debug: bool = False) -> EmitUnit:
    """Emit *program* for *backend*.

    Parameters
    ----------
    program : AnnotatedProgram
        Output of ``semantic.type_check``.
    analyses : Analyses
        ``semantic.analyze`` of the same program.
    backend : BackendKind or str
    cfg : CodegenConfig, optional
        Defaults to ``CodegenConfig()``; OpenCL forces float atomics emulation.
    name : str, optional
        File stem (``<name>_<backend>.<ext>``); defaults to the function name.

    Raises
    ------
    UnsupportedConstruct
        When the program uses a construct the backend has no template for.
    """
    if isinstance(backend, str):
        backend = BackendKind.parse(backend)
    cfg = (cfg or CodegenConfig()).validate().for_backend(backend)
    return emitter_class(backend)(program, analyses, cfg, name=name, debug=debug).generate()
