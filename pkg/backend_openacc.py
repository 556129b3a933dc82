"""
backend_openacc.py
==================
OpenACC emitter. There is no kernel/host split: each parallel region becomes a
``#pragma acc parallel loop`` over the nodes inside the host function, and each
transfer span becomes a structured ``#pragma acc data`` block. Program
properties and scalars keep their host names on the device; the CSR arrays are
unpacked into prefixed locals that stay resident for the whole call.
"""

from __future__ import annotations

import re

from codegen import (
    GRAPH_FIELDS,
    GRAPH_LENGTHS,
    HOST_GRAPH,
    HOST_INCLUDES,
    HOST_TIMER_START,
    HOST_TIMER_STOP,
    BackendKind,
    CodegenConfig,
    CodeWriter,
    Emitter,
    EmitUnit,
    Scope,
)
from dsl_ast import Block, Decl
from semantic import GRAPH_ARRAYS, RegionInfo, Symbol, TransferSpan

ACC_HELPERS = r"""
#include <openacc.h>

#pragma acc routine seq
inline int findEdge(int* OA, int* edgeList, int u, int w) {
    int lo = OA[u], hi = OA[u + 1];
    while (lo < hi) {
        int mid = lo + (hi - lo) / 2;
        if (edgeList[mid] < w) lo = mid + 1; else hi = mid;
    }
    return lo < OA[u + 1] && edgeList[lo] == w ? lo : -1;
}

#pragma acc routine seq
inline bool isEdge(int* OA, int* edgeList, int u, int w) {
    return findEdge(OA, edgeList, u, w) >= 0;
}
"""

# reduction operator -> OpenACC reduction clause operator
_REDUCTION_CLAUSE = {"Sum": "+", "Count": "+", "Product": "*", "All": "&&", "Any": "||"}

_CLAUSE = re.compile(r"\b(copyin|copyout|copy)\(([^)]*)\)")
_UPDATE = re.compile(r"#pragma acc update (device|self)\(([^)]*)\)")


class OpenAccEmitter(Emitter):
    backend = BackendKind.OPENACC
    skip = "continue;"
    explicit_flag_copies = False

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # names resident on the device in each open data block
        self._present: list[set[str]] = []

    def device_array(self, name: str) -> str:
        return name

    def device_scalar(self, name: str) -> str:
        return name

    def section(self, sym: Symbol) -> str:
        n = self.length(sym)
        return f"{sym.name}[0:{n}]" if n else sym.name

    def _graph_sections(self, fields) -> list[str]:
        return [f"{self.device_graph(f)}[0:{GRAPH_LENGTHS[f]}]" for f in fields]

    # ------------------------------------------------------------------
    # Function frame
    # ------------------------------------------------------------------

    def setup(self, w: CodeWriter) -> None:
        for f in self.graph_arrays:
            w.line(f"int* {self.device_graph(f)} = {self.graph_ref(f, False)};")
        if self.graph_arrays:
            w.line(f"#pragma acc enter data copyin("
                   f"{', '.join(self._graph_sections(self.graph_arrays))})")
            for f in self.graph_arrays:
                self.record_transfer("H2D", GRAPH_FIELDS[f])
        if self.has_bfs:
            w.line(f"int* {self.level_ref()} = (int*)malloc(sizeof(int) * V);")
            w.line(f"#pragma acc enter data create({self.level_ref()}[0:V])")
        w.line(HOST_TIMER_START)

    def teardown(self, w: CodeWriter) -> None:
        w.raw(HOST_TIMER_STOP)
        if self.graph_arrays:
            w.line(f"#pragma acc exit data delete("
                   f"{', '.join(self._graph_sections(self.graph_arrays))})")
        if self.has_bfs:
            w.line(f"#pragma acc exit data delete({self.level_ref()}[0:V])")
            w.line(f"free({self.level_ref()});")

    # ------------------------------------------------------------------
    # Data blocks
    # ------------------------------------------------------------------

    def open_span(self, span: TransferSpan, block: Block, w: CodeWriter) -> None:
        # declarations inside the data block are hoisted so they outlive its braces
        for stmt in block.stmts[span.first:span.last + 1]:
            if isinstance(stmt, Decl) and id(stmt) not in self._hoisted:
                sym = stmt.meta["symbol"]
                if sym.kind in ("node-property", "edge-property"):
                    w.line(self.host_array_decl(sym))
                    self._host_arrays[-1].append(sym.name)
                elif sym.kind != "node-set":
                    w.line(f"{self.ctype(sym.type)} {sym.name};")
                else:
                    continue
                self._hoisted.add(id(stmt))
        both = span.symbols_in & span.symbols_out
        clauses = []
        for clause, names in (("copy", both), ("copyin", span.symbols_in - both),
                              ("copyout", span.symbols_out - both)):
            if names:
                sections = [self.section(self.device_symbols[n]) for n in sorted(names)]
                clauses.append(f"{clause}({', '.join(sections)})")
        for name in sorted(span.symbols_in):
            self.record_transfer("H2D", name)
        if clauses:
            w.line(f"#pragma acc data {' '.join(clauses)}")
        w.line("{")
        w.level += 1
        self._present.append(set(span.symbols_in | span.symbols_out))

    def close_span(self, span: TransferSpan, w: CodeWriter) -> None:
        self._present.pop()
        w.level -= 1
        w.line("}")
        for name in sorted(span.symbols_out):
            self.record_transfer("D2H", name)

    # ------------------------------------------------------------------
    # Parallel loops
    # ------------------------------------------------------------------

    def _reduction_clauses(self, region: RegionInfo) -> list[str]:
        clauses: dict[str, str] = {}
        if region.kind == "bfs":
            clauses["bfs_finished"] = "&&"
        for red in self.analyses.reductions:
            if red.region != region.id:
                continue
            if red.is_fixed_point_flag:
                clauses.setdefault(red.target, "&&")
                continue
            sym = self.device_symbols.get(red.target)
            if red.atomic and sym is not None and self.length(sym) is None:
                clauses.setdefault(red.target, _REDUCTION_CLAUSE[red.operator])
        return [f"reduction({op}:{name})" for name, op in clauses.items()]

    def emit_region(self, region: RegionInfo, w: CodeWriter) -> None:
        covered = set().union(*self._present) if self._present else set()
        clauses = self._reduction_clauses(region)
        present = self._graph_sections(f for f in GRAPH_ARRAYS if f in region.graph_symbols)
        if region.kind in ("bfs", "reverse"):
            present.append(f"{self.level_ref()}[0:V]")
        if present:
            clauses.append(f"present({', '.join(present)})")
        reduced = {c.split(":", 1)[1].rstrip(")") for c in clauses if c.startswith("reduction(")}
        created = [self.section(self.device_symbols[n]) for n in self.outside(region)
                   if n not in covered and n not in reduced]
        if created:
            clauses.append(f"create({', '.join(created)})")
        tv = self.thread_var(region)
        w.line(f"// {region.kernel}")
        w.line(" ".join(["#pragma acc parallel loop", *clauses]))
        with w.block(f"for (int {tv} = 0; {tv} < V; {tv}++)"):
            self.region_body(region, tv, w)
        self.record_launch(region)

    def copy_to_device(self, sym: Symbol, w: CodeWriter) -> None:
        w.line(f"#pragma acc update device({self.section(sym)})")

    def copy_to_host(self, sym: Symbol, w: CodeWriter) -> None:
        w.line(f"#pragma acc update self({self.section(sym)})")

    def init_levels(self, w: CodeWriter) -> None:
        t = self.loop_name("t")
        level = self.level_ref()
        w.line(f"#pragma acc parallel loop present({level}[0:V])")
        with w.block(f"for (int {t} = 0; {t} < V; {t}++)"):
            w.line(f"{level}[{t}] = {t} == bfs_root ? 0 : -1;")

    # the level flag is a reduction variable of the BFS loop itself
    def bfs_flag_to_device(self, w: CodeWriter) -> None:
        pass

    def bfs_flag_to_host(self, w: CodeWriter) -> None:
        pass

    # ------------------------------------------------------------------
    # Atomics
    # ------------------------------------------------------------------

    def atomic_update(self, operator: str, target: str, value: str, sym: Symbol,
                      scope: Scope, w: CodeWriter) -> None:
        statement = self.plain_reduce_text(operator, target, value)
        if self.length(sym) is not None:
            w.line("#pragma acc atomic update")
        w.line(statement)

    @staticmethod
    def plain_reduce_text(operator: str, target: str, value: str) -> str:
        if operator == "Count":
            return f"{target}++;"
        if operator == "Product":
            return f"{target} *= {value};"
        return f"{target} += {value};"

    def atomic_minmax(self, kind: str, target: str, candidate: str, sym: Symbol,
                      scope: Scope, w: CodeWriter) -> None:
        w.line("#pragma acc atomic write")
        w.line(f"{target} = {candidate};")

    # ------------------------------------------------------------------
    # Assembly and structural contract
    # ------------------------------------------------------------------

    def assemble(self, function: CodeWriter) -> list[tuple[str, str]]:
        text = self.prelude(HOST_INCLUDES, ACC_HELPERS, HOST_GRAPH) + "\n" + function.text
        return [(self.file_name(), text)]

    @classmethod
    def idiom_token(cls, construct: str, type_name: str, scalar: bool, target: str,
                    cfg: CodegenConfig) -> str | None:
        if construct == "Flag":
            return f"reduction(&&:{target})"
        if construct in ("Min", "Max"):
            return "#pragma acc atomic write"
        if scalar:
            op = _REDUCTION_CLAUSE.get(construct)
            return f"reduction({op}:{target})" if op else None
        if construct in ("Sum", "Count", "Product"):
            return "#pragma acc atomic update"
        return None

    @classmethod
    def transfer_events(cls, text: str, cfg: CodegenConfig) -> list[tuple[int, str, str]]:
        events = []
        for line in re.finditer(r"#pragma acc (?:enter )?data\b[^\n]*", text):
            for clause in _CLAUSE.finditer(line.group(0)):
                names = re.findall(r"(\w+)(?:\[[^\]]*\])?", clause.group(2))
                offset = line.start() + clause.start()
                for name in names:
                    name = name.removeprefix(cfg.device_var_prefix)
                    if clause.group(1) in ("copyin", "copy"):
                        events.append((offset, "H2D", name))
                    if clause.group(1) in ("copyout", "copy"):
                        events.append((offset, "D2H", name))
        for m in _UPDATE.finditer(text):
            direction = "H2D" if m.group(1) == "device" else "D2H"
            for name in re.findall(r"(\w+)(?:\[[^\]]*\])?", m.group(2)):
                events.append((m.start(), direction, name))
        return sorted(events)

    @classmethod
    def split_violations(cls, unit: EmitUnit) -> list[str]:
        text = unit.text
        violations = []
        if "__global__" in text or "<<<" in text:
            violations.append("OpenACC output must not contain CUDA kernels")
        for kernel in unit.structure.get("kernels", []):
            if not re.search(rf"// {re.escape(kernel)}\n\s*#pragma acc parallel loop", text):
                violations.append(f"region {kernel} has no parallel loop")
        for m in re.finditer(r"#pragma acc data\b[^\n]*\n", text):
            if not text[m.end():].lstrip().startswith("{"):
                violations.append("data directive without a structured block")
        return violations
