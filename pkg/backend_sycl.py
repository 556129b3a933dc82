"""
backend_sycl.py
===============
SYCL 2020 emitter. Regions are ``parallel_for`` lambdas submitted to one
in-order queue; each work item strides over the nodes by the configured
global size. Device memory is USM (``malloc_device``) and transfers are
blocking ``Q.memcpy`` calls. Atomics go through ``atomic_ref``.
"""

from __future__ import annotations

import re
from contextlib import ExitStack

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
from semantic import RegionInfo, Symbol

SYCL_HELPERS = r"""
#include <sycl/sycl.hpp>
using namespace sycl;

template <typename T>
using device_atomic = atomic_ref<T, memory_order::relaxed, memory_scope::device>;

inline int findEdge(int* OA, int* edgeList, int u, int w) {
    int lo = OA[u], hi = OA[u + 1];
    while (lo < hi) {
        int mid = lo + (hi - lo) / 2;
        if (edgeList[mid] < w) lo = mid + 1; else hi = mid;
    }
    return lo < OA[u + 1] && edgeList[lo] == w ? lo : -1;
}

inline bool isEdge(int* OA, int* edgeList, int u, int w) {
    return findEdge(OA, edgeList, u, w) >= 0;
}

// compare-exchange loops for updates atomic_ref has no member for
template <typename T>
inline T atomicMul(T* address, T value) {
    device_atomic<T> ref(*address);
    T old = ref.load();
    while (!ref.compare_exchange_strong(old, old * value)) {}
    return old;
}

template <typename T>
inline T atomicAddF(T* address, T value) {
    device_atomic<T> ref(*address);
    T old = ref.load();
    while (!ref.compare_exchange_strong(old, old + value)) {}
    return old;
}

template <typename T>
inline T atomicMinF(T* address, T value) {
    device_atomic<T> ref(*address);
    T old = ref.load();
    while (old > value && !ref.compare_exchange_strong(old, value)) {}
    return old;
}

template <typename T>
inline T atomicMaxF(T* address, T value) {
    device_atomic<T> ref(*address);
    T old = ref.load();
    while (old < value && !ref.compare_exchange_strong(old, value)) {}
    return old;
}
"""


class SyclEmitter(Emitter):
    backend = BackendKind.SYCL
    skip = "continue;"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._buffers: list[str] = []

    # ------------------------------------------------------------------
    # Function frame
    # ------------------------------------------------------------------

    def _alloc(self, ctype: str, name: str, count: str, w: CodeWriter) -> None:
        w.line(f"{ctype}* {name} = malloc_device<{ctype}>({count}, Q);")
        self._buffers.append(name)

    def setup(self, w: CodeWriter) -> None:
        w.line("queue Q(default_selector_v);")
        w.line(f"const int NUM_THREADS = {self.cfg.num_threads};")
        for f in self.graph_arrays:
            name = self.device_graph(f)
            count = GRAPH_LENGTHS[f]
            self._alloc("int", name, count, w)
            size = f"sizeof(int) * ({count})" if " " in count else f"sizeof(int) * {count}"
            w.line(f"Q.memcpy({name}, {self.graph_ref(f, False)}, {size}).wait();")
            self.record_transfer("H2D", GRAPH_FIELDS[f])
        if self.has_bfs:
            self._alloc("int", self.level_ref(), "V", w)
            self._alloc("bool", self.device_array("bfs_finished"), "1", w)
        for name, sym in self.device_symbols.items():
            self._alloc(self.ctype(sym.type), self.device_array(name), self.length(sym) or "1", w)
        w.line(HOST_TIMER_START)

    def teardown(self, w: CodeWriter) -> None:
        w.raw(HOST_TIMER_STOP)
        for name in self._buffers:
            w.line(f"free({name}, Q);")

    # ------------------------------------------------------------------
    # Kernels and transfers
    # ------------------------------------------------------------------

    def _submit(self, tv: str, w: CodeWriter):
        """Open the submit / parallel_for / stride-loop nest; returns the exit stack."""
        stack = ExitStack()
        stack.enter_context(w.block("Q.submit([&](handler& h)", close="}).wait();"))
        stack.enter_context(w.block("h.parallel_for(range<1>(NUM_THREADS), [=](id<1> i)",
                                    close="});"))
        stack.enter_context(w.block(f"for (int {tv} = i[0]; {tv} < V; {tv} += NUM_THREADS)"))
        return stack

    def emit_region(self, region: RegionInfo, w: CodeWriter) -> None:
        tv = self.thread_var(region)
        w.line(f"// {region.kernel}")
        with self._submit(tv, w):
            self.region_body(region, tv, w)
        self.record_launch(region)

    def copy_to_device(self, sym: Symbol, w: CodeWriter) -> None:
        w.line(f"Q.memcpy({self.device_array(sym.name)}, {self.host_pointer(sym)}, "
               f"{self.size_expr(sym)}).wait();")

    def copy_to_host(self, sym: Symbol, w: CodeWriter) -> None:
        w.line(f"Q.memcpy({self.host_pointer(sym)}, {self.device_array(sym.name)}, "
               f"{self.size_expr(sym)}).wait();")

    def init_levels(self, w: CodeWriter) -> None:
        t = self.loop_name("t")
        with self._submit(t, w):
            w.line(f"{self.level_ref()}[{t}] = {t} == bfs_root ? 0 : -1;")

    def bfs_flag_to_device(self, w: CodeWriter) -> None:
        w.line(f"Q.memcpy({self.device_array('bfs_finished')}, &bfs_finished, "
               f"sizeof(bool)).wait();")
        self.record_transfer("H2D", "bfs_finished")

    def bfs_flag_to_host(self, w: CodeWriter) -> None:
        w.line(f"Q.memcpy(&bfs_finished, {self.device_array('bfs_finished')}, "
               f"sizeof(bool)).wait();")
        self.record_transfer("D2H", "bfs_finished")

    # ------------------------------------------------------------------
    # Atomics
    # ------------------------------------------------------------------

    def _ref(self, sym: Symbol, target: str, w: CodeWriter) -> str:
        ref = self.fresh(f"{sym.name}_ref")
        w.line(f"device_atomic<{self.ctype(sym.type)}> {ref}({target});")
        return ref

    def atomic_update(self, operator: str, target: str, value: str, sym: Symbol,
                      scope: Scope, w: CodeWriter) -> None:
        token = self.idiom_token(operator, sym.value_type.name, self.length(sym) is None,
                                 sym.name, self.cfg)
        if token.startswith("."):
            w.line(f"{self._ref(sym, target, w)}{token}{value});")
        else:
            w.line(f"{token}&{target}, {value});")

    def atomic_minmax(self, kind: str, target: str, candidate: str, sym: Symbol,
                      scope: Scope, w: CodeWriter) -> None:
        token = self.idiom_token(kind, sym.value_type.name, self.length(sym) is None,
                                 sym.name, self.cfg)
        if token.startswith("."):
            w.line(f"{self._ref(sym, target, w)}{token}{candidate});")
        else:
            w.line(f"{token}&{target}, {candidate});")

    # ------------------------------------------------------------------
    # Assembly and structural contract
    # ------------------------------------------------------------------

    def assemble(self, function: CodeWriter) -> list[tuple[str, str]]:
        text = self.prelude(HOST_INCLUDES, SYCL_HELPERS, HOST_GRAPH) + "\n" + function.text
        return [(self.file_name(), text)]

    @classmethod
    def idiom_token(cls, construct: str, type_name: str, scalar: bool, target: str,
                    cfg: CodegenConfig) -> str | None:
        emulated = type_name in ("float", "double") and cfg.float_atomics_emulation
        if construct in ("Sum", "Count"):
            return "atomicAddF(" if emulated else ".fetch_add("
        if construct == "Product":
            return "atomicMul("
        if construct in ("Min", "Max"):
            return f"atomic{construct}F(" if emulated else f".fetch_{construct.lower()}("
        return None

    @classmethod
    def transfer_events(cls, text: str, cfg: CodegenConfig) -> list[tuple[int, str, str]]:
        prefix = re.escape(cfg.device_var_prefix)
        events = []
        for m in re.finditer(rf"Q\.memcpy\(\s*{prefix}(\w+)\s*,", text):
            events.append((m.start(), "H2D", m.group(1)))
        for m in re.finditer(rf"Q\.memcpy\(\s*&?((?!{prefix})[\w.]+)\s*,\s*{prefix}\w+", text):
            events.append((m.start(), "D2H", m.group(1).rsplit(".", 1)[-1]))
        return sorted(events)

    @classmethod
    def split_violations(cls, unit: EmitUnit) -> list[str]:
        text = unit.text
        violations = []
        if "__global__" in text or "<<<" in text:
            violations.append("SYCL output must not contain CUDA kernels")
        for kernel in unit.structure.get("kernels", []):
            if not re.search(rf"// {re.escape(kernel)}\n\s*Q\.submit\(", text):
                violations.append(f"region {kernel} is not submitted to the queue")
        return violations
