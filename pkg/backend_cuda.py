"""
backend_cuda.py
===============
CUDA emitter. Kernels are ``__global__`` functions placed ahead of the host
function in a single ``.cu`` file; transfers are ``cudaMemcpy`` calls and each
launch uses ``ceil(V / threadsPerBlock)`` blocks followed by
``cudaDeviceSynchronize``.
"""

from __future__ import annotations

import re

from codegen import (
    GRAPH_FIELDS,
    GRAPH_LENGTHS,
    HOST_GRAPH,
    HOST_INCLUDES,
    BackendKind,
    CodegenConfig,
    CodeWriter,
    Emitter,
    EmitUnit,
    Scope,
)
from semantic import RegionInfo, Symbol

CUDA_HELPERS = r"""
#include <cuda.h>
#include <cuda_runtime.h>

__device__ int findEdge(int* OA, int* edgeList, int u, int w) {
    int lo = OA[u], hi = OA[u + 1];
    while (lo < hi) {
        int mid = lo + (hi - lo) / 2;
        if (edgeList[mid] < w) lo = mid + 1; else hi = mid;
    }
    return lo < OA[u + 1] && edgeList[lo] == w ? lo : -1;
}

__device__ bool isEdge(int* OA, int* edgeList, int u, int w) {
    return findEdge(OA, edgeList, u, w) >= 0;
}

__global__ void initLevels(int V, int* level, int root) {
    int v = blockIdx.x * blockDim.x + threadIdx.x;
    if (v < V) level[v] = v == root ? 0 : -1;
}

// compare-and-swap updates for operations CUDA has no atomic for
__device__ int atomicMul(int* address, int value) {
    int old = *address, assumed;
    do {
        assumed = old;
        old = atomicCAS(address, assumed, assumed * value);
    } while (assumed != old);
    return old;
}

__device__ long atomicMul(long* address, long value) {
    unsigned long long* bits = (unsigned long long*)address;
    unsigned long long old = *bits, assumed;
    do {
        assumed = old;
        old = atomicCAS(bits, assumed, (unsigned long long)((long)assumed * value));
    } while (assumed != old);
    return (long)old;
}

__device__ float atomicMul(float* address, float value) {
    int* bits = (int*)address;
    int old = *bits, assumed;
    do {
        assumed = old;
        old = atomicCAS(bits, assumed, __float_as_int(__int_as_float(assumed) * value));
    } while (assumed != old);
    return __int_as_float(old);
}

__device__ double atomicMul(double* address, double value) {
    unsigned long long* bits = (unsigned long long*)address;
    unsigned long long old = *bits, assumed;
    do {
        assumed = old;
        old = atomicCAS(bits, assumed,
                        __double_as_longlong(__longlong_as_double(assumed) * value));
    } while (assumed != old);
    return __longlong_as_double(old);
}

__device__ float atomicAddF(float* address, float value) {
    int* bits = (int*)address;
    int old = *bits, assumed;
    do {
        assumed = old;
        old = atomicCAS(bits, assumed, __float_as_int(__int_as_float(assumed) + value));
    } while (assumed != old);
    return __int_as_float(old);
}

__device__ double atomicAddF(double* address, double value) {
    unsigned long long* bits = (unsigned long long*)address;
    unsigned long long old = *bits, assumed;
    do {
        assumed = old;
        old = atomicCAS(bits, assumed,
                        __double_as_longlong(__longlong_as_double(assumed) + value));
    } while (assumed != old);
    return __longlong_as_double(old);
}

__device__ float atomicMinF(float* address, float value) {
    int* bits = (int*)address;
    int old = *bits, assumed;
    do {
        assumed = old;
        if (__int_as_float(assumed) <= value) break;
        old = atomicCAS(bits, assumed, __float_as_int(value));
    } while (assumed != old);
    return __int_as_float(old);
}

__device__ double atomicMinF(double* address, double value) {
    unsigned long long* bits = (unsigned long long*)address;
    unsigned long long old = *bits, assumed;
    do {
        assumed = old;
        if (__longlong_as_double(assumed) <= value) break;
        old = atomicCAS(bits, assumed, __double_as_longlong(value));
    } while (assumed != old);
    return __longlong_as_double(old);
}

__device__ float atomicMaxF(float* address, float value) {
    int* bits = (int*)address;
    int old = *bits, assumed;
    do {
        assumed = old;
        if (__int_as_float(assumed) >= value) break;
        old = atomicCAS(bits, assumed, __float_as_int(value));
    } while (assumed != old);
    return __int_as_float(old);
}

__device__ double atomicMaxF(double* address, double value) {
    unsigned long long* bits = (unsigned long long*)address;
    unsigned long long old = *bits, assumed;
    do {
        assumed = old;
        if (__longlong_as_double(assumed) >= value) break;
        old = atomicCAS(bits, assumed, __double_as_longlong(value));
    } while (assumed != old);
    return __longlong_as_double(old);
}
"""


def _paren(count: str) -> str:
    return f"({count})" if " " in count else count


class CudaEmitter(Emitter):
    backend = BackendKind.CUDA
    skip = "return;"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._buffers: list[str] = []

    # ------------------------------------------------------------------
    # Function frame
    # ------------------------------------------------------------------

    def _alloc(self, ctype: str, name: str, size: str, w: CodeWriter) -> None:
        w.line(f"{ctype}* {name};")
        w.line(f"cudaMalloc(&{name}, {size});")
        self._buffers.append(name)

    def setup(self, w: CodeWriter) -> None:
        w.line(f"const unsigned threadsPerBlock = {self.cfg.num_threads};")
        w.line("const unsigned numBlocks = (V + threadsPerBlock - 1) / threadsPerBlock;")
        for f in self.graph_arrays:
            name = self.device_graph(f)
            size = f"sizeof(int) * {_paren(GRAPH_LENGTHS[f])}"
            self._alloc("int", name, size, w)
            w.line(f"cudaMemcpy({name}, {self.graph_ref(f, False)}, {size}, "
                   f"cudaMemcpyHostToDevice);")
            self.record_transfer("H2D", GRAPH_FIELDS[f])
        if self.has_bfs:
            self._alloc("int", self.level_ref(), "sizeof(int) * V", w)
            self._alloc("bool", self.device_array("bfs_finished"), "sizeof(bool)", w)
        for name, sym in self.device_symbols.items():
            self._alloc(self.ctype(sym.type), self.device_array(name), self.size_expr(sym), w)
        w.line("cudaEvent_t start, stop;")
        w.line("cudaEventCreate(&start);")
        w.line("cudaEventCreate(&stop);")
        w.line("float milliseconds = 0;")
        w.line("cudaEventRecord(start, 0);")

    def teardown(self, w: CodeWriter) -> None:
        w.line("cudaEventRecord(stop, 0);")
        w.line("cudaEventSynchronize(stop);")
        w.line("cudaEventElapsedTime(&milliseconds, start, stop);")
        w.line('printf("GPU Time: %.6f ms\\n", milliseconds);')
        for name in self._buffers:
            w.line(f"cudaFree({name});")

    # ------------------------------------------------------------------
    # Kernels and transfers
    # ------------------------------------------------------------------

    def emit_region(self, region: RegionInfo, w: CodeWriter) -> None:
        params = self.kernel_params(region)
        tv = self.thread_var(region)
        k = self.kernels
        with k.block(f"__global__ void {region.kernel}({', '.join(p.decl for p in params)})"):
            k.line(f"int {tv} = blockIdx.x * blockDim.x + threadIdx.x;")
            k.line(f"if ({tv} >= V) return;")
            self.region_body(region, tv, k)
        k.line()
        args = ", ".join(p.host for p in params)
        w.line(f"{region.kernel}<<<numBlocks, threadsPerBlock>>>({args});")
        w.line("cudaDeviceSynchronize();")
        self.record_launch(region, params)

    def copy_to_device(self, sym: Symbol, w: CodeWriter) -> None:
        w.line(f"cudaMemcpy({self.device_array(sym.name)}, {self.host_pointer(sym)}, "
               f"{self.size_expr(sym)}, cudaMemcpyHostToDevice);")

    def copy_to_host(self, sym: Symbol, w: CodeWriter) -> None:
        w.line(f"cudaMemcpy({self.host_pointer(sym)}, {self.device_array(sym.name)}, "
               f"{self.size_expr(sym)}, cudaMemcpyDeviceToHost);")

    def init_levels(self, w: CodeWriter) -> None:
        w.line(f"initLevels<<<numBlocks, threadsPerBlock>>>(V, {self.level_ref()}, bfs_root);")
        w.line("cudaDeviceSynchronize();")

    def bfs_flag_to_device(self, w: CodeWriter) -> None:
        w.line(f"cudaMemcpy({self.device_array('bfs_finished')}, &bfs_finished, sizeof(bool), "
               f"cudaMemcpyHostToDevice);")
        self.record_transfer("H2D", "bfs_finished")

    def bfs_flag_to_host(self, w: CodeWriter) -> None:
        w.line(f"cudaMemcpy(&bfs_finished, {self.device_array('bfs_finished')}, sizeof(bool), "
               f"cudaMemcpyDeviceToHost);")
        self.record_transfer("D2H", "bfs_finished")

    # ------------------------------------------------------------------
    # Atomics
    # ------------------------------------------------------------------

    def atomic_update(self, operator: str, target: str, value: str, sym: Symbol,
                      scope: Scope, w: CodeWriter) -> None:
        type_name = sym.value_type.name
        token = self.idiom_token(operator, type_name, self.length(sym) is None, sym.name,
                                 self.cfg)
        if type_name == "long" and token == "atomicAdd(":
            w.line(f"atomicAdd((unsigned long long*)&{target}, (unsigned long long)({value}));")
        else:
            w.line(f"{token}&{target}, {value});")

    def atomic_minmax(self, kind: str, target: str, candidate: str, sym: Symbol,
                      scope: Scope, w: CodeWriter) -> None:
        type_name = sym.value_type.name
        token = self.idiom_token(kind, type_name, self.length(sym) is None, sym.name,
                                 self.cfg)
        if type_name == "long":
            w.line(f"{token}(long long*)&{target}, (long long){candidate});")
        else:
            w.line(f"{token}&{target}, {candidate});")

    # ------------------------------------------------------------------
    # Assembly and structural contract
    # ------------------------------------------------------------------

    def assemble(self, function: CodeWriter) -> list[tuple[str, str]]:
        text = self.prelude(HOST_INCLUDES, CUDA_HELPERS, HOST_GRAPH) + "\n" \
            + self.kernels.text + function.text
        return [(self.file_name(), text)]

    @classmethod
    def idiom_token(cls, construct: str, type_name: str, scalar: bool, target: str,
                    cfg: CodegenConfig) -> str | None:
        is_float = type_name in ("float", "double")
        if construct in ("Sum", "Count"):
            return "atomicAddF(" if is_float and cfg.float_atomics_emulation else "atomicAdd("
        if construct == "Product":
            return "atomicMul("
        if construct in ("Min", "Max"):
            return f"atomic{construct}F(" if is_float else f"atomic{construct}("
        return None

    @classmethod
    def transfer_events(cls, text: str, cfg: CodegenConfig) -> list[tuple[int, str, str]]:
        prefix = re.escape(cfg.device_var_prefix)
        events = []
        for m in re.finditer(rf"cudaMemcpy\(\s*{prefix}(\w+)\s*,[^;]*?cudaMemcpyHostToDevice",
                             text):
            events.append((m.start(), "H2D", m.group(1)))
        for m in re.finditer(rf"cudaMemcpy\(\s*&?([\w.]+)\s*,\s*{prefix}\w+[^;]*?"
                             rf"cudaMemcpyDeviceToHost", text):
            events.append((m.start(), "D2H", m.group(1).rsplit(".", 1)[-1]))
        return sorted(events)

    @classmethod
    def split_violations(cls, unit: EmitUnit) -> list[str]:
        text = unit.text
        violations = []
        for kernel in unit.structure.get("kernels", []):
            if f"__global__ void {kernel}(" not in text:
                violations.append(f"kernel {kernel} has no __global__ definition")
            if f"{kernel}<<<" not in text:
                violations.append(f"kernel {kernel} is never launched")
        return violations
