"""
backend_opencl.py
=================
OpenCL emitter. Output is split in two files: ``<name>_opencl.cpp`` holds the
host function (platform/context/queue setup, buffers, argument binding and
``clEnqueueNDRangeKernel`` launches) and ``<name>_opencl.cl`` holds the
``__kernel`` functions, which the host reads and builds at run time.

OpenCL C has no floating-point atomics, so float and double reductions always
go through ``atomic_cmpxchg`` loops; booleans are carried as ``int``.
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
    KernelParam,
    Scope,
)
from semantic import RegionInfo, Symbol

OPENCL_HOST = r"""
#define CL_TARGET_OPENCL_VERSION 200
#include <CL/cl.h>

inline std::string readKernelSource(const char* path) {
    std::ifstream in(path);
    std::stringstream text;
    text << in.rdbuf();
    return text.str();
}
"""

OPENCL_DEVICE = r"""
#pragma OPENCL EXTENSION cl_khr_int64_base_atomics : enable
#pragma OPENCL EXTENSION cl_khr_int64_extended_atomics : enable
#pragma OPENCL EXTENSION cl_khr_fp64 : enable

int findEdge(__global int* OA, __global int* edgeList, int u, int w) {
    int lo = OA[u], hi = OA[u + 1];
    while (lo < hi) {
        int mid = lo + (hi - lo) / 2;
        if (edgeList[mid] < w) lo = mid + 1; else hi = mid;
    }
    return lo < OA[u + 1] && edgeList[lo] == w ? lo : -1;
}

bool isEdge(__global int* OA, __global int* edgeList, int u, int w) {
    return findEdge(OA, edgeList, u, w) >= 0;
}

__kernel void initLevels(int V, __global int* level, int root) {
    for (int v = get_global_id(0); v < V; v += get_global_size(0)) {
        level[v] = v == root ? 0 : -1;
    }
}

int atomicMulI(volatile __global int* address, int value) {
    int old;
    do {
        old = *address;
    } while (atomic_cmpxchg(address, old, old * value) != old);
    return old;
}

long atomicMulL(volatile __global long* address, long value) {
    long old;
    do {
        old = *address;
    } while (atom_cmpxchg(address, old, old * value) != old);
    return old;
}

float atomicAddF(volatile __global float* address, float value) {
    union { unsigned int bits; float value; } old, next;
    do {
        old.value = *address;
        next.value = old.value + value;
    } while (atomic_cmpxchg((volatile __global unsigned int*)address, old.bits, next.bits)
             != old.bits);
    return old.value;
}

double atomicAddD(volatile __global double* address, double value) {
    union { ulong bits; double value; } old, next;
    do {
        old.value = *address;
        next.value = old.value + value;
    } while (atom_cmpxchg((volatile __global ulong*)address, old.bits, next.bits) != old.bits);
    return old.value;
}

float atomicMulF(volatile __global float* address, float value) {
    union { unsigned int bits; float value; } old, next;
    do {
        old.value = *address;
        next.value = old.value * value;
    } while (atomic_cmpxchg((volatile __global unsigned int*)address, old.bits, next.bits)
             != old.bits);
    return old.value;
}

double atomicMulD(volatile __global double* address, double value) {
    union { ulong bits; double value; } old, next;
    do {
        old.value = *address;
        next.value = old.value * value;
    } while (atom_cmpxchg((volatile __global ulong*)address, old.bits, next.bits) != old.bits);
    return old.value;
}

float atomicMinF(volatile __global float* address, float value) {
    union { unsigned int bits; float value; } old, next;
    do {
        old.value = *address;
        if (old.value <= value) return old.value;
        next.value = value;
    } while (atomic_cmpxchg((volatile __global unsigned int*)address, old.bits, next.bits)
             != old.bits);
    return old.value;
}

double atomicMinD(volatile __global double* address, double value) {
    union { ulong bits; double value; } old, next;
    do {
        old.value = *address;
        if (old.value <= value) return old.value;
        next.value = value;
    } while (atom_cmpxchg((volatile __global ulong*)address, old.bits, next.bits) != old.bits);
    return old.value;
}

float atomicMaxF(volatile __global float* address, float value) {
    union { unsigned int bits; float value; } old, next;
    do {
        old.value = *address;
        if (old.value >= value) return old.value;
        next.value = value;
    } while (atomic_cmpxchg((volatile __global unsigned int*)address, old.bits, next.bits)
             != old.bits);
    return old.value;
}

double atomicMaxD(volatile __global double* address, double value) {
    union { ulong bits; double value; } old, next;
    do {
        old.value = *address;
        if (old.value >= value) return old.value;
        next.value = value;
    } while (atom_cmpxchg((volatile __global ulong*)address, old.bits, next.bits) != old.bits);
    return old.value;
}
"""

_TYPE_SUFFIX = {"int": "I", "node": "I", "edge": "I", "long": "L", "float": "F", "double": "D"}


def _size(ctype: str, count: str | None) -> str:
    if count is None:
        return f"sizeof({ctype})"
    return f"sizeof({ctype}) * ({count})" if " " in count else f"sizeof({ctype}) * {count}"


class OpenClEmitter(Emitter):
    backend = BackendKind.OPENCL
    skip = "continue;"
    bool_type = "int"

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self._buffers: list[str] = []
        self._init_kernel = self.fresh("init_levels") if self.has_bfs else None

    # ------------------------------------------------------------------
    # Function frame
    # ------------------------------------------------------------------

    def _write(self, buffer: str, size: str, host: str, w: CodeWriter) -> None:
        w.line(f"clEnqueueWriteBuffer(command_queue, {buffer}, CL_TRUE, 0, {size}, {host}, "
               f"0, NULL, NULL);")

    def _read(self, buffer: str, size: str, host: str, w: CodeWriter) -> None:
        w.line(f"clEnqueueReadBuffer(command_queue, {buffer}, CL_TRUE, 0, {size}, {host}, "
               f"0, NULL, NULL);")

    def _alloc(self, name: str, size: str, w: CodeWriter) -> None:
        w.line(f"cl_mem {name} = clCreateBuffer(context, CL_MEM_READ_WRITE, {size}, NULL, "
               f"&status);")
        self._buffers.append(name)

    def setup(self, w: CodeWriter) -> None:
        w.line("cl_int status;")
        w.line("cl_platform_id platform;")
        w.line("clGetPlatformIDs(1, &platform, NULL);")
        w.line("cl_device_id device;")
        w.line("clGetDeviceIDs(platform, CL_DEVICE_TYPE_GPU, 1, &device, NULL);")
        w.line("cl_context context = clCreateContext(NULL, 1, &device, NULL, NULL, &status);")
        w.line("cl_command_queue command_queue = "
               "clCreateCommandQueueWithProperties(context, device, NULL, &status);")
        source = self.fresh("kernel_source")
        text = self.fresh("kernel_text")
        w.line(f'std::string {source} = readKernelSource("{self.file_name("cl")}");')
        w.line(f"const char* {text} = {source}.c_str();")
        w.line(f"cl_program program = clCreateProgramWithSource(context, 1, &{text}, NULL, "
               f"&status);")
        w.line("status = clBuildProgram(program, 1, &device, NULL, NULL, NULL);")
        if self._init_kernel:
            w.line(f'cl_kernel {self._init_kernel} = clCreateKernel(program, "initLevels", '
                   f'&status);')
        for region in self.transfers.regions:
            w.line(f'cl_kernel {region.kernel} = clCreateKernel(program, "{region.kernel}", '
                   f'&status);')
        w.line(f"size_t global_size = {self.cfg.num_threads};")
        w.line("cl_event event;")
        for f in self.graph_arrays:
            name = self.device_graph(f)
            size = _size("int", GRAPH_LENGTHS[f])
            self._alloc(name, size, w)
            self._write(name, size, self.graph_ref(f, False), w)
            self.record_transfer("H2D", GRAPH_FIELDS[f])
        if self.has_bfs:
            self._alloc(self.level_ref(), _size("int", "V"), w)
            self._alloc(self.device_array("bfs_finished"), _size("int", None), w)
        for name, sym in self.device_symbols.items():
            self._alloc(self.device_array(name), self.size_expr(sym), w)
        w.line(HOST_TIMER_START)

    def teardown(self, w: CodeWriter) -> None:
        w.raw(HOST_TIMER_STOP)
        for name in self._buffers:
            w.line(f"clReleaseMemObject({name});")
        if self._init_kernel:
            w.line(f"clReleaseKernel({self._init_kernel});")
        for region in self.transfers.regions:
            w.line(f"clReleaseKernel({region.kernel});")
        w.line("clReleaseProgram(program);")
        w.line("clReleaseCommandQueue(command_queue);")
        w.line("clReleaseContext(context);")

    # ------------------------------------------------------------------
    # Kernels and transfers
    # ------------------------------------------------------------------

    @staticmethod
    def kernel_decl(param: KernelParam) -> str:
        if param.pointer:
            return f"__global {param.ctype}* {param.name}"
        return f"{param.ctype} {param.name}"

    def _launch(self, kernel: str, args: list[tuple[str, str]], w: CodeWriter) -> None:
        for i, (ctype, host) in enumerate(args):
            w.line(f"clSetKernelArg({kernel}, {i}, sizeof({ctype}), &{host});")
        w.line(f"clEnqueueNDRangeKernel(command_queue, {kernel}, 1, NULL, &global_size, NULL, "
               f"0, NULL, &event);")
        w.line("clWaitForEvents(1, &event);")

    def emit_region(self, region: RegionInfo, w: CodeWriter) -> None:
        params = self.kernel_params(region)
        tv = self.thread_var(region)
        k = self.kernels
        with k.block(f"__kernel void {region.kernel}"
                     f"({', '.join(self.kernel_decl(p) for p in params)})"):
            with k.block(f"for (int {tv} = get_global_id(0); {tv} < V; "
                         f"{tv} += get_global_size(0))"):
                self.region_body(region, tv, k)
        k.line()
        self._launch(region.kernel,
                     [("cl_mem" if p.pointer else p.ctype, p.host) for p in params], w)
        self.record_launch(region, params)

    def copy_to_device(self, sym: Symbol, w: CodeWriter) -> None:
        self._write(self.device_array(sym.name), self.size_expr(sym), self.host_pointer(sym), w)

    def copy_to_host(self, sym: Symbol, w: CodeWriter) -> None:
        self._read(self.device_array(sym.name), self.size_expr(sym), self.host_pointer(sym), w)

    def init_levels(self, w: CodeWriter) -> None:
        self._launch(self._init_kernel,
                     [("int", "V"), ("cl_mem", self.level_ref()), ("int", "bfs_root")], w)

    def bfs_flag_to_device(self, w: CodeWriter) -> None:
        self._write(self.device_array("bfs_finished"), "sizeof(int)", "&bfs_finished", w)
        self.record_transfer("H2D", "bfs_finished")

    def bfs_flag_to_host(self, w: CodeWriter) -> None:
        self._read(self.device_array("bfs_finished"), "sizeof(int)", "&bfs_finished", w)
        self.record_transfer("D2H", "bfs_finished")

    # ------------------------------------------------------------------
    # Atomics
    # ------------------------------------------------------------------

    def atomic_update(self, operator: str, target: str, value: str, sym: Symbol,
                      scope: Scope, w: CodeWriter) -> None:
        token = self.idiom_token(operator, sym.value_type.name, self.length(sym) is None,
                                 sym.name, self.cfg)
        w.line(f"{token}&{target}, {value});")

    def atomic_minmax(self, kind: str, target: str, candidate: str, sym: Symbol,
                      scope: Scope, w: CodeWriter) -> None:
        token = self.idiom_token(kind, sym.value_type.name, self.length(sym) is None,
                                 sym.name, self.cfg)
        w.line(f"{token}&{target}, {candidate});")

    # ------------------------------------------------------------------
    # Assembly and structural contract
    # ------------------------------------------------------------------

    def assemble(self, function: CodeWriter) -> list[tuple[str, str]]:
        host = self.prelude(HOST_INCLUDES, OPENCL_HOST, HOST_GRAPH) + "\n" + function.text
        device = self.prelude(OPENCL_DEVICE) + "\n" + self.kernels.text
        return [(self.file_name("cpp"), host), (self.file_name("cl"), device)]

    @classmethod
    def idiom_token(cls, construct: str, type_name: str, scalar: bool, target: str,
                    cfg: CodegenConfig) -> str | None:
        suffix = _TYPE_SUFFIX.get(type_name)
        if suffix is None:
            return None
        if construct in ("Sum", "Count"):
            return {"I": "atomic_add(", "L": "atom_add("}.get(suffix, f"atomicAdd{suffix}(")
        if construct == "Product":
            return f"atomicMul{suffix}("
        if construct in ("Min", "Max"):
            builtin = {"I": "atomic_", "L": "atom_"}.get(suffix)
            if builtin:
                return f"{builtin}{construct.lower()}("
            return f"atomic{construct}{suffix}("
        return None

    @classmethod
    def transfer_events(cls, text: str, cfg: CodegenConfig) -> list[tuple[int, str, str]]:
        prefix = re.escape(cfg.device_var_prefix)
        events = []
        for m in re.finditer(rf"clEnqueue(Write|Read)Buffer\(\s*command_queue\s*,\s*"
                             rf"{prefix}(\w+)", text):
            events.append((m.start(), "H2D" if m.group(1) == "Write" else "D2H", m.group(2)))
        return sorted(events)

    @classmethod
    def split_violations(cls, unit: EmitUnit) -> list[str]:
        host = unit.file(".cpp")
        device = unit.file(".cl")
        violations = []
        if "__kernel" in host:
            violations.append("host file contains __kernel code")
        if "clEnqueue" in device:
            violations.append("kernel file contains host API calls")
        for kernel in unit.structure.get("kernels", []):
            if f"__kernel void {kernel}(" not in device:
                violations.append(f"kernel {kernel} is missing from the .cl file")
            if f'clCreateKernel(program, "{kernel}"' not in host:
                violations.append(f"kernel {kernel} is never created on the host")
            if f"clEnqueueNDRangeKernel(command_queue, {kernel}," not in host:
                violations.append(f"kernel {kernel} is never enqueued")
        return violations
