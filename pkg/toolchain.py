"""
toolchain.py
============
Optional vendor-compiler check for generated units.

Nothing here is required: ``detect`` returns ``None`` when no compiler on
``PATH`` resolves the backend header, and callers (``graphdsl compile --verify``, the
toolchain tests) skip instead of failing. Units are compiled to object files
only; the emitted functions have no ``main``.
"""

from __future__ import annotations

import functools
import shutil
import subprocess
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

from codegen import BackendKind, EmitUnit

# backend -> candidate (compiler, flags) in preference order
CANDIDATES: dict[BackendKind, list[tuple[str, list[str]]]] = {
    BackendKind.CUDA: [("nvcc", ["-std=c++17"])],
    BackendKind.OPENACC: [("nvc++", ["-acc", "-std=c++17"]),
                          ("g++", ["-fopenacc", "-std=c++17"])],
    BackendKind.SYCL: [("icpx", ["-fsycl", "-std=c++17"]),
                       ("acpp", ["-std=c++17"]),
                       ("clang++", ["-fsycl", "-std=c++17"])],
    BackendKind.OPENCL: [("g++", ["-std=c++17"]), ("clang++", ["-std=c++17"])],
}

# header a compiler must resolve before it counts as a toolchain for the backend
HEADERS: dict[BackendKind, str] = {
    BackendKind.CUDA: "cuda_runtime.h",
    BackendKind.OPENACC: "openacc.h",
    BackendKind.SYCL: "sycl/sycl.hpp",
    BackendKind.OPENCL: "CL/cl.h",
}

COMPILE_TIMEOUT = 300
HEADER_CHECK_TIMEOUT = 60


@dataclass
class Toolchain:
    backend: BackendKind
    compiler: str
    flags: list[str] = field(default_factory=list)

    def command(self, source: Path, output: Path) -> list[str]:
        return [self.compiler, *self.flags, "-c", str(source), "-o", str(output)]


@dataclass
class CompileResult:
    backend: BackendKind
    ok: bool
    command: list[str]
    returncode: int
    output: str = ""

    def format(self) -> str:
        verdict = "compiled" if self.ok else f"failed (exit {self.returncode})"
        text = f"{self.backend.label}: {verdict}: {' '.join(self.command)}"
        if not self.ok and self.output:
            text += "\n" + self.output.rstrip()
        return text


def accepts_header(compiler: str, flags: tuple[str, ...], header: str,
                   suffix: str = ".cpp") -> bool:
    """Whether *compiler* with *flags* compiles a file that only includes *header*."""
    with tempfile.TemporaryDirectory(prefix="graphdsl-") as tmp:
        source = Path(tmp) / f"check{suffix}"
        source.write_text(f"#include <{header}>\n", encoding="utf-8")
        command = [compiler, *flags, "-c", str(source), "-o", str(source.with_suffix(".o"))]
        try:
            result = subprocess.run(command, capture_output=True, text=True,
                                    timeout=HEADER_CHECK_TIMEOUT, cwd=tmp)
        except (OSError, subprocess.TimeoutExpired):
            return False
    return result.returncode == 0


@functools.cache
def _usable(compiler: str, flags: tuple[str, ...], header: str, suffix: str) -> bool:
    return accepts_header(compiler, flags, header, suffix)


def detect(backend: BackendKind) -> Toolchain | None:
    """First compiler for *backend* on PATH that resolves the backend header, or None.

    A bare C++ compiler without the OpenCL or SYCL headers installed does not
    count, so callers skip rather than fail.
    """
    suffix = ".cu" if backend is BackendKind.CUDA else ".cpp"
    for compiler, flags in CANDIDATES[backend]:
        path = shutil.which(compiler)
        if path and _usable(path, tuple(flags), HEADERS[backend], suffix):
            return Toolchain(backend, path, list(flags))
    return None


def compile_unit(unit: EmitUnit, workdir: str | Path, toolchain: Toolchain | None = None,
                 debug: bool = False) -> CompileResult | None:
    """Write *unit* into *workdir* and compile its host file; None without a compiler."""
    toolchain = toolchain or detect(unit.backend)
    if toolchain is None:
        return None
    written = unit.write(workdir)
    source = next(p for p in written if p.suffix in (".cu", ".cpp"))
    command = toolchain.command(source, source.with_suffix(".o"))
    if debug:
        print(f"[TOOLCHAIN] {' '.join(command)}", file=sys.stderr)
    try:
        result = subprocess.run(command, capture_output=True, text=True,
                                timeout=COMPILE_TIMEOUT, cwd=str(workdir))
    except (OSError, subprocess.TimeoutExpired) as exc:
        return CompileResult(unit.backend, False, command, -1, str(exc))
    return CompileResult(unit.backend, result.returncode == 0, command, result.returncode,
                         result.stdout + result.stderr)
