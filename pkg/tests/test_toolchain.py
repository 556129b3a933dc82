"""Vendor-compiler verification; skipped when no compiler is installed."""

from __future__ import annotations

import pytest

from codegen import BackendKind, generate
from conftest import CORPUS_NAMES
from toolchain import (
    CANDIDATES,
    HEADERS,
    CompileResult,
    Toolchain,
    accepts_header,
    compile_unit,
    detect,
)


def test_every_backend_has_candidates():
    assert set(CANDIDATES) == set(BackendKind)


def test_command_line(tmp_path):
    toolchain = Toolchain(BackendKind.CUDA, "nvcc", ["-std=c++17"])
    source = tmp_path / "x.cu"
    assert toolchain.command(source, tmp_path / "x.o") == [
        "nvcc", "-std=c++17", "-c", str(source), "-o", str(tmp_path / "x.o")]


def test_detect_without_compilers(monkeypatch):
    monkeypatch.setattr("toolchain.shutil.which", lambda name: None)
    assert detect(BackendKind.SYCL) is None


def test_detect_prefers_the_first_candidate(monkeypatch):
    monkeypatch.setattr("toolchain.shutil.which", lambda name: f"/opt/bin/{name}")
    monkeypatch.setattr("toolchain._usable", lambda compiler, flags, header, suffix: True)
    toolchain = detect(BackendKind.OPENACC)
    assert toolchain.compiler == "/opt/bin/nvc++"
    assert toolchain.flags == ["-acc", "-std=c++17"]


def test_compiler_without_backend_header_is_skipped(monkeypatch):
    monkeypatch.setattr("toolchain.shutil.which", lambda name: f"/usr/bin/{name}")
    monkeypatch.setattr("toolchain._usable",
                        lambda compiler, flags, header, suffix: header not in ("CL/cl.h",
                                                                              "sycl/sycl.hpp"))
    assert detect(BackendKind.OPENCL) is None
    assert detect(BackendKind.SYCL) is None
    assert detect(BackendKind.OPENACC).compiler == "/usr/bin/nvc++"


def test_header_check_passes_backend_header_and_suffix(monkeypatch):
    seen = []

    def usable(compiler, flags, header, suffix):
        seen.append((compiler, header, suffix))
        return compiler.endswith("g++")

    monkeypatch.setattr("toolchain.shutil.which", lambda name: f"/usr/bin/{name}")
    monkeypatch.setattr("toolchain._usable", usable)
    toolchain = detect(BackendKind.OPENACC)
    assert toolchain.compiler == "/usr/bin/g++"
    assert seen == [("/usr/bin/nvc++", "openacc.h", ".cpp"),
                    ("/usr/bin/g++", "openacc.h", ".cpp")]
    assert detect(BackendKind.CUDA) is None
    assert seen[-1] == ("/usr/bin/nvcc", "cuda_runtime.h", ".cu")


def test_every_backend_has_a_header():
    assert set(HEADERS) == set(BackendKind)


@pytest.mark.parametrize("compiler", ["false", "/nonexistent/cc"])
def test_failing_compiler_does_not_accept_headers(compiler):
    assert not accepts_header(compiler, (), "CL/cl.h")


def test_compile_unit_without_compiler(corpus, tmp_path, monkeypatch):
    monkeypatch.setattr("toolchain.shutil.which", lambda name: None)
    compiled = corpus["tc"]
    unit = generate(compiled.annotated, compiled.analyses, BackendKind.CUDA)
    assert compile_unit(unit, tmp_path) is None
    assert list(tmp_path.iterdir()) == []


def test_failed_compile_is_reported(corpus, tmp_path):
    compiled = corpus["tc"]
    unit = generate(compiled.annotated, compiled.analyses, BackendKind.OPENCL)
    result = compile_unit(unit, tmp_path, Toolchain(BackendKind.OPENCL, "false", []))
    assert isinstance(result, CompileResult)
    assert not result.ok
    assert "failed (exit 1)" in result.format()


@pytest.mark.toolchain
@pytest.mark.parametrize("backend", list(BackendKind), ids=lambda b: b.value)
@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_generated_code_compiles(corpus, tmp_path, name, backend):
    toolchain = detect(backend)
    if toolchain is None:
        pytest.skip(f"no {backend.label} compiler on PATH")
    compiled = corpus[name]
    unit = generate(compiled.annotated, compiled.analyses, backend, name=name)
    result = compile_unit(unit, tmp_path, toolchain)
    assert result.ok, result.format()
