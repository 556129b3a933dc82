"""Backend emission: determinism, golden files, size envelope and backend idioms."""

from __future__ import annotations

from pathlib import Path

import pytest

from codegen import BackendKind, CodegenConfig, generate, load_codegen_config
from conftest import CORPUS_NAMES, compile_source
from errors import ConfigError, UnsupportedConstruct
from semantic import analysis_report

GOLDEN_DIR = Path(__file__).resolve().parent / "golden"
BACKENDS = list(BackendKind)

# Reference CUDA body sizes for the corpus programs
CUDA_REFERENCE_LINES = {"bc": 150, "pr": 120, "sssp": 125, "tc": 75}


def _unit(corpus, name, backend, cfg=None):
    compiled = corpus[name]
    return generate(compiled.annotated, compiled.analyses, backend, cfg, name=name)


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.value)
@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_generation_is_deterministic(corpus, name, backend):
    first = _unit(corpus, name, backend)
    second = _unit(corpus, name, backend)
    assert first.files == second.files


def _golden(rel: Path) -> str:
    path = GOLDEN_DIR / rel
    if not path.exists():
        pytest.fail(f"missing snapshot tests/golden/{rel}; regenerate with "
                    "`python -m utils.update_golden`")
    return path.read_text(encoding="utf-8")


@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.value)
@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_matches_golden(corpus, name, backend):
    unit = _unit(corpus, name, backend)
    assert unit.files
    for file_name, text in unit.files:
        assert text == _golden(Path(name) / backend.value / file_name)


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_analysis_matches_golden(corpus, name):
    report = analysis_report(corpus[name].analyses, file=f"corpus/{name}.sp")
    assert report == _golden(Path(name) / "analysis.yml")


# ── Size envelope ────────────────────────────────────────────────────────────

@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_cuda_size_envelope(corpus, name):
    lines = _unit(corpus, name, BackendKind.CUDA).body_line_count()
    reference = CUDA_REFERENCE_LINES[name]
    assert 0.5 * reference <= lines <= 1.5 * reference


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_backend_size_ordering(corpus, name):
    acc = _unit(corpus, name, BackendKind.OPENACC).body_line_count()
    cuda = _unit(corpus, name, BackendKind.CUDA).body_line_count()
    ocl = _unit(corpus, name, BackendKind.OPENCL).body_line_count()
    assert acc < cuda < ocl


# ── Files and idioms ─────────────────────────────────────────────────────────

@pytest.mark.parametrize("backend, names", [
    (BackendKind.CUDA, ["sssp_cuda.cu"]),
    (BackendKind.OPENACC, ["sssp_openacc.cpp"]),
    (BackendKind.SYCL, ["sssp_sycl.cpp"]),
    (BackendKind.OPENCL, ["sssp_opencl.cpp", "sssp_opencl.cl"]),
])
def test_file_names(corpus, backend, names):
    assert [name for name, _ in _unit(corpus, "sssp", backend).files] == names


def test_opencl_kernels_live_in_the_cl_file(corpus):
    unit = _unit(corpus, "tc", BackendKind.OPENCL)
    assert "__kernel void" in unit.file(".cl")
    assert "__kernel" not in unit.file(".cpp")
    assert "clEnqueueNDRangeKernel" in unit.file(".cpp")


def test_cuda_sssp_idioms(corpus):
    text = _unit(corpus, "sssp", BackendKind.CUDA).text
    assert "atomicMin(" in text
    assert "while (!finished)" in text
    loop = text.index("while (!finished)")
    assert "cudaMemcpy(gpu_finished, &finished" in text[loop:]
    assert "cudaMemcpy(&finished, gpu_finished" in text[loop:]
    assert "__global__ void Compute_SSSP_kernel_0(" in text


def test_openacc_tc_reduction_clause(corpus):
    text = _unit(corpus, "tc", BackendKind.OPENACC).text
    assert "reduction(+:count)" in text
    assert "#pragma acc parallel loop" in text
    assert "__global__" not in text


def test_openacc_minmax_is_an_atomic_write(corpus):
    assert "#pragma acc atomic write" in _unit(corpus, "sssp", BackendKind.OPENACC).text


def test_opencl_float_sum_uses_compare_and_swap(corpus):
    unit = _unit(corpus, "pr", BackendKind.OPENCL)
    assert "atomicAddF(&gpu_dangling" in unit.file(".cl")
    assert "atomic_cmpxchg" in unit.file(".cl")


def test_unit_writes_every_file(corpus, tmp_path):
    unit = _unit(corpus, "pr", BackendKind.OPENCL)
    written = unit.write(tmp_path / "out")
    assert [p.name for p in written] == ["pr_opencl.cpp", "pr_opencl.cl"]
    assert written[1].read_text() == unit.file(".cl")


def test_backend_name_as_string(corpus):
    compiled = corpus["tc"]
    unit = generate(compiled.annotated, compiled.analyses, "SYCL")
    assert unit.backend is BackendKind.SYCL
    assert unit.files[0][0] == "Compute_TC_sycl.cpp"


def test_unknown_backend():
    with pytest.raises(ConfigError, match="unknown backend"):
        BackendKind.parse("metal")


# ── Unsupported constructs ───────────────────────────────────────────────────

@pytest.mark.parametrize("backend", BACKENDS, ids=lambda b: b.value)
def test_while_inside_forall_is_unsupported(backend):
    compiled = compile_source("""
    function f(Graph g, propNode<int> p) {
        forall (v in g.nodes()) {
            int c = 0;
            while (c < 3) { c = c + 1; }
            v.p = c;
        }
    }
    """)
    with pytest.raises(UnsupportedConstruct, match="while") as info:
        generate(compiled.annotated, compiled.analyses, backend)
    assert info.value.span.line == 5


def test_general_convergence_is_unsupported():
    compiled = compile_source("""
    function f(Graph g, propNode<int> p) {
        bool done = False;
        int x = 0;
        fixedPoint until (done: x > 3) {
            x = x + 1;
        }
    }
    """)
    with pytest.raises(UnsupportedConstruct, match="general convergence"):
        generate(compiled.annotated, compiled.analyses, BackendKind.CUDA)


# ── Configuration ────────────────────────────────────────────────────────────

@pytest.mark.parametrize("options, message", [
    ({"num_threads": 0}, "num_threads"),
    ({"num_threads": True}, "num_threads"),
    ({"indent": -1}, "indent"),
    ({"device_var_prefix": "1x"}, "device_var_prefix"),
    ({"float_atomics_emulation": "yes"}, "float_atomics_emulation"),
    ({"threads": 64}, "unknown codegen option"),
])
def test_config_validation(options, message):
    with pytest.raises(ConfigError, match=message):
        CodegenConfig.from_dict(options)


def test_opencl_forces_float_emulation():
    cfg = CodegenConfig()
    assert cfg.for_backend(BackendKind.OPENCL).float_atomics_emulation
    assert not cfg.for_backend(BackendKind.CUDA).float_atomics_emulation


def test_config_from_yaml(corpus, tmp_path):
    path = tmp_path / "codegen.yml"
    path.write_text("num_threads: 256\ndevice_var_prefix: dev_\n")
    cfg = load_codegen_config(path)
    assert cfg.to_dict() == {"num_threads": 256, "device_var_prefix": "dev_",
                             "float_atomics_emulation": False, "indent": 4}
    text = _unit(corpus, "sssp", BackendKind.CUDA, cfg).text
    assert "threadsPerBlock = 256;" in text
    assert "dev_dist" in text and "gpu_dist" not in text


def test_empty_config_file_means_defaults(tmp_path):
    path = tmp_path / "empty.yml"
    path.write_text("")
    assert load_codegen_config(path) == CodegenConfig()


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError, match="no codegen config"):
        load_codegen_config(tmp_path / "absent.yml")


def test_indent_setting(corpus):
    text = _unit(corpus, "tc", BackendKind.OPENACC, CodegenConfig(indent=2)).text
    assert "\n  int V = " in text
