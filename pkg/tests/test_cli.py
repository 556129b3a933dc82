"""Command-line subcommands and exit codes."""

from __future__ import annotations

import pytest
import yaml

from cli import main
from conftest import CORPUS_NAMES
from corpus import corpus_entry


def _source(name: str) -> str:
    return str(corpus_entry(name).source)


@pytest.fixture
def graph_file(tmp_path):
    path = tmp_path / "g.el"
    assert main(["gen-graph", "--kind", "uniform", "--nodes", "30", "--edges", "90",
                 "--seed", "4", "--out", str(path)]) == 0
    return path


def test_gen_graph_is_deterministic(tmp_path, capsys):
    args = ["gen-graph", "--kind", "rmat", "--nodes", "64", "--edges", "200", "--seed", "7"]
    assert main(args) == 0
    first = capsys.readouterr().out
    assert main(args) == 0
    assert capsys.readouterr().out == first
    assert first.startswith("# nodes: 64\n# directed: 0\n")


def test_gen_graph_summary(capsys):
    assert main(["gen-graph", "--kind", "uniform", "--nodes", "10", "--edges", "20",
                 "--seed", "1", "--directed", "--summary"]) == 0
    summary = yaml.safe_load(capsys.readouterr().err)
    assert summary["nodes"] == 10
    assert summary["directed"] is True


def test_gen_graph_bad_rmat(capsys):
    assert main(["gen-graph", "--kind", "rmat", "--nodes", "8", "--edges", "8", "--seed", "0",
                 "--a", "0.9"]) == 1
    assert "RMAT probabilities" in capsys.readouterr().err


def test_gen_graph_diagonal_rmat_fails_fast(capsys):
    assert main(["gen-graph", "--kind", "rmat", "--nodes", "16", "--edges", "8", "--seed", "1",
                 "--a", "1", "--b", "0", "--c", "0", "--d", "0"]) == 1
    assert "off the diagonal" in capsys.readouterr().err


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_compile_all_backends(tmp_path, capsys, name):
    assert main(["compile", _source(name), "--backend", "all", "--out", str(tmp_path),
                 "--emit-analysis"]) == 0
    written = sorted(p.name for p in tmp_path.iterdir())
    assert written == sorted([f"{name}_cuda.cu", f"{name}_openacc.cpp", f"{name}_sycl.cpp",
                              f"{name}_opencl.cpp", f"{name}_opencl.cl",
                              f"{name}_analysis.yml"])
    assert capsys.readouterr().err == ""


def test_compile_is_deterministic(tmp_path):
    for out in ("a", "b"):
        assert main(["compile", _source("sssp"), "--backend", "cuda",
                     "--out", str(tmp_path / out)]) == 0
    first = (tmp_path / "a" / "sssp_cuda.cu").read_text()
    assert first == (tmp_path / "b" / "sssp_cuda.cu").read_text()


def test_compile_num_threads(tmp_path):
    assert main(["compile", _source("tc"), "--backend", "cuda", "--out", str(tmp_path),
                 "--num-threads", "128"]) == 0
    assert "threadsPerBlock = 128;" in (tmp_path / "tc_cuda.cu").read_text()


def test_compile_config_error(tmp_path, capsys):
    config = tmp_path / "bad.yml"
    config.write_text("threads: 3\n")
    assert main(["compile", _source("tc"), "--backend", "cuda", "--out", str(tmp_path),
                 "--config", str(config)]) == 1
    assert "unknown codegen option" in capsys.readouterr().err


def test_compile_reports_diagnostic_position(tmp_path, capsys):
    program = tmp_path / "broken.sp"
    program.write_text("function f(Graph g) {\n    int x = ;\n}\n")
    assert main(["compile", str(program), "--backend", "cuda", "--out", str(tmp_path)]) == 1
    err = capsys.readouterr().err
    assert err.startswith(f"{program}:2:")
    assert ": error: " in err


def test_compile_prints_race_warning(tmp_path, capsys):
    program = tmp_path / "race.sp"
    program.write_text("function f(Graph g) {\n    int x = 0;\n"
                       "    forall (v in g.nodes()) { x = 1; }\n}\n")
    assert main(["compile", str(program), "--backend", "openacc", "--out", str(tmp_path)]) == 0
    assert f"{program}:3:" in capsys.readouterr().err


def test_unsupported_construct_exits_1(tmp_path, capsys):
    program = tmp_path / "loop.sp"
    program.write_text("function f(Graph g, propNode<int> p) {\n"
                       "    forall (v in g.nodes()) { int c = 0; while (c < 2) { c = c + 1; } }\n"
                       "}\n")
    assert main(["compile", str(program), "--backend", "sycl", "--out", str(tmp_path)]) == 1
    assert "no template for while" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    [],
    ["compile"],
    ["compile", "x.sp", "--backend", "vulkan", "--out", "o"],
    ["gen-graph", "--kind", "grid", "--nodes", "1", "--edges", "1", "--seed", "0"],
    ["run", "x.sp"],
])
def test_usage_errors_exit_2(argv):
    with pytest.raises(SystemExit) as info:
        main(argv)
    assert info.value.code == 2


def test_missing_program_file(tmp_path, capsys):
    assert main(["analyze", str(tmp_path / "absent.sp")]) == 1
    assert "graphdsl: error:" in capsys.readouterr().err


# ── run / check / analyze ────────────────────────────────────────────────────

def test_run_prints_state(graph_file, capsys):
    assert main(["run", _source("tc"), "--graph", str(graph_file)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[-1].startswith("return\t")


def test_run_modes_agree(graph_file, capsys):
    outputs = []
    for mode in ("seq", "par"):
        assert main(["run", _source("sssp"), "--graph", str(graph_file), "--mode", mode,
                     "--arg", "src=3", "--threads", "2"]) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]
    assert "dist\t3\t0" in outputs[0].splitlines()


def test_run_bad_argument(graph_file, capsys):
    assert main(["run", _source("sssp"), "--graph", str(graph_file), "--arg", "src=99"]) == 1
    assert "not a node" in capsys.readouterr().err


def test_run_malformed_argument(graph_file):
    with pytest.raises(SystemExit) as info:
        main(["run", _source("sssp"), "--graph", str(graph_file), "--arg", "src"])
    assert info.value.code == 2


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_check_passes(graph_file, capsys, name):
    assert main(["check", _source(name), "--graph", str(graph_file)]) == 0
    assert "PASS" in capsys.readouterr().out


def test_check_with_source_subset(graph_file, capsys):
    assert main(["check", _source("bc"), "--graph", str(graph_file),
                 "--arg", "sourceSet=0,2,5", "--mode", "par"]) == 0
    assert "PASS" in capsys.readouterr().out


def test_check_needs_a_corpus_program(tmp_path, graph_file, capsys):
    program = tmp_path / "mine.sp"
    program.write_text("function mine(Graph g) { }\n")
    assert main(["check", str(program), "--graph", str(graph_file)]) == 1
    assert "not a corpus program" in capsys.readouterr().err


def test_bad_edge_list_names_the_graph_file(tmp_path, capsys):
    graph = tmp_path / "bad.el"
    graph.write_text("0 1\n2\n")
    assert main(["run", _source("tc"), "--graph", str(graph)]) == 1
    assert capsys.readouterr().err.startswith(f"{graph}:2:")


def test_analyze_stdout(capsys):
    assert main(["analyze", _source("tc")]) == 0
    report = yaml.safe_load(capsys.readouterr().out)
    assert report["function"] == "Compute_TC"
    assert report["reductions"][0]["target"] == "count"


def test_analyze_to_file(tmp_path, capsys):
    out = tmp_path / "pr.yml"
    assert main(["analyze", _source("pr"), "--out", str(out)]) == 0
    assert capsys.readouterr().out.strip() == str(out)
    assert yaml.safe_load(out.read_text())["function"] == "Compute_PR"


def test_verbose_logs_to_stderr(capsys):
    assert main(["analyze", _source("tc"), "-v"]) == 0
    assert "[CLI]" in capsys.readouterr().err
