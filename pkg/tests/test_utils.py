"""Report comparison and golden snapshot maintenance scripts."""

from __future__ import annotations

from pathlib import Path

import yaml

from utils import compare_yamls, update_golden


def _write(path: Path, data) -> Path:
    path.write_text(yaml.safe_dump(data, sort_keys=False))
    return path


def test_identical_reports(tmp_path, capsys):
    data = {"function": "f", "regions": [{"id": 0, "copy_in": ["a"]}], "warnings": []}
    a = _write(tmp_path / "a.yml", data)
    b = _write(tmp_path / "b.yml", data)
    assert compare_yamls.main([str(a), str(b)]) == 0
    assert "identical" in capsys.readouterr().out


def test_changed_value(tmp_path, capsys):
    a = _write(tmp_path / "a.yml", {"regions": [{"id": 0, "kind": "forall"}]})
    b = _write(tmp_path / "b.yml", {"regions": [{"id": 0, "kind": "bfs"}]})
    assert compare_yamls.main([str(a), str(b)]) == 1
    out = capsys.readouterr().out
    assert "[Values that are different]" in out
    assert "Old: forall" in out and "New: bfs" in out


def test_warning_file_names_are_ignored(tmp_path):
    a = _write(tmp_path / "a.yml", {"warnings": ["a.sp:3:5: warning: data race"]})
    b = _write(tmp_path / "b.yml", {"warnings": ["b.sp:3:5: warning: data race"]})
    assert compare_yamls.compare_reports(a, b)


def test_usage(capsys):
    assert compare_yamls.main(["only-one.yml"]) == 2
    assert "Usage" in capsys.readouterr().out


def test_expected_files_cover_every_backend():
    files = update_golden.expected_files("tc")
    names = sorted(str(p) for p in files)
    assert names == sorted([
        "tc/analysis.yml",
        "tc/cuda/tc_cuda.cu",
        "tc/openacc/tc_openacc.cpp",
        "tc/sycl/tc_sycl.cpp",
        "tc/opencl/tc_opencl.cpp",
        "tc/opencl/tc_opencl.cl",
    ])


def test_update_then_check(tmp_path, capsys):
    assert update_golden.main(["--out", str(tmp_path), "--check"]) == 1
    assert "stale" in capsys.readouterr().out
    assert update_golden.main(["--out", str(tmp_path)]) == 0
    assert (tmp_path / "sssp" / "cuda" / "sssp_cuda.cu").exists()
    capsys.readouterr()
    assert update_golden.main(["--out", str(tmp_path), "--check"]) == 0
    assert capsys.readouterr().out == ""
