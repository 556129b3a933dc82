"""Corpus manifest, census and size limits."""

from __future__ import annotations

import pytest

from conftest import CORPUS_NAMES
from corpus import (
    census,
    code_lines,
    corpus_entry,
    default_args,
    find_entry,
    list_corpus,
    load_corpus,
)
from csr import build_from_edges
from errors import ConfigError, UnknownCorpusEntry


def test_four_entries():
    assert [e.name for e in list_corpus()] == CORPUS_NAMES


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_census_matches_manifest(name):
    program, entry = load_corpus(name)
    assert census(program) == entry.census


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_programs_fit_their_line_limit(name):
    entry = corpus_entry(name)
    assert code_lines(entry.read_source()) <= entry.max_lines


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_entry_function_exists(name):
    program, entry = load_corpus(name)
    assert entry.function in [fn.name for fn in program.functions]


def test_code_lines_skips_comments_and_blanks():
    assert code_lines("// header\n\nint x;\n   // indented\nx = 1; // trailing\n") == 2


def test_unknown_entry():
    with pytest.raises(UnknownCorpusEntry, match="known: bc, pr, sssp, tc"):
        corpus_entry("mst")


def test_find_entry():
    entry = corpus_entry("sssp")
    assert find_entry(entry.source).name == "sssp"
    assert find_entry(entry.source.with_name("missing.sp")) is None


def test_default_args_expand_all(path3):
    args = default_args(corpus_entry("bc"), path3)
    assert list(args["sourceSet"]) == [0, 1, 2]
    assert default_args(corpus_entry("sssp"), path3, {"src": 2}) == {"src": 2}


def test_tolerance_comes_from_the_oracle():
    assert corpus_entry("pr").tolerance == ("absolute", 1e-6)
    assert corpus_entry("tc").tolerance == ("exact", 0.0)


def test_entry_round_trips_through_dict():
    entry = corpus_entry("pr")
    data = entry.to_dict()
    assert data["source"] == "pr.sp"
    assert data["args"]["maxIter"] == 100


def test_missing_manifest(tmp_path):
    with pytest.raises(ConfigError, match="no corpus manifest"):
        list_corpus(tmp_path)


def test_incomplete_entry(tmp_path):
    (tmp_path / "corpus.yml").write_text("x:\n  source: x.sp\n")
    with pytest.raises(ConfigError, match="missing"):
        list_corpus(tmp_path)


def test_manifest_must_be_a_mapping(tmp_path):
    (tmp_path / "corpus.yml").write_text("- a\n- b\n")
    with pytest.raises(ConfigError, match="mapping"):
        list_corpus(tmp_path)


def test_empty_graph_args():
    g = build_from_edges(0, [])
    assert list(default_args(corpus_entry("bc"), g)["sourceSet"]) == []
