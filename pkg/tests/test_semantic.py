"""Type checking and the transfer / reduction / fixed-point analyses."""

from __future__ import annotations

import pytest
import yaml

from conftest import CORPUS_NAMES, compile_source
from dsl_ast import MinMaxAssign, walk
from errors import DataRaceWarning, TypeCheckError
from frontend import parse_source
from semantic import analysis_report, analyze, type_check


def _check(body: str, params: str = "Graph g"):
    return type_check(parse_source(f"function f({params}) {{ {body} }}"))


# ── Type checking ────────────────────────────────────────────────────────────

@pytest.mark.parametrize("body, message", [
    ("int x = 0; x ||= True;", "Any reduction needs a bool target"),
    ("g.attachNodeProperty(dist = INF);", "undeclared property"),
    ("y = 1;", "undeclared symbol"),
    ("int x; int x;", "already declared"),
    ("int x = 0; fixedPoint until (x: !x) { }", "must be a bool variable"),
])
def test_type_errors(body, message):
    with pytest.raises(TypeCheckError, match=message) as info:
        _check(body)
    assert info.value.span is not None


def test_property_on_non_node_is_rejected():
    with pytest.raises(TypeCheckError, match="non-node"):
        _check("int x = 0; int y = x.p;", "Graph g, propNode<int> p")


def test_shadowing_in_nested_scope_is_allowed():
    annotated = _check("int x = 0; forall (v in g.nodes()) { int x = 1; }")
    assert [s.name for s in annotated.symbols].count("x") == 2


def test_duplicate_function_is_rejected():
    with pytest.raises(TypeCheckError, match="defined twice"):
        type_check(parse_source("function f(Graph g) { } function f(Graph g) { }"))


def test_unknown_entry():
    with pytest.raises(TypeCheckError, match="no function named"):
        type_check(parse_source("function f(Graph g) { }"), entry="g")


def test_input_program_is_not_modified():
    program = parse_source("function f(Graph g, propNode<int> p) { forall (v in g.nodes()) { v.p = 1; } }")
    before = repr(program)
    type_check(program)
    assert repr(program) == before


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_corpus_type_checks(corpus, name):
    compiled = corpus[name]
    assert compiled.annotated.name == compiled.entry.function


# ── Transfers ────────────────────────────────────────────────────────────────

def test_sssp_region_sets(corpus):
    (region,) = corpus["sssp"].analyses.transfers.regions
    assert region.kind == "forall"
    assert region.copy_in == {"dist", "finished", "modified"}
    assert region.copy_out == {"dist", "finished", "modified"}
    assert region.graph_symbols == {"offsets", "dests", "weights"}
    assert "weight" not in region.copy_in


def test_sssp_transfers_are_hoisted_out_of_the_fixed_point(corpus):
    spans = corpus["sssp"].analyses.transfers.spans
    promoted = [s for s in spans if s.promoted]
    inner = [s for s in spans if not s.promoted]
    assert len(promoted) == 1 and len(inner) == 1
    assert promoted[0].symbols_in == {"dist", "modified"}
    assert promoted[0].symbols_out == {"dist", "modified"}
    assert inner[0].symbols_in == {"finished"}
    assert inner[0].symbols_out == {"finished"}


def test_tc_region_sets(corpus):
    (region,) = corpus["tc"].analyses.transfers.regions
    assert "count" in region.copy_in and "count" in region.copy_out
    assert region.graph_symbols == {"offsets", "dests"}
    assert {"u", "w"} <= region.device_only


def test_pr_regions(corpus):
    regions = corpus["pr"].analyses.transfers.regions
    assert [r.kind for r in regions] == ["forall", "forall", "copy"]
    assert regions[2].full_writes == {"pageRank"}
    assert {"rev_offsets", "rev_srcs", "offsets"} <= regions[1].graph_symbols


def test_bc_regions(corpus):
    regions = corpus["bc"].analyses.transfers.regions
    assert [r.kind for r in regions] == ["bfs", "reverse"]
    assert regions[0].graph_symbols >= {"offsets", "dests"}


def test_empty_forall_transfers_nothing():
    regions = compile_source(
        "function f(Graph g, propNode<int> p) { forall (v in g.nodes()) { } }"
    ).analyses.transfers.regions
    assert regions[0].copy_in == frozenset()
    assert regions[0].copy_out == frozenset()


def test_full_write_is_not_copied_in():
    (region,) = compile_source(
        "function f(Graph g, propNode<int> p) { forall (v in g.nodes()) { v.p = 1; } }"
    ).analyses.transfers.regions
    assert region.full_writes == {"p"}
    assert "p" not in region.copy_in
    assert region.copy_out == {"p"}


def test_filtered_write_is_copied_in():
    (region,) = compile_source(
        "function f(Graph g, propNode<int> p) {"
        " forall (v in g.nodes().filter(v > 0)) { v.p = 1; } }"
    ).analyses.transfers.regions
    assert region.copy_in == {"p"}


def test_adjacent_regions_share_one_scope():
    transfers = compile_source("""
    function f(Graph g, propNode<int> a, propNode<int> b) {
        forall (v in g.nodes()) { v.a = 1; }
        forall (v in g.nodes()) { v.b = v.a; }
    }
    """).analyses.transfers
    (scope,) = transfers.scopes
    assert scope.regions == (0, 1)
    assert scope.copy_in == {"a"}
    assert scope.copy_out == {"a", "b"}


def test_host_write_between_regions_splits_the_scope():
    transfers = compile_source("""
    function f(Graph g, propNode<int> a) {
        int x = 1;
        forall (v in g.nodes()) { v.a = x; }
        x = 2;
        forall (v in g.nodes()) { v.a = x; }
    }
    """).analyses.transfers
    assert [s.regions for s in transfers.scopes] == [(0,), (1,)]


def test_symbols_on_device_is_the_union(corpus):
    transfers = corpus["sssp"].analyses.transfers
    assert transfers.symbols_on_device() == ["dist", "finished", "modified"]


# ── Reductions ───────────────────────────────────────────────────────────────

def _reductions(analyses):
    return [(r.target, r.operator, r.region, r.is_fixed_point_flag) for r in analyses.reductions]


def test_sssp_reductions(corpus):
    assert _reductions(corpus["sssp"].analyses) == [("finished", "Any", 0, True)]


def test_tc_reductions(corpus):
    (red,) = corpus["tc"].analyses.reductions
    assert (red.target, red.operator, red.region, red.atomic) == ("count", "Sum", 0, True)


def test_pr_reductions(corpus):
    assert _reductions(corpus["pr"].analyses) == [("dangling", "Sum", 0, False),
                                                  ("converged", "Any", 1, True)]


def test_bc_reductions(corpus):
    assert _reductions(corpus["bc"].analyses) == [("sigma", "Sum", 0, False)]


def test_no_regions_no_reductions():
    analyses = compile_source("function f(Graph g) { int x = 0; x += 1; return x; }").analyses
    assert analyses.transfers.regions == []
    assert analyses.reductions == []


def test_region_local_reduction_is_not_atomic():
    (red,) = compile_source("""
    function f(Graph g, propNode<int> p) {
        forall (v in g.nodes()) {
            int c = 0;
            for (w in g.neighbors(v)) { c += 1; }
            v.p = c;
        }
    }
    """).analyses.reductions
    assert red.target == "c"
    assert not red.atomic


# ── Fixed points ─────────────────────────────────────────────────────────────

def test_sssp_fixed_point(corpus):
    (fp,) = corpus["sssp"].analyses.fixed_points
    assert (fp.flag, fp.property, fp.polarity) == ("finished", "modified", "all-false")
    assert fp.fused and fp.converged_value is False
    modes = {type(s.stmt).__name__: s.mode for s in fp.fused_update_sites if s.region == 0}
    assert modes == {"Assign": "never", "MinMaxAssign": "always"}


def test_pr_fixed_point(corpus):
    (fp,) = corpus["pr"].analyses.fixed_points
    assert (fp.flag, fp.property, fp.polarity) == ("converged", "moving", "all-false")
    assert any(s.mode == "conditional" and s.region == 1 for s in fp.fused_update_sites)


@pytest.mark.parametrize("convergence, polarity", [
    ("!m", "all-false"),
    ("m", "all-true"),
    ("m == False", "all-false"),
    ("True != m", "all-false"),
    ("m == True", "all-true"),
])
def test_convergence_polarity(convergence, polarity):
    (fp,) = compile_source(f"""
    function f(Graph g, propNode<bool> m) {{
        bool done = False;
        fixedPoint until (done: {convergence}) {{
            forall (v in g.nodes()) {{ v.m = False; }}
        }}
    }}
    """).analyses.fixed_points
    assert fp.polarity == polarity


def test_fused_sites_lookup(corpus):
    analyses = corpus["sssp"].analyses
    minmax = next(n for n in walk(corpus["sssp"].annotated.entry) if isinstance(n, MinMaxAssign))
    ((fp, site),) = analyses.fused_sites(minmax)
    assert fp.flag == "finished"
    assert site.target_index == 1


# ── Warnings and report ──────────────────────────────────────────────────────

def test_data_race_warning():
    (warning,) = compile_source(
        "function f(Graph g) { int x = 0; forall (v in g.nodes()) { x = 1; } return x; }"
    ).analyses.warnings
    assert isinstance(warning, DataRaceWarning)
    assert (warning.symbol, warning.region, warning.severity) == ("x", 0, "warning")


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_corpus_has_no_warnings(corpus, name):
    assert corpus[name].analyses.warnings == []


@pytest.mark.parametrize("name", CORPUS_NAMES)
def test_analysis_is_deterministic(corpus, name):
    compiled = corpus[name]
    again = analyze(compiled.annotated)
    assert analysis_report(again) == analysis_report(compiled.analyses)


def test_report_is_yaml(corpus):
    report = yaml.safe_load(analysis_report(corpus["sssp"].analyses, file="sssp.sp"))
    assert report["function"] == "Compute_SSSP"
    assert report["regions"][0]["copy_in"] == ["dist", "finished", "modified"]
    assert report["reductions"] == [{"target": "finished", "operator": "Any", "region": 0,
                                     "fixed_point_flag": True}]
    assert report["warnings"] == []


def test_report_names_the_file_in_warnings():
    analyses = compile_source(
        "function f(Graph g) { int x = 0; forall (v in g.nodes()) { x = 1; } }").analyses
    report = yaml.safe_load(analysis_report(analyses, file="race.sp"))
    assert report["warnings"][0].startswith("race.sp:1:")
