"""CSR construction, queries, edge-list files and synthetic generators."""

from __future__ import annotations

import networkx as nx
import numpy as np
import pytest

from conftest import QUICK_SEEDS, SLOW_SEEDS, random_graph
from csr import (
    assign_random_weights,
    build_from_edges,
    degree_summary,
    erdos_renyi,
    format_edge_list,
    generate_graph,
    graph_hash,
    in_neighbors,
    is_edge,
    load_edge_list,
    neighbors,
    parse_edge_list,
    rmat_edges,
    transpose,
    write_edge_list,
)
from errors import ConfigError, EdgeListError, InvalidEdge, NegativeWeight


def test_small_directed_graph():
    g = build_from_edges(3, [(0, 1), (0, 2), (1, 2)])
    np.testing.assert_array_equal(g.offsets, [0, 2, 3, 3])
    np.testing.assert_array_equal(g.dests, [1, 2, 2])
    np.testing.assert_array_equal(g.weights, [1, 1, 1])
    assert [src for src, _, _ in in_neighbors(g, 2)] == [0, 1]


def test_single_node_without_edges():
    g = build_from_edges(1, [])
    np.testing.assert_array_equal(g.offsets, [0, 0])
    assert g.m == 0
    assert neighbors(g, 0) == []


def test_undirected_k4(k4):
    assert (k4.n, k4.m) == (4, 12)
    assert all(k4.out_degree(v) == 3 and k4.in_degree(v) == 3 for v in range(4))
    assert degree_summary(k4) == {"nodes": 4, "edges": 12, "directed": False,
                                  "avg_degree": 3.0, "max_degree": 3}


def test_duplicates_keep_minimum_weight():
    g = build_from_edges(2, [(0, 1, 9), (0, 1, 4), (0, 1, 6)])
    assert g.edges() == [(0, 1, 4)]


@pytest.mark.parametrize("edges, error", [
    ([(0, 3)], InvalidEdge),
    ([(-1, 0)], InvalidEdge),
    ([(0, 1, -2)], NegativeWeight),
    ([(0, 1, 2**31)], InvalidEdge),
])
def test_invalid_edges(edges, error):
    with pytest.raises(error):
        build_from_edges(3, edges)


def test_arrays_are_read_only(k4):
    with pytest.raises(ValueError):
        k4.dests[0] = 3


# ── Weights ──────────────────────────────────────────────────────────────────

def test_constant_weight_range(k4):
    g = assign_random_weights(k4, lo=7, hi=7, seed=3)
    assert set(g.weights.tolist()) == {7}


def test_weights_are_seeded(k4):
    a = assign_random_weights(k4, seed=11)
    b = assign_random_weights(k4, seed=11)
    assert a == b
    assert graph_hash(a) == graph_hash(b)


def test_undirected_weights_are_symmetric():
    g = random_graph(4)
    for u, v, w in g.edges():
        assert g.weights[g.edge_id(v, u)] == w


def test_weight_mean():
    g = generate_graph("uniform", 5000, 10_000, seed=1, directed=True)
    assert g.weights.min() >= 1 and g.weights.max() <= 100
    assert 45 <= g.weights.mean() <= 56


@pytest.mark.parametrize("lo, hi, error", [(5, 4, ConfigError), (-1, 4, NegativeWeight),
                                          (1, 2**31, ConfigError)])
def test_bad_weight_range(k4, lo, hi, error):
    with pytest.raises(error):
        assign_random_weights(k4, lo, hi)


# ── Structure ────────────────────────────────────────────────────────────────

def _check_structure(g):
    assert g.offsets[0] == 0 and g.offsets[-1] == len(g.dests)
    assert np.all(np.diff(g.offsets) >= 0)
    for v in range(g.n):
        row = g.dests[g.offsets[v]:g.offsets[v + 1]]
        assert np.all(np.diff(row) > 0)
    assert np.diff(g.offsets).sum() == np.diff(g.rev_offsets).sum() == g.m
    np.testing.assert_array_equal(g.dests[g.rev_eid], np.repeat(np.arange(g.n),
                                                                 np.diff(g.rev_offsets)))


def _check_against_matrix(g):
    matrix = np.zeros((g.n, g.n), dtype=bool)
    matrix[g.srcs, g.dests] = True
    reference = nx.DiGraph()
    reference.add_nodes_from(range(g.n))
    reference.add_edges_from(zip(g.srcs.tolist(), g.dests.tolist()))
    for u in range(g.n):
        for v in range(g.n):
            assert is_edge(g, u, v) == matrix[u, v] == reference.has_edge(u, v)


@pytest.mark.parametrize("seed", QUICK_SEEDS)
def test_random_graph_structure(seed):
    g = random_graph(seed, max_nodes=30)
    _check_structure(g)
    _check_against_matrix(g)
    assert transpose(transpose(g)) == g


@pytest.mark.slow
@pytest.mark.parametrize("seed", SLOW_SEEDS)
def test_random_graph_structure_sweep(seed):
    g = random_graph(seed, max_nodes=30)
    _check_structure(g)
    _check_against_matrix(g)
    assert transpose(transpose(g)) == g


def test_transpose_reverses_edges():
    g = build_from_edges(3, [(0, 1, 2), (1, 2, 3)])
    assert transpose(g).edges() == [(1, 0, 2), (2, 1, 3)]
    assert transpose(g) != g


def test_undirected_graph_is_its_own_transpose(k4):
    assert transpose(k4) == k4


def test_erdos_renyi_matches_edge_probability():
    g = erdos_renyi(200, 0.1, seed=5)
    density = g.m / (200 * 199)
    assert 0.08 < density < 0.12
    assert not any(is_edge(g, v, v) for v in range(g.n))


# ── Edge-list files ──────────────────────────────────────────────────────────

def test_parse_with_headers():
    g = parse_edge_list("# nodes: 5\n# directed: 1\n# a comment\n0 1 3\n\n3 4\n")
    assert (g.n, g.directed) == (5, True)
    assert g.edges() == [(0, 1, 3), (3, 4, 1)]


def test_parse_defaults_to_undirected():
    g = parse_edge_list("0 1\n1 2\n")
    assert not g.directed
    assert g.m == 4


def test_remap_compacts_ids():
    g = parse_edge_list("10 20\n20 30\n", directed=True, remap=True)
    assert g.n == 3
    assert g.edges() == [(0, 1, 1), (1, 2, 1)]


@pytest.mark.parametrize("text, message, line", [
    ("0 1\n1\n", "expected 'u v", 2),
    ("0 x\n", "integers", 1),
    ("0 1 -3\n", "negative weight", 1),
    ("0 1 2\n1 2 4294967296\n", "32-bit limit", 2),
    ("0 -1\n", "non-negative", 1),
    ("# nodes: two\n", "needs an integer", 1),
    ("# nodes: 2\n0 5\n", "out of range", 2),
])
def test_edge_list_errors(text, message, line):
    with pytest.raises(EdgeListError, match=message) as info:
        parse_edge_list(text)
    assert info.value.span.line == line


def test_write_then_load(tmp_path):
    g = random_graph(3)
    path = tmp_path / "g.el"
    write_edge_list(g, path)
    assert load_edge_list(path) == g
    assert format_edge_list(load_edge_list(path)) == path.read_text()


# ── Generators ───────────────────────────────────────────────────────────────

def test_generators_are_deterministic():
    for kind in ("uniform", "rmat"):
        a = generate_graph(kind, 64, 256, seed=9)
        b = generate_graph(kind, 64, 256, seed=9)
        assert graph_hash(a) == graph_hash(b)
    assert graph_hash(generate_graph("rmat", 64, 256, seed=9)) != \
        graph_hash(generate_graph("rmat", 64, 256, seed=10))


def test_rmat_is_skewed():
    g = generate_graph("rmat", 1024, 8192, seed=2, directed=True)
    degrees = np.diff(g.offsets)
    assert degrees.max() > 5 * degrees.mean()


def test_rmat_endpoints_in_range():
    pairs = rmat_edges(100, 500, seed=1)
    assert pairs.shape == (500, 2)
    assert pairs.min() >= 0 and pairs.max() < 100
    assert np.all(pairs[:, 0] != pairs[:, 1])


@pytest.mark.parametrize("probabilities", [(0.5, 0.5, 0.5, -0.5), (0.3, 0.3, 0.3, 0.3)])
def test_rmat_probabilities_are_validated(probabilities):
    a, b, c, d = probabilities
    with pytest.raises(ConfigError, match="RMAT"):
        rmat_edges(16, 10, seed=0, a=a, b=b, c=c, d=d)


@pytest.mark.parametrize("probabilities", [(1.0, 0.0, 0.0, 0.0), (0.6, 0.0, 0.0, 0.4)])
def test_rmat_all_mass_on_the_diagonal(probabilities):
    a, b, c, d = probabilities
    with pytest.raises(ConfigError, match="off the diagonal"):
        rmat_edges(16, 8, seed=1, a=a, b=b, c=c, d=d)


def test_rmat_with_no_reachable_pair_gives_up():
    # every sampled column is 3, outside a 3-node graph
    with pytest.raises(ConfigError, match="place no edges"):
        rmat_edges(3, 4, seed=0, a=0.0, b=0.5, c=0.0, d=0.5)


def test_rmat_without_edges():
    assert rmat_edges(16, 0, seed=0).shape == (0, 2)


def test_unknown_generator():
    with pytest.raises(ConfigError, match="unknown graph kind"):
        generate_graph("smallworld", 10, 10, seed=0)
