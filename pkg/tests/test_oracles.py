"""Reference algorithms, cross-checked against networkx on small graphs."""

from __future__ import annotations

import networkx as nx
import numpy as np
import pytest

from conftest import QUICK_SEEDS, random_graph
from constants import INF_BY_TYPE
from csr import build_from_edges
from errors import ConfigError, GraphTooLarge
from oracles import (
    compare,
    oracle_bc,
    oracle_pr,
    oracle_sssp,
    oracle_tc,
    run_oracle,
)


def to_networkx(g):
    reference = nx.DiGraph() if g.directed else nx.Graph()
    reference.add_nodes_from(range(g.n))
    for u, v, w in g.edges():
        reference.add_edge(u, v, weight=w)
    return reference


def test_k4(k4):
    assert oracle_tc(k4) == 4
    np.testing.assert_array_equal(oracle_sssp(k4, 0), [0, 1, 1, 1])
    np.testing.assert_allclose(oracle_bc(k4, range(4)), np.zeros(4))
    np.testing.assert_allclose(oracle_pr(k4), np.full(4, 0.25))


def test_single_node():
    g = build_from_edges(1, [])
    assert oracle_tc(g) == 0
    assert oracle_sssp(g, 0).tolist() == [0]
    assert oracle_bc(g, [0]).tolist() == [0.0]
    np.testing.assert_allclose(oracle_pr(g), [1.0])


def test_path_bc(path3):
    np.testing.assert_allclose(oracle_bc(path3, range(3)), [0.0, 2.0, 0.0])
    np.testing.assert_allclose(oracle_bc(path3, [0]), [0.0, 1.0, 0.0])


def test_two_cycle_pr(two_cycle):
    np.testing.assert_allclose(oracle_pr(two_cycle), [0.5, 0.5])


def test_cycle_bc_is_uniform():
    g = build_from_edges(6, [(v, (v + 1) % 6) for v in range(6)], directed=False)
    bc = oracle_bc(g, range(6))
    np.testing.assert_allclose(bc, np.full(6, bc[0]))
    assert bc[0] > 0


def test_dangling_mass_is_spread():
    g = build_from_edges(3, [(0, 1), (1, 2)], directed=True)
    rank = oracle_pr(g, eps=1e-12, max_iter=1000)
    assert rank.sum() == pytest.approx(1.0)
    assert rank[0] < rank[1] < rank[2]


def test_unreachable_is_inf():
    g = build_from_edges(3, [(0, 1, 2)], directed=True)
    assert oracle_sssp(g, 0).tolist() == [0, 2, INF_BY_TYPE["int"]]


@pytest.mark.parametrize("seed", QUICK_SEEDS)
def test_against_networkx(seed):
    g = random_graph(seed, max_nodes=40)
    reference = to_networkx(g)

    lengths = nx.single_source_dijkstra_path_length(reference, 0)
    dist = oracle_sssp(g, 0)
    for v in range(g.n):
        assert dist[v] == lengths.get(v, INF_BY_TYPE["int"])

    assert oracle_tc(g) == sum(nx.triangles(reference).values()) // 3

    # networkx halves undirected scores; the oracle counts ordered pairs
    expected = nx.betweenness_centrality(reference, normalized=False)
    np.testing.assert_allclose(oracle_bc(g, range(g.n)),
                               [2 * expected[v] for v in range(g.n)], rtol=1e-9, atol=1e-9)

    np.testing.assert_allclose(oracle_pr(g, eps=1e-12, max_iter=1000),
                               stationary_rank(reference), atol=1e-6)


def stationary_rank(reference, d: float = 0.85) -> np.ndarray:
    """Exact PageRank vector from a linear solve over the dense adjacency matrix."""
    adj = nx.to_numpy_array(reference, nodelist=sorted(reference), weight=None)
    n = len(adj)
    out_degree = adj.sum(axis=1)
    dangling = out_degree == 0
    transition = np.divide(adj, out_degree[:, None], out=np.zeros_like(adj),
                           where=~dangling[:, None])
    transition[dangling] = 1.0 / n
    system = np.eye(n) - d * transition.T
    return np.linalg.solve(system, np.full(n, (1 - d) / n))


def test_tc_size_guard():
    g = build_from_edges(300, [(0, 1)], directed=False)
    with pytest.raises(GraphTooLarge, match="256"):
        oracle_tc(g)


def test_bad_source(path3):
    with pytest.raises(ConfigError):
        oracle_sssp(path3, 5)
    with pytest.raises(ConfigError):
        oracle_bc(path3, [9])


def test_run_oracle_dispatch(k4):
    result = run_oracle("bc", k4, {"sourceSet": "all"})
    assert result.algorithm == "bc"
    assert result.to_dict()["values"] == [0.0, 0.0, 0.0, 0.0]
    assert run_oracle("tc", k4, {}).values == 4
    with pytest.raises(ConfigError, match="no oracle"):
        run_oracle("mst", k4, {})


# ── Comparison ───────────────────────────────────────────────────────────────

def test_exact_comparison_reports_mismatches():
    report = compare("sssp", [0, 3, 5], [0, 3, 4])
    assert not report.passed
    assert report.mismatches == [2]
    assert "FAIL" in report.format()
    assert "mismatching nodes: 2" in report.format()


def test_relative_comparison():
    assert compare("bc", [1e6 * (1 + 1e-10)], [1e6]).passed
    assert not compare("bc", [1.0 + 1e-6], [1.0]).passed


def test_absolute_comparison():
    assert compare("pr", [0.25 + 5e-7], [0.25]).passed
    assert not compare("pr", [0.25 + 5e-6], [0.25]).passed


def test_shape_mismatch_fails():
    assert not compare("sssp", [0, 1], [0, 1, 2]).passed


def test_scalar_comparison():
    assert compare("tc", 4, 4).passed
    assert "PASS" in compare("tc", 4, 4).format()
