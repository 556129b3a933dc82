"""Shared fixtures: hand-checkable graphs, seeded random graphs and the corpus."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pytest

from corpus import CorpusEntry, list_corpus, load_corpus
from csr import CsrGraph, build_from_edges, generate_graph
from frontend import parse_source
from semantic import Analyses, AnnotatedProgram, analyze, type_check

# quick sweeps run by default, the full sweeps only with --runslow
QUICK_SEEDS = range(8)
SLOW_SEEDS = range(200)


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the 200-seed randomized sweeps")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)


# ── Hand graphs ──────────────────────────────────────────────────────────────

@pytest.fixture
def k4() -> CsrGraph:
    edges = [(u, v) for u in range(4) for v in range(u + 1, 4)]
    return build_from_edges(4, edges, directed=False)


@pytest.fixture
def weighted_triangle() -> CsrGraph:
    return build_from_edges(3, [(0, 1, 5), (1, 2, 1), (0, 2, 7)], directed=False)


@pytest.fixture
def path3() -> CsrGraph:
    return build_from_edges(3, [(0, 1), (1, 2)], directed=False)


@pytest.fixture
def two_cycle() -> CsrGraph:
    return build_from_edges(2, [(0, 1), (1, 0)], directed=True)


def random_graph(seed: int, max_nodes: int = 60) -> CsrGraph:
    """Undirected weighted graph; even seeds are uniform, odd seeds RMAT-skewed."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_nodes + 1))
    m = int(rng.integers(n, 4 * n + 1))
    kind = "uniform" if seed % 2 == 0 else "rmat"
    return generate_graph(kind, n, m, seed, directed=False)


@pytest.fixture
def graph_factory():
    return random_graph


# ── Programs ─────────────────────────────────────────────────────────────────

@dataclass
class Compiled:
    annotated: AnnotatedProgram
    analyses: Analyses
    entry: CorpusEntry | None = None


def compile_source(source: str, entry: str | None = None) -> Compiled:
    annotated = type_check(parse_source(source), entry=entry)
    return Compiled(annotated, analyze(annotated))


@pytest.fixture
def compile_dsl():
    return compile_source


@pytest.fixture(scope="session")
def corpus() -> dict[str, Compiled]:
    result = {}
    for entry in list_corpus():
        program, entry = load_corpus(entry.name)
        annotated = type_check(program, entry=entry.function)
        result[entry.name] = Compiled(annotated, analyze(annotated), entry)
    return result


CORPUS_NAMES = ["bc", "pr", "sssp", "tc"]
