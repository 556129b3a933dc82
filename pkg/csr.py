"""
csr.py
======
Immutable compressed-sparse-row graphs with forward and reverse adjacency.

The forward arrays (``offsets``, ``dests``, ``weights``) index out-edges by
source; the reverse arrays (``rev_offsets``, ``rev_srcs``, ``rev_eid``) index
in-edges by destination, ``rev_eid`` pointing back into the forward arrays.
Neighbor ranges are sorted ascending and free of duplicates, so edge lookup is
a binary search.

Edge-list files hold one ``u v [w]`` triple per line. ``#`` lines are comments,
except for the optional ``# nodes: N`` and ``# directed: 0|1`` headers.
"""

from __future__ import annotations

import hashlib
import math
import re
from collections.abc import Iterable
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from constants import (
    DEFAULT_MAX_WEIGHT,
    DEFAULT_MIN_WEIGHT,
    MAX_WEIGHT,
    RMAT_A,
    RMAT_B,
    RMAT_C,
    RMAT_D,
    RMAT_MAX_STALLED_ROUNDS,
)
from dsl_ast import Span
from errors import ConfigError, EdgeListError, InvalidEdge, NegativeWeight

_HEADER_RE = re.compile(r"#\s*(nodes|directed)\s*:\s*(\S+)\s*$")


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.ascontiguousarray(array, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class CsrGraph:
    n: int
    offsets: np.ndarray
    dests: np.ndarray
    weights: np.ndarray
    rev_offsets: np.ndarray
    rev_srcs: np.ndarray
    rev_eid: np.ndarray
    directed: bool = True

    @property
    def m(self) -> int:
        return int(self.offsets[-1])

    @property
    def srcs(self) -> np.ndarray:
        """Source node of every forward edge."""
        return np.repeat(np.arange(self.n, dtype=np.int64), np.diff(self.offsets))

    def out_degree(self, v: int) -> int:
        return int(self.offsets[v + 1] - self.offsets[v])

    def in_degree(self, v: int) -> int:
        return int(self.rev_offsets[v + 1] - self.rev_offsets[v])

    def edges(self) -> list[tuple[int, int, int]]:
        return list(zip(self.srcs.tolist(), self.dests.tolist(), self.weights.tolist()))

    def edge_id(self, u: int, v: int) -> int:
        """Forward index of edge (u, v), or -1."""
        lo, hi = int(self.offsets[u]), int(self.offsets[u + 1])
        i = lo + int(np.searchsorted(self.dests[lo:hi], v))
        return i if i < hi and int(self.dests[i]) == v else -1

    def __eq__(self, other) -> bool:
        if not isinstance(other, CsrGraph):
            return NotImplemented
        return (self.n == other.n and self.directed == other.directed
                and np.array_equal(self.offsets, other.offsets)
                and np.array_equal(self.dests, other.dests)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self) -> int:
        return hash(graph_hash(self))

    def __repr__(self) -> str:
        kind = "directed" if self.directed else "undirected"
        return f"CsrGraph(n={self.n}, m={self.m}, {kind})"


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def _edge_arrays(edges) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(edges, np.ndarray) and edges.ndim == 2:
        rows = edges
    else:
        rows = list(edges)
    if len(rows) == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty.copy(), empty.copy()
    us, vs, ws = [], [], []
    for row in rows:
        us.append(int(row[0]))
        vs.append(int(row[1]))
        ws.append(int(row[2]) if len(row) > 2 and row[2] is not None else DEFAULT_MIN_WEIGHT)
    return (np.asarray(us, dtype=np.int64), np.asarray(vs, dtype=np.int64),
            np.asarray(ws, dtype=np.int64))


def _from_sorted(n: int, us: np.ndarray, vs: np.ndarray, ws: np.ndarray,
                 directed: bool) -> CsrGraph:
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(us, minlength=n), out=offsets[1:])
    rev_order = np.lexsort((us, vs))
    rev_offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(vs, minlength=n), out=rev_offsets[1:])
    return CsrGraph(
        n=n,
        offsets=_frozen(offsets, np.int64),
        dests=_frozen(vs, np.int64),
        weights=_frozen(ws, np.int32),
        rev_offsets=_frozen(rev_offsets, np.int64),
        rev_srcs=_frozen(us[rev_order], np.int64),
        rev_eid=_frozen(rev_order, np.int64),
        directed=directed,
    )


def build_from_edges(n: int, edges: Iterable, directed: bool = True) -> CsrGraph:
    """Build a CSR graph from ``(u, v)`` or ``(u, v, w)`` tuples.

    Undirected edges are stored in both directions with the same weight.
    Duplicate ``(u, v)`` pairs keep the minimum weight; missing weights are 1.

    Raises
    ------
    InvalidEdge
        An endpoint is outside ``[0, n)`` or a weight exceeds ``MAX_WEIGHT``.
    NegativeWeight
        A weight is below zero.
    """
    if n < 0:
        raise InvalidEdge(f"node count must be non-negative, got {n}")
    us, vs, ws = _edge_arrays(edges)
    bad = (us < 0) | (us >= n) | (vs < 0) | (vs >= n)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise InvalidEdge(f"edge ({us[i]}, {vs[i]}) has an endpoint outside [0, {n})")
    if (ws < 0).any():
        i = int(np.flatnonzero(ws < 0)[0])
        raise NegativeWeight(f"edge ({us[i]}, {vs[i]}) has negative weight {ws[i]}")
    if (ws > MAX_WEIGHT).any():
        i = int(np.flatnonzero(ws > MAX_WEIGHT)[0])
        raise InvalidEdge(f"edge ({us[i]}, {vs[i]}) weight {ws[i]} exceeds the 32-bit "
                          f"weight limit {MAX_WEIGHT}")
    if not directed:
        us, vs, ws = np.concatenate([us, vs]), np.concatenate([vs, us]), np.concatenate([ws, ws])

    order = np.lexsort((ws, vs, us))
    us, vs, ws = us[order], vs[order], ws[order]
    keep = np.ones(len(us), dtype=bool)
    keep[1:] = (us[1:] != us[:-1]) | (vs[1:] != vs[:-1])
    return _from_sorted(n, us[keep], vs[keep], ws[keep], directed)


def with_weights(g: CsrGraph, weights: np.ndarray) -> CsrGraph:
    return CsrGraph(g.n, g.offsets, g.dests, _frozen(weights, np.int32), g.rev_offsets,
                    g.rev_srcs, g.rev_eid, g.directed)


def assign_random_weights(g: CsrGraph, lo: int = DEFAULT_MIN_WEIGHT,
                          hi: int = DEFAULT_MAX_WEIGHT, seed: int = 0) -> CsrGraph:
    """Uniform integer weights in ``[lo, hi]``; both directions of an undirected edge agree."""
    if lo > hi:
        raise ConfigError(f"weight range is empty: [{lo}, {hi}]")
    if lo < 0:
        raise NegativeWeight(f"weight range starts below zero: {lo}")
    if hi > MAX_WEIGHT:
        raise ConfigError(f"weight range ends above the 32-bit limit {MAX_WEIGHT}: {hi}")
    rng = np.random.default_rng(seed)
    if g.directed:
        return with_weights(g, rng.integers(lo, hi + 1, size=g.m))

    srcs = g.srcs
    dests = np.asarray(g.dests)
    canonical = srcs <= dests
    weights = np.zeros(g.m, dtype=np.int64)
    weights[canonical] = rng.integers(lo, hi + 1, size=int(canonical.sum()))
    # keys are ascending because CSR is sorted by (src, dest)
    keys = srcs * max(g.n, 1) + dests
    mirrored = np.flatnonzero(~canonical)
    twins = np.searchsorted(keys, dests[mirrored] * max(g.n, 1) + srcs[mirrored])
    weights[mirrored] = weights[twins]
    return with_weights(g, weights)


def transpose(g: CsrGraph) -> CsrGraph:
    return build_from_edges(
        g.n, np.column_stack([g.dests, g.srcs, g.weights]) if g.m else [], directed=g.directed)


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

def neighbors(g: CsrGraph, v: int) -> list[tuple[int, int, int]]:
    """Out-edges of *v* as ``(dest, weight, edge_id)``."""
    lo, hi = int(g.offsets[v]), int(g.offsets[v + 1])
    return [(int(g.dests[i]), int(g.weights[i]), i) for i in range(lo, hi)]


def in_neighbors(g: CsrGraph, v: int) -> list[tuple[int, int, int]]:
    """In-edges of *v* as ``(src, weight, edge_id)``."""
    lo, hi = int(g.rev_offsets[v]), int(g.rev_offsets[v + 1])
    return [(int(g.rev_srcs[i]), int(g.weights[g.rev_eid[i]]), int(g.rev_eid[i]))
            for i in range(lo, hi)]


def is_edge(g: CsrGraph, u: int, v: int) -> bool:
    return g.edge_id(u, v) >= 0


def degree_summary(g: CsrGraph) -> dict:
    degrees = np.diff(g.offsets)
    return {
        "nodes": g.n,
        "edges": g.m,
        "directed": g.directed,
        "avg_degree": round(float(degrees.mean()), 3) if g.n else 0.0,
        "max_degree": int(degrees.max()) if g.n else 0,
    }


def graph_hash(g: CsrGraph) -> str:
    h = hashlib.sha256()
    h.update(f"{g.n}:{int(g.directed)}:".encode())
    for array in (g.offsets, g.dests, g.weights):
        h.update(np.ascontiguousarray(array).tobytes())
    return h.hexdigest()[:16]


# ---------------------------------------------------------------------------
# Edge-list files
# ---------------------------------------------------------------------------

def parse_edge_list(text: str, directed: bool | None = None, remap: bool = False) -> CsrGraph:
    declared_nodes = None
    declared_directed = None
    rows: list[tuple[int, int, int | None]] = []
    lines: list[int] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            header = _HEADER_RE.match(line)
            if header:
                key, value = header.groups()
                try:
                    number = int(value)
                except ValueError:
                    raise EdgeListError(f"header '{key}' needs an integer, got '{value}'",
                                        Span(lineno, 1, len(raw))) from None
                if key == "nodes":
                    declared_nodes = number
                else:
                    declared_directed = bool(number)
            continue
        fields = line.split()
        if len(fields) not in (2, 3):
            raise EdgeListError(f"expected 'u v [w]', got {len(fields)} field(s)",
                                Span(lineno, 1, len(raw)))
        try:
            values = [int(f) for f in fields]
        except ValueError:
            raise EdgeListError("node ids and weights must be integers",
                                Span(lineno, 1, len(raw))) from None
        if values[0] < 0 or values[1] < 0:
            raise EdgeListError("node ids must be non-negative", Span(lineno, 1, len(raw)))
        if len(values) == 3 and values[2] < 0:
            raise EdgeListError(f"negative weight {values[2]}", Span(lineno, 1, len(raw)))
        if len(values) == 3 and values[2] > MAX_WEIGHT:
            raise EdgeListError(f"weight {values[2]} exceeds the 32-bit limit {MAX_WEIGHT}",
                                Span(lineno, 1, len(raw)))
        rows.append((values[0], values[1], values[2] if len(values) == 3 else None))
        lines.append(lineno)

    if remap:
        ids = sorted({r[0] for r in rows} | {r[1] for r in rows})
        dense = {old: new for new, old in enumerate(ids)}
        rows = [(dense[u], dense[v], w) for u, v, w in rows]
        n = len(ids) if declared_nodes is None else max(declared_nodes, len(ids))
    else:
        seen = max((max(u, v) for u, v, _ in rows), default=-1) + 1
        n = seen if declared_nodes is None else declared_nodes
        for (u, v, _), lineno in zip(rows, lines):
            if u >= n or v >= n:
                raise EdgeListError(f"node id out of range for {n} nodes", Span(lineno, 1))

    if directed is None:
        directed = bool(declared_directed) if declared_directed is not None else False
    return build_from_edges(n, rows, directed=directed)


def load_edge_list(path, directed: bool | None = None, remap: bool = False) -> CsrGraph:
    """Read an edge-list file; graphs without a ``# directed`` header are undirected."""
    return parse_edge_list(Path(path).read_text(encoding="utf-8"), directed, remap)


def format_edge_list(g: CsrGraph) -> str:
    lines = [f"# nodes: {g.n}", f"# directed: {int(g.directed)}"]
    for u, v, w in g.edges():
        if g.directed or u <= v:
            lines.append(f"{u} {v} {w}")
    return "\n".join(lines) + "\n"


def write_edge_list(g: CsrGraph, path) -> None:
    Path(path).write_text(format_edge_list(g), encoding="utf-8")


# ---------------------------------------------------------------------------
# Synthetic generators
# ---------------------------------------------------------------------------

def uniform_random_edges(n: int, m: int, seed: int) -> np.ndarray:
    """*m* endpoint pairs drawn uniformly, self-loops dropped."""
    if n <= 0:
        return np.zeros((0, 2), dtype=np.int64)
    rng = np.random.default_rng(seed)
    pairs = rng.integers(0, n, size=(m, 2))
    return pairs[pairs[:, 0] != pairs[:, 1]]


def rmat_edges(n: int, m: int, seed: int, a: float = RMAT_A, b: float = RMAT_B,
               c: float = RMAT_C, d: float = RMAT_D) -> np.ndarray:
    """Recursive-matrix (skewed degree) endpoint pairs over ``[0, n)``."""
    probabilities = np.array([a, b, c, d], dtype=np.float64)
    if (probabilities < 0).any() or not math.isclose(probabilities.sum(), 1.0, abs_tol=1e-9):
        raise ConfigError(f"RMAT probabilities must be non-negative and sum to 1, got "
                          f"{a}, {b}, {c}, {d}")
    if b + c == 0:
        raise ConfigError("RMAT probabilities put no mass off the diagonal (b + c = 0); "
                          "every pair would be a self-loop")
    if n <= 1 or m <= 0:
        return np.zeros((0, 2), dtype=np.int64)
    scale = max(1, math.ceil(math.log2(n)))
    rng = np.random.default_rng(seed)
    collected: list[np.ndarray] = []
    remaining = m
    stalled = 0
    while remaining > 0:
        quadrants = rng.choice(4, size=(remaining, scale), p=probabilities)
        bits = 1 << np.arange(scale - 1, -1, -1, dtype=np.int64)
        us = ((quadrants >= 2).astype(np.int64) * bits).sum(axis=1)
        vs = ((quadrants % 2 == 1).astype(np.int64) * bits).sum(axis=1)
        ok = (us < n) & (vs < n) & (us != vs)
        batch = np.column_stack([us[ok], vs[ok]])
        collected.append(batch)
        remaining -= len(batch)
        stalled = 0 if len(batch) else stalled + 1
        if stalled >= RMAT_MAX_STALLED_ROUNDS:
            raise ConfigError(f"RMAT probabilities {a}, {b}, {c}, {d} place no edges between "
                              f"distinct nodes of [0, {n})")
    return np.concatenate(collected)[:m]


def generate_graph(kind: str, n: int, m: int, seed: int, directed: bool = False,
                   min_weight: int = DEFAULT_MIN_WEIGHT, max_weight: int = DEFAULT_MAX_WEIGHT,
                   **rmat) -> CsrGraph:
    if kind == "uniform":
        pairs = uniform_random_edges(n, m, seed)
    elif kind == "rmat":
        pairs = rmat_edges(n, m, seed, **rmat)
    else:
        raise ConfigError(f"unknown graph kind '{kind}' (expected uniform or rmat)")
    g = build_from_edges(n, pairs, directed=directed)
    return assign_random_weights(g, min_weight, max_weight, seed)


def erdos_renyi(n: int, p: float, seed: int, directed: bool = False,
                weighted: bool = False) -> CsrGraph:
    rng = np.random.default_rng(seed)
    mask = rng.random((n, n)) < p
    np.fill_diagonal(mask, False)
    if not directed:
        mask = np.triu(mask, k=1)
    us, vs = np.nonzero(mask)
    g = build_from_edges(n, np.column_stack([us, vs]) if len(us) else [], directed=directed)
    if weighted:
        g = assign_random_weights(g, DEFAULT_MIN_WEIGHT, DEFAULT_MAX_WEIGHT, seed)
    return g
