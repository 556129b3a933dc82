"""
oracles.py
==========
Textbook reference implementations used to validate interpreter output on
small graphs: Dijkstra for SSSP, Brandes for BC, dense power iteration for
PageRank and triple enumeration for triangle counting.

The formulations match the corpus programs exactly:

* SSSP leaves unreachable nodes at the ``int`` INF sentinel.
* BC is unnormalized with endpoints excluded; only the given sources contribute.
* PR uses ``r(v) = (1 - d)/n + d * (sum_{u -> v} r(u)/outdeg(u) + dangling/n)``
  and stops once no node moves by more than ``eps`` or after ``max_iter`` rounds.
* TC counts triples ``u < v < w`` with edges ``v -> u``, ``v -> w`` and
  ``u -> w``, which is the usual triangle count on undirected graphs.
"""

from __future__ import annotations

import heapq
from collections.abc import Iterable
from dataclasses import dataclass, field

import numpy as np

from constants import INF_BY_TYPE, ORACLE_TC_MAX_NODES, TOLERANCES
from csr import CsrGraph, graph_hash
from errors import ConfigError, GraphTooLarge


@dataclass
class OracleResult:
    algorithm: str
    values: np.ndarray | int
    params: dict = field(default_factory=dict)
    graph_hash: str = ""

    def to_dict(self) -> dict:
        values = self.values.tolist() if isinstance(self.values, np.ndarray) else self.values
        return {"algorithm": self.algorithm, "params": dict(self.params),
                "graph_hash": self.graph_hash, "values": values}


def oracle_sssp(g: CsrGraph, src: int) -> np.ndarray:
    if not 0 <= src < g.n:
        raise ConfigError(f"source {src} is not a node of a {g.n}-node graph")
    if g.m and g.weights.min() < 0:
        raise ConfigError("Dijkstra needs nonnegative weights")
    inf = INF_BY_TYPE["int"]
    dist = np.full(g.n, inf, dtype=np.int64)
    dist[src] = 0
    heap = [(0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for i in range(g.offsets[u], g.offsets[u + 1]):
            v = int(g.dests[i])
            nd = d + int(g.weights[i])
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def oracle_bc(g: CsrGraph, sources: Iterable[int]) -> np.ndarray:
    bc = np.zeros(g.n, dtype=np.float64)
    for s in sorted(set(sources)):
        if not 0 <= s < g.n:
            raise ConfigError(f"source {s} is not a node of a {g.n}-node graph")
        sigma = np.zeros(g.n, dtype=np.float64)
        depth = np.full(g.n, -1, dtype=np.int64)
        sigma[s] = 1.0
        depth[s] = 0
        order = [s]
        head = 0
        while head < len(order):
            v = order[head]
            head += 1
            for w in g.dests[g.offsets[v]:g.offsets[v + 1]].tolist():
                if depth[w] < 0:
                    depth[w] = depth[v] + 1
                    order.append(w)
                if depth[w] == depth[v] + 1:
                    sigma[w] += sigma[v]
        delta = np.zeros(g.n, dtype=np.float64)
        for v in reversed(order):
            for w in g.dests[g.offsets[v]:g.offsets[v + 1]].tolist():
                if depth[w] == depth[v] + 1:
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if v != s:
                bc[v] += delta[v]
    return bc


def oracle_pr(g: CsrGraph, d: float = 0.85, eps: float = 1e-6,
              max_iter: int = 100) -> np.ndarray:
    n = g.n
    if n == 0:
        return np.zeros(0, dtype=np.float64)
    out_degree = np.diff(g.offsets)
    dangling_mask = out_degree == 0
    safe_degree = np.where(dangling_mask, 1, out_degree)
    rank = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        contribution = np.where(dangling_mask, 0.0, rank / safe_degree)
        incoming = np.bincount(g.dests, weights=contribution[g.srcs], minlength=n)
        nxt = (1.0 - d) / n + d * (incoming + rank[dangling_mask].sum() / n)
        moving = np.abs(nxt - rank) > eps
        rank = nxt
        if not moving.any():
            break
    return rank


def oracle_tc(g: CsrGraph) -> int:
    if g.n > ORACLE_TC_MAX_NODES:
        raise GraphTooLarge(f"triangle oracle is limited to {ORACLE_TC_MAX_NODES} nodes, "
                            f"graph has {g.n}")
    adj = np.zeros((g.n, g.n), dtype=bool)
    adj[g.srcs, g.dests] = True
    count = 0
    for v in range(g.n):
        lower = np.flatnonzero(adj[v, :v])
        upper = v + 1 + np.flatnonzero(adj[v, v + 1:])
        count += int(adj[np.ix_(lower, upper)].sum())
    return count


# ── Dispatch and comparison ──────────────────────────────────────────────────

def run_oracle(algorithm: str, g: CsrGraph, params: dict) -> OracleResult:
    """Run the oracle named *algorithm* with the corpus-style *params*."""
    if algorithm == "sssp":
        values = oracle_sssp(g, int(params["src"]))
    elif algorithm == "bc":
        sources = params.get("sourceSet", "all")
        if sources == "all":
            sources = range(g.n)
        values = oracle_bc(g, sources)
    elif algorithm == "pr":
        values = oracle_pr(g, float(params.get("delta", 0.85)), float(params.get("beta", 1e-6)),
                           int(params.get("maxIter", 100)))
    elif algorithm == "tc":
        values = oracle_tc(g)
    else:
        raise ConfigError(f"no oracle named '{algorithm}'")
    return OracleResult(algorithm, values, dict(params), graph_hash(g))


@dataclass
class ToleranceReport:
    algorithm: str
    tolerance: tuple[str, float]
    max_abs_error: float
    max_rel_error: float
    mismatches: list[int] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        kind, value = self.tolerance
        if kind == "exact":
            return self.max_abs_error == 0
        if kind == "relative":
            return self.max_rel_error <= value
        return self.max_abs_error <= value

    def format(self) -> str:
        kind, value = self.tolerance
        verdict = "PASS" if self.passed else "FAIL"
        lines = [f"{self.algorithm}: {verdict} (tolerance {kind} {value:g})",
                 f"  max abs error: {self.max_abs_error:.3e}",
                 f"  max rel error: {self.max_rel_error:.3e}"]
        if self.mismatches:
            shown = ", ".join(str(v) for v in self.mismatches[:10])
            lines.append(f"  mismatching nodes: {shown}")
        return "\n".join(lines)


def compare(algorithm: str, actual, expected) -> ToleranceReport:
    """Compare interpreter output against an oracle with the per-algorithm tolerance."""
    tolerance = TOLERANCES[algorithm]
    a = np.atleast_1d(np.asarray(actual, dtype=np.float64))
    e = np.atleast_1d(np.asarray(expected, dtype=np.float64))
    if a.shape != e.shape:
        return ToleranceReport(algorithm, tolerance, float("inf"), float("inf"))
    diff = np.abs(a - e)
    scale = np.maximum(np.abs(e), 1.0)
    rel = diff / scale
    kind, value = tolerance
    limit = {"exact": diff > 0, "relative": rel > value, "absolute": diff > value}[kind]
    return ToleranceReport(algorithm, tolerance,
                       float(diff.max()) if diff.size else 0.0,
                       float(rel.max()) if rel.size else 0.0,
                       np.flatnonzero(limit).tolist())
