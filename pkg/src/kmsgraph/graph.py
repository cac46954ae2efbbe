"""Finite weighted directed multigraphs with a relative set of regular vertices.

A graph carries vertices, edges ``(id, src, dst)``, a weight ``N(e) > 1`` per
edge and a set ``R`` of vertices that must be regular (emit at least one edge).
Iteration order everywhere is declaration order, so matrices built from a
graph are indexed reproducibly.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_WEIGHT = math.e
CLOSURE_LIMIT = 2 ** 10


class GraphError(ValueError):
    """Base class for graph validation failures."""


class UnknownVertex(GraphError):
    pass


class WeightNotAboveOne(GraphError):
    pass


class RelativeSetNotRegular(GraphError):
    pass


class GraphValidationError(GraphError):
    """Raised by :func:`validate` with every violated invariant attached."""

    def __init__(self, problems: list[GraphError]):
        self.problems = problems
        lines = "; ".join(f"{type(p).__name__}: {p}" for p in problems)
        super().__init__(f"{len(problems)} invalid item(s): {lines}")


@dataclass(frozen=True)
class Edge:
    id: str
    src: str
    dst: str


@dataclass(frozen=True, eq=False)
class WeightedGraph:
    """Validated graph. Build instances with :func:`validate` or :func:`build`."""

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    weights: Mapping[str, float]
    relative_set: frozenset[str] = field(default_factory=frozenset)

    # -- lookups ---------------------------------------------------------
    @cached_property
    def index(self) -> dict[str, int]:
        return {v: i for i, v in enumerate(self.vertices)}

    @cached_property
    def edge_map(self) -> dict[str, Edge]:
        return {e.id: e for e in self.edges}

    @cached_property
    def out_edges(self) -> dict[str, tuple[Edge, ...]]:
        out: dict[str, list[Edge]] = {v: [] for v in self.vertices}
        for e in self.edges:
            out[e.src].append(e)
        return {v: tuple(es) for v, es in out.items()}

    @cached_property
    def in_edges(self) -> dict[str, tuple[Edge, ...]]:
        inc: dict[str, list[Edge]] = {v: [] for v in self.vertices}
        for e in self.edges:
            inc[e.dst].append(e)
        return {v: tuple(es) for v, es in inc.items()}

    @cached_property
    def log_weights(self) -> dict[str, float]:
        return {eid: math.log(w) for eid, w in self.weights.items()}

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return (f"WeightedGraph(|E0|={len(self.vertices)}, |E1|={len(self.edges)}, "
                f"|R|={len(self.relative_set)})")

    def source(self, edge_id: str) -> str:
        return self.edge_map[edge_id].src

    def range(self, edge_id: str) -> str:
        return self.edge_map[edge_id].dst

    def edge_factor(self, edge_id: str, beta: float) -> float:
        """``N(e)^{-beta}``."""
        return math.exp(-beta * self.log_weights[edge_id])

    # -- paths -----------------------------------------------------------
    def is_path(self, path: Sequence[str]) -> bool:
        if any(e not in self.edge_map for e in path):
            return False
        return all(self.range(a) == self.source(b) for a, b in zip(path, path[1:]))

    def path_weight(self, path: Sequence[str]) -> float:
        """``N(u)``; the empty path has weight 1."""
        return math.exp(self.path_log_weight(path))

    def path_log_weight(self, path: Sequence[str]) -> float:
        return math.fsum(self.log_weights[e] for e in path)

    def path_factor(self, path: Sequence[str], beta: float) -> float:
        """``N(u)^{-beta}``."""
        return math.exp(-beta * self.path_log_weight(path))

    # -- structure -------------------------------------------------------
    @cached_property
    def regular(self) -> frozenset[str]:
        return frozenset(v for v in self.vertices if self.out_edges[v])

    @cached_property
    def _closure(self) -> np.ndarray | None:
        if len(self.vertices) > CLOSURE_LIMIT:
            return None
        n = len(self.vertices)
        reach = np.zeros((n, n), dtype=bool)
        for v in self.vertices:
            reach[self.index[v], [self.index[w] for w in self._bfs(v)]] = True
        return reach

    def _bfs(self, start: str) -> set[str]:
        seen = {start}
        queue = deque([start])
        while queue:
            x = queue.popleft()
            for e in self.out_edges[x]:
                if e.dst not in seen:
                    seen.add(e.dst)
                    queue.append(e.dst)
        return seen

    def reaches(self, v1: str, v2: str) -> bool:
        if self._closure is not None:
            return bool(self._closure[self.index[v1], self.index[v2]])
        return v2 in self._bfs(v1)

    def ancestors(self, v: str) -> set[str]:
        """All vertices with a (possibly empty) path to ``v``."""
        seen = {v}
        queue = deque([v])
        while queue:
            x = queue.popleft()
            for e in self.in_edges[x]:
                if e.src not in seen:
                    seen.add(e.src)
                    queue.append(e.src)
        return seen

    @cached_property
    def scc_labels(self) -> dict[str, int]:
        """Strongly connected component id per vertex (mutual reachability)."""
        from scipy.sparse import csr_matrix
        from scipy.sparse.csgraph import connected_components

        n = len(self.vertices)
        if n == 0:
            return {}
        rows = [self.index[e.src] for e in self.edges]
        cols = [self.index[e.dst] for e in self.edges]
        adj = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        _, labels = connected_components(adj, directed=True, connection="strong")
        return {v: int(labels[i]) for i, v in enumerate(self.vertices)}

    # -- serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "vertices": list(self.vertices),
            "edges": [{"id": e.id, "src": e.src, "dst": e.dst, "weight": self.weights[e.id]}
                      for e in self.edges],
            "relative_set": [v for v in self.vertices if v in self.relative_set],
        }

    def with_relative_set(self, relative_set: Iterable[str]) -> "WeightedGraph":
        d = self.to_dict()
        d["relative_set"] = list(relative_set)
        return validate(d)


def regular_vertices(g: WeightedGraph) -> frozenset[str]:
    return g.regular


def reaches(g: WeightedGraph, v1: str, v2: str) -> bool:
    return g.reaches(v1, v2)


def validate(raw: Mapping) -> WeightedGraph:
    """Check a parsed description and return the graph it describes.

    Raises :class:`GraphValidationError` listing every problem found.
    """
    problems: list[GraphError] = []
    vertices = [str(v) for v in raw.get("vertices", [])]
    vset = set(vertices)
    if len(vset) != len(vertices):
        problems.append(GraphError("duplicate vertex ids"))

    edges: list[Edge] = []
    weights: dict[str, float] = {}
    for item in raw.get("edges", []):
        eid = str(item["id"])
        src, dst = str(item["src"]), str(item["dst"])
        if eid in weights:
            problems.append(GraphError(f"duplicate edge id {eid!r}"))
            continue
        for end in (src, dst):
            if end not in vset:
                problems.append(UnknownVertex(f"edge {eid!r} refers to {end!r}"))
        w = item.get("weight")
        w = DEFAULT_WEIGHT if w is None else float(w)
        if not w > 1.0 or not math.isfinite(w):
            problems.append(WeightNotAboveOne(f"edge {eid!r} has weight {w!r}"))
        weights[eid] = w
        edges.append(Edge(eid, src, dst))

    emitters = {e.src for e in edges}
    relative = [str(v) for v in raw.get("relative_set", [])]
    for v in relative:
        if v not in vset:
            problems.append(UnknownVertex(f"relative set member {v!r}"))
        elif v not in emitters:
            problems.append(RelativeSetNotRegular(f"{v!r} emits no edges"))

    if problems:
        raise GraphValidationError(problems)
    return WeightedGraph(tuple(vertices), tuple(edges), weights, frozenset(relative))


def build(vertices: Iterable[str], edges: Iterable[tuple], relative_set: Iterable[str] = ()) -> WeightedGraph:
    """Shorthand: ``edges`` are ``(id, src, dst)`` or ``(id, src, dst, weight)`` tuples."""
    items = []
    for t in edges:
        d = {"id": t[0], "src": t[1], "dst": t[2]}
        if len(t) > 3:
            d["weight"] = t[3]
        items.append(d)
    return validate({"vertices": list(vertices), "edges": items, "relative_set": list(relative_set)})


def load(path: str | Path) -> WeightedGraph:
    with open(path) as fh:
        return validate(json.load(fh))


def dump(g: WeightedGraph, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(g.to_dict(), fh, indent=2)


def random_graph(rng: np.random.Generator, max_vertices: int = 8, max_parallel: int = 3,
                 edge_prob: float = 0.3, log_weight_range: tuple[float, float] = (0.0, 2.0),
                 relative_prob: float = 0.0) -> WeightedGraph:
    """Random multigraph with weights ``N(e) = exp(U(log_weight_range))``.

    Weights are kept strictly above 1 by nudging a zero log weight.
    """
    n = int(rng.integers(1, max_vertices + 1))
    vertices = [f"v{i}" for i in range(n)]
    edges = []
    k = 0
    lo, hi = log_weight_range
    for i in range(n):
        for j in range(n):
            if rng.random() < edge_prob:
                for _ in range(int(rng.integers(1, max_parallel + 1))):
                    lw = max(float(rng.uniform(lo, hi)), 1e-3)
                    edges.append((f"e{k}", vertices[i], vertices[j], math.exp(lw)))
                    k += 1
    emitters = sorted({e[1] for e in edges}, key=vertices.index)
    relative = [v for v in emitters if rng.random() < relative_prob]
    return build(vertices, edges, relative)
