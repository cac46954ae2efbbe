"""Brute-force path sums, independent of the linear-algebra route.

Paths are grown backwards from their range vertex, one prepended edge at a
time, so the membership predicates of each class are checked directly:

* ``all``        every path with range ``v`` (``E^*v``)
* ``first-hit``  paths with range ``v`` and no proper prefix ending at ``v``
* ``simple-loop`` loops at ``v`` of length >= 1 with no proper positive-length
  prefix ending at ``v``
* ``first-hit-from`` first-hit paths whose source is a given vertex

``oracle_partition`` sums ``N(u)^{-beta}`` over a class truncated at length
``L``, either by explicit enumeration (capped) or by a length-indexed
recursion over edges that never enumerates individual paths.
"""
from __future__ import annotations

import math
import os
from dataclasses import dataclass
from enum import Enum

from .graph import WeightedGraph

DEFAULT_CAP = 10 ** 7


class ExplosionCap(RuntimeError):
    """The enumeration visited more nodes than the configured cap."""


class PathClass(str, Enum):
    ALL = "all"
    FIRST_HIT = "first-hit"
    SIMPLE_LOOP = "simple-loop"
    FIRST_HIT_FROM = "first-hit-from"


@dataclass(frozen=True)
class PathClassQuery:
    target: str
    selector: PathClass
    max_length: int
    source: str | None = None

    def __post_init__(self):
        if self.max_length < 0:
            raise ValueError("max_length must be nonnegative")
        if (self.selector is PathClass.FIRST_HIT_FROM) != (self.source is not None):
            raise ValueError("source is required exactly for first-hit-from")


@dataclass(frozen=True)
class PathRecord:
    edges: tuple[str, ...]
    source: str
    target: str
    weight: float

    def __len__(self) -> int:
        return len(self.edges)

    def factor(self, beta: float) -> float:
        return self.weight ** (-beta)


def default_cap() -> int:
    return int(os.environ.get("KMS_GRAPH_CAP", DEFAULT_CAP))


def enumerate_paths(g: WeightedGraph, q: PathClassQuery, cap: int | None = None) -> list[PathRecord]:
    cap = default_cap() if cap is None else cap
    v = q.target
    out: list[PathRecord] = []
    visited = 0
    # stack items: (edges in path order, source vertex, log weight)
    stack: list[tuple[tuple[str, ...], str, float]] = [((), v, 0.0)]
    while stack:
        edges, src, lw = stack.pop()
        visited += 1
        if visited > cap:
            raise ExplosionCap(f"more than {cap} search nodes for {q}")
        sel = q.selector
        if sel is PathClass.ALL:
            out.append(PathRecord(edges, src, v, math.exp(lw)))
        elif sel is PathClass.FIRST_HIT or (sel is PathClass.FIRST_HIT_FROM and src == q.source):
            out.append(PathRecord(edges, src, v, math.exp(lw)))
        if len(edges) == q.max_length:
            continue
        if sel is not PathClass.ALL and edges and src == v:
            continue  # completed simple loop; extending it puts v in the interior
        for e in g.in_edges[src]:
            if sel in (PathClass.FIRST_HIT, PathClass.FIRST_HIT_FROM) and e.src == v:
                continue
            new = ((e.id,) + edges, e.src, lw + g.log_weights[e.id])
            if sel is PathClass.SIMPLE_LOOP and e.src == v:
                visited += 1
                if visited > cap:
                    raise ExplosionCap(f"more than {cap} search nodes for {q}")
                out.append(PathRecord(new[0], v, v, math.exp(new[2])))
                continue
            stack.append(new)
    return out


def _length_sums(g: WeightedGraph, v: str, beta: float, L: int, avoid: bool) -> list[dict[str, float]]:
    """``table[k][x]`` = sum of ``N(u)^{-beta}`` over length-k paths ``x -> v``.

    With ``avoid`` only paths whose proper prefixes never end at ``v`` count.
    """
    factor = {e.id: g.edge_factor(e.id, beta) for e in g.edges}
    current = {x: 0.0 for x in g.vertices}
    current[v] = 1.0
    table = [current]
    for _ in range(L):
        nxt = {}
        for x in g.vertices:
            if avoid and x == v:
                nxt[x] = 0.0
                continue
            nxt[x] = math.fsum(factor[e.id] * current[e.dst] for e in g.out_edges[x])
        table.append(nxt)
        current = nxt
    return table


def class_sum(g: WeightedGraph, q: PathClassQuery, beta: float, method: str = "enumerate",
              cap: int | None = None) -> float:
    """Truncated ``sum N(u)^{-beta}`` over one path class."""
    if method == "enumerate":
        return math.fsum(p.factor(beta) for p in enumerate_paths(g, q, cap))
    if method != "dp":
        raise ValueError(f"unknown method {method!r}")
    v, L = q.target, q.max_length
    sel = q.selector
    if sel is PathClass.ALL:
        table = _length_sums(g, v, beta, L, avoid=False)
        return math.fsum(sum(row.values()) for row in table)
    table = _length_sums(g, v, beta, max(L - 1, 0) if sel is PathClass.SIMPLE_LOOP else L, avoid=True)
    if sel is PathClass.FIRST_HIT:
        return math.fsum(sum(row.values()) for row in table)
    if sel is PathClass.FIRST_HIT_FROM:
        return math.fsum(row[q.source] for row in table)
    if L == 0:
        return 0.0
    # a simple loop is an edge out of v followed by a first-hit path back to v
    return math.fsum(g.edge_factor(e.id, beta) * row[e.dst]
                     for e in g.out_edges[v] for row in table)


def oracle_partition(g: WeightedGraph, v: str, beta: float, L: int, method: str = "enumerate",
                     cap: int | None = None) -> tuple[float, float, float]:
    """Truncated ``(Zs_L, Za_L, Z_L)`` at vertex ``v``."""
    sums = [class_sum(g, PathClassQuery(v, sel, L), beta, method, cap)
            for sel in (PathClass.SIMPLE_LOOP, PathClass.FIRST_HIT, PathClass.ALL)]
    return sums[0], sums[1], sums[2]


def first_hit_from(g: WeightedGraph, source: str, target: str, beta: float, L: int,
                   method: str = "dp", cap: int | None = None) -> float:
    q = PathClassQuery(target, PathClass.FIRST_HIT_FROM, L, source=source)
    return class_sum(g, q, beta, method, cap)
