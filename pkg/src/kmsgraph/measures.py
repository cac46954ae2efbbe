"""Cylinder and atom masses of the measure attached to a state vector.

The measure is never materialized; each query uses the scaling rule
``mu(Z(u)) = N(u)^{-beta} m(r(u))`` or, for atoms,
``mu({u}) = N(u)^{-beta} S(m)(r(u))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .classify import StateVector, defect
from .graph import WeightedGraph
from .oracle import PathClass, PathClassQuery, enumerate_paths


class InvalidPath(ValueError):
    pass


class NotBoundaryPath(ValueError):
    pass


Path = Sequence[str] | str  # a vertex id stands for the length-0 path


@dataclass(frozen=True)
class CylinderMeasure:
    m: StateVector
    beta: float
    graph: WeightedGraph

    @property
    def total_mass(self) -> float:
        return self.m.total

    def _resolve(self, u: Path) -> tuple[tuple[str, ...], str]:
        g = self.graph
        if isinstance(u, str):
            if u in g.index:
                return (), u
            u = [p for p in u.split(",") if p]
        u = tuple(u)
        if not u or not g.is_path(u):
            raise InvalidPath(f"{u!r} is not a path")
        return u, g.range(u[-1])

    def cylinder_mass(self, u: Path) -> float:
        edges, end = self._resolve(u)
        return self.graph.path_factor(edges, self.beta) * self.m[end]

    def atom_mass(self, u: Path) -> float:
        edges, end = self._resolve(u)
        if end in self.graph.relative_set:
            raise NotBoundaryPath(f"path ends at {end!r}, which lies in the relative set")
        s = defect(self.graph, self.beta, self.m)
        return self.graph.path_factor(edges, self.beta) * s[end]

    def finite_mass(self, L: int, cap: int | None = None) -> float:
        """Mass of finite boundary paths of length at most ``L``."""
        g = self.graph
        s = defect(g, self.beta, self.m)
        total = []
        for v in g.vertices:
            if v in g.relative_set or s[v] == 0.0:
                continue
            paths = enumerate_paths(g, PathClassQuery(v, PathClass.ALL, L), cap)
            total.append(s[v] * math.fsum(p.factor(self.beta) for p in paths))
        return math.fsum(total)
