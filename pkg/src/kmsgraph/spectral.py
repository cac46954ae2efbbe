"""Partition functions of finite graphs by first-return linear algebra.

For a target vertex ``v`` write ``B`` for the transfer matrix at ``beta`` and
``B_hat`` for ``B`` with row and column ``v`` removed. The first-hit sums
``h(x) = sum_{u in x E_a^* v} N(u)^{-beta}`` solve ``h = B_hat h + b`` with
``b`` the column of ``B`` into ``v``; they converge exactly when the spectral
radius of ``B_hat`` restricted to the vertices that actually reach ``v`` is
below one. From ``h``::

    Za = 1 + sum(h)
    Zs = B[v, v] + B[v, others] . h
    Z  = Za / (1 - Zs)
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .graph import WeightedGraph

TOL = 1e-9
COND_LIMIT = 1e12
DENSE_EIG_LIMIT = 64


class SingularSolve(ArithmeticError):
    pass


class Status(str, Enum):
    FINITE = "finite"
    DIVERGENT = "divergent"
    BOUNDARY = "boundary"


@dataclass(frozen=True)
class Value:
    """A partition-function value: finite number, divergent, or in the boundary band."""

    status: Status
    x: float = math.inf

    @classmethod
    def finite(cls, x: float) -> "Value":
        return cls(Status.FINITE, float(x))

    @property
    def is_finite(self) -> bool:
        return self.status is Status.FINITE

    def to_json(self):
        return self.x if self.is_finite else self.status.value

    def __repr__(self) -> str:
        return f"Finite({self.x!r})" if self.is_finite else self.status.value.capitalize()


DIVERGENT = Value(Status.DIVERGENT)
BOUNDARY = Value(Status.BOUNDARY)


@dataclass(frozen=True)
class PartitionEntry:
    vertex: str
    beta: float
    zs: Value
    za: Value
    z: Value
    first_hit: dict[str, float] | None = None  # h(x) for x reaching v; None unless Za finite


@dataclass(frozen=True)
class TransferMatrix:
    matrix: np.ndarray
    beta: float
    vertices: tuple[str, ...]


def transfer_matrix(g: WeightedGraph, beta: float) -> TransferMatrix:
    n = len(g.vertices)
    B = np.zeros((n, n))
    for e in g.edges:
        B[g.index[e.src], g.index[e.dst]] += g.edge_factor(e.id, beta)
    return TransferMatrix(B, float(beta), g.vertices)


# -- spectral radius ------------------------------------------------------

def _perron_power(C: np.ndarray, tol: float = 1e-14, maxiter: int = 20000) -> float | None:
    """Perron root of an irreducible block by power iteration on ``C + I``.

    The shift makes the block primitive; Collatz-Wielandt bounds bracket the
    root at every step. Returns ``None`` if the bracket does not close.
    """
    A = C + np.eye(len(C))
    x = np.ones(len(C))
    for _ in range(maxiter):
        y = A @ x
        ratios = y / x
        lo, hi = ratios.min(), ratios.max()
        if hi - lo <= tol * hi:
            return 0.5 * (lo + hi) - 1.0
        x = y / y.max()
        if not np.all(x > 0):
            return None
    return None


def _block_radius(C: np.ndarray) -> float:
    if len(C) == 1:
        return float(C[0, 0])
    if len(C) > DENSE_EIG_LIMIT:
        r = _perron_power(C)
        if r is not None:
            return float(r)
    return float(np.max(np.abs(np.linalg.eigvals(C))))


def spectral_radius(M: np.ndarray) -> float:
    """Spectral radius of a nonnegative matrix, computed block-wise over its SCCs."""
    n = len(M)
    if n == 0:
        return 0.0
    pattern = csr_matrix(M > 0)
    ncomp, labels = connected_components(pattern, directed=True, connection="strong")
    rho = 0.0
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        block = M[np.ix_(idx, idx)]
        if not block.any():
            continue
        rho = max(rho, _block_radius(block))
    return rho


# -- linear solves --------------------------------------------------------

def _refined_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``A x = b``; ill-conditioned systems get extended-precision refinement."""
    try:
        x = np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SingularSolve(str(exc)) from exc
    if np.linalg.cond(A) > COND_LIMIT:
        Al = A.astype(np.longdouble)
        bl = b.astype(np.longdouble)
        xl = x.astype(np.longdouble)
        for _ in range(3):
            r = bl - Al @ xl
            dx = np.linalg.solve(A, r.astype(np.float64))
            xl = xl + dx.astype(np.longdouble)
        x = xl.astype(np.float64)
    if not np.all(np.isfinite(x)):
        raise SingularSolve("non-finite solution")
    return x


def _classify_radius(rho: float, tol: float) -> Status:
    if rho < 1.0 - tol:
        return Status.FINITE
    if rho > 1.0 + tol:
        return Status.DIVERGENT
    return Status.BOUNDARY


def _avoiding_ancestors(g: WeightedGraph, v: str) -> list[str]:
    """Vertices other than ``v`` with a path to ``v`` whose interior avoids ``v``."""
    seen: set[str] = set()
    stack = [e.src for e in g.in_edges[v] if e.src != v]
    while stack:
        x = stack.pop()
        if x in seen:
            continue
        seen.add(x)
        stack.extend(e.src for e in g.in_edges[x] if e.src != v and e.src not in seen)
    return [x for x in g.vertices if x in seen]


def _avoiding_descendants(g: WeightedGraph, v: str, within: set[str]) -> list[str]:
    seen: set[str] = set()
    stack = [e.dst for e in g.out_edges[v] if e.dst in within]
    while stack:
        x = stack.pop()
        if x in seen:
            continue
        seen.add(x)
        stack.extend(e.dst for e in g.out_edges[x] if e.dst in within and e.dst not in seen)
    return [x for x in g.vertices if x in seen]


def _first_hit_block(B: np.ndarray, g: WeightedGraph, v: str, block: list[str], tol: float):
    """Return (status, h over block) for the first-hit system restricted to ``block``."""
    if not block:
        return Status.FINITE, np.zeros(0)
    idx = [g.index[x] for x in block]
    Bh = B[np.ix_(idx, idx)]
    status = _classify_radius(spectral_radius(Bh), tol)
    if status is not Status.FINITE:
        return status, None
    b = B[idx, g.index[v]]
    h = _refined_solve(np.eye(len(idx)) - Bh, b)
    if np.any(h < -tol):
        raise SingularSolve(f"negative first-hit sum at {v!r}")
    return status, np.maximum(h, 0.0)


def partition_values(g: WeightedGraph, beta: float, v: str, tol: float = TOL,
                     B: np.ndarray | None = None) -> PartitionEntry:
    if B is None:
        B = transfer_matrix(g, beta).matrix
    anc = _avoiding_ancestors(g, v)
    za_status, h = _first_hit_block(B, g, v, anc, tol)
    desc = _avoiding_descendants(g, v, set(anc))
    iv = g.index[v]
    if za_status is Status.FINITE:
        pos = {x: i for i, x in enumerate(anc)}
        hd = np.array([h[pos[x]] for x in desc])
        zs_status = Status.FINITE
        first_hit = {x: float(h[pos[x]]) for x in anc}
        za = Value.finite(1.0 + math.fsum(h))
    else:
        zs_status, hd = _first_hit_block(B, g, v, desc, tol)
        first_hit = None
        za = Value(za_status)
    if zs_status is Status.FINITE:
        r = B[iv, [g.index[x] for x in desc]]
        zs = Value.finite(B[iv, iv] + float(r @ hd) if len(desc) else B[iv, iv])
    else:
        zs = Value(zs_status)
    return PartitionEntry(v, float(beta), zs, za, _combine(zs, za, tol), first_hit)


def _combine(zs: Value, za: Value, tol: float) -> Value:
    if zs.status is Status.DIVERGENT or za.status is Status.DIVERGENT:
        return DIVERGENT
    if zs.status is Status.BOUNDARY or za.status is Status.BOUNDARY:
        return BOUNDARY
    if zs.x > 1.0 + tol:
        return DIVERGENT
    if zs.x >= 1.0 - tol:
        return BOUNDARY
    return Value.finite(za.x / (1.0 - zs.x))


def all_partition_values(g: WeightedGraph, beta: float, tol: float = TOL) -> dict[str, PartitionEntry]:
    B = transfer_matrix(g, beta).matrix
    return {v: partition_values(g, beta, v, tol, B) for v in g.vertices}


# -- convergence abscissa -------------------------------------------------

def _radius_on(g: WeightedGraph, verts: list[str], beta: float) -> float:
    B = transfer_matrix(g, beta).matrix
    idx = [g.index[x] for x in verts]
    return spectral_radius(B[np.ix_(idx, idx)])


def radius_root(g: WeightedGraph, verts: list[str], tol: float = 1e-12) -> float:
    """Smallest ``beta >= 0`` with spectral radius of the restricted matrix ``<= 1``."""
    if not verts or _radius_on(g, verts, 0.0) <= 1.0:
        return 0.0
    lo, hi = 0.0, 1.0
    while _radius_on(g, verts, hi) > 1.0:
        lo, hi = hi, 2.0 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _radius_on(g, verts, mid) > 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def beta_v(g: WeightedGraph, v: str) -> float:
    """``inf{beta : Z_v(beta) < inf}``; always finite for a finite graph."""
    anc = [x for x in g.vertices if x in g.ancestors(v)]
    return radius_root(g, anc)


def zs_root(g: WeightedGraph, v: str, tol: float = TOL) -> float | None:
    """Root of ``Zs_v(beta) = 1`` by bisection, or ``None`` if ``Zs`` never reaches 1.

    ``Zs`` is nonincreasing where finite and divergent below its abscissa, so
    "not finite-and-below-one" is a monotone predicate in ``beta``. The
    bracket is halved until it is two adjacent floats: other vertices of the
    same critical class can have a much steeper ``Zs`` than ``v``, and all of
    them must land in the band at the returned value.
    """
    def above(beta: float) -> bool:
        zs = partition_values(g, beta, v, tol).zs
        return not (zs.is_finite and zs.x < 1.0)

    zs0 = partition_values(g, 0.0, v, tol).zs
    if zs0.is_finite and zs0.x <= 1.0 + tol:
        return 0.0 if zs0.x >= 1.0 - tol else None
    lo, hi = 0.0, 1.0
    while above(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 2.0 ** 12:
            return None

    while (mid := 0.5 * (lo + hi)) not in (lo, hi):
        if above(mid):
            lo = mid
        else:
            hi = mid
    zs = partition_values(g, hi, v, tol).zs
    if not zs.is_finite or abs(zs.x - 1.0) > tol:
        return None
    return hi
