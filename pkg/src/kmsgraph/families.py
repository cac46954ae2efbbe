"""Parametrized infinite graphs with closed-form partition functions.

Every family has constant edge weight ``e``, so ``N(u)^{-beta} = x^{|u|}``
with ``x = exp(-beta)``. Each one offers

* ``truncate(D)``: a finite induced subgraph for numerical cross-checks,
* ``analytic(i, beta)``: exact ``(Zs, Za, Z)`` at the vertex with index ``i``
  in the infinite graph,
* ``states(beta)``: the known infinite-type states at ``beta`` in closed form,
  or an emptiness certificate.

Labels computed from the analytic values can differ from labels computed on a
truncation (a truncation has only finitely many paths); the family
classification always uses the analytic values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import linprog

from .classify import (DisStatus, GroundStates, SimplexDescription, StateVector, Tag, VertexClassification,
                       first_hit_state, label_partitions, point_mass)
from .graph import WeightedGraph, build
from .spectral import DIVERGENT, TOL, PartitionEntry, Value, _combine

LN2 = math.log(2.0)
E = math.e
BETA_EPS = 1e-12


def _finite(x: float) -> Value:
    return Value.finite(x) if math.isfinite(x) else DIVERGENT


def _entry(v: str, beta: float, zs: Value, za: Value, tol: float = TOL) -> PartitionEntry:
    return PartitionEntry(v, float(beta), zs, za, _combine(zs, za, tol))


def _geom(x: float) -> float:
    """``sum_{k>=0} x^k``, infinite for ``x >= 1``."""
    return 1.0 / (1.0 - x) if x < 1.0 else math.inf


@dataclass(frozen=True)
class ClosedFormState:
    name: str
    tag: Tag
    value: Callable[[int], float]

    def vector(self, family: "Family", indices) -> StateVector:
        return StateVector({family.vertex(i): float(self.value(i)) for i in indices}, None, self.tag)


@dataclass(frozen=True)
class FamilyStates:
    """Infinite-type states at one ``beta``; ``states`` empty means none exist."""

    beta: float
    states: tuple[ClosedFormState, ...]
    reason: str = ""
    certificate: dict = field(default_factory=dict)

    @property
    def empty(self) -> bool:
        return not self.states

    def of_tag(self, tag: Tag) -> list[ClosedFormState]:
        return [s for s in self.states if s.tag is tag]


class Family:
    name: str = ""
    n: int | None = None

    def indices(self, depth: int) -> list:
        return list(range(depth))

    def vertex(self, i) -> str:
        return f"v{i}"

    def truncate(self, depth: int, relative: str = "toeplitz") -> WeightedGraph:
        if depth < 1:
            raise ValueError("depth must be at least 1")
        vertices = [self.vertex(i) for i in self.indices(depth)]
        edges = [t + (E,) for t in self._edges(depth)]
        g = build(vertices, edges)
        if relative == "full":
            reg = set(self.regular_vertices(depth))
            return g.with_relative_set([v for v in g.vertices if v in reg and v in g.regular])
        if relative != "toeplitz":
            raise ValueError(f"relative must be 'toeplitz' or 'full', got {relative!r}")
        return g

    def relative_set(self, depth: int, relative: str) -> set[str]:
        return set(self.regular_vertices(depth)) if relative == "full" else set()

    def regular_vertices(self, depth: int) -> list[str]:
        """Regular vertices of the infinite graph that fall inside the truncation."""
        return [self.vertex(i) for i in self.indices(depth)]

    def critical_betas(self) -> list[tuple[float, bool]]:
        """``(beta, Za finite there)`` for every ``beta`` where some ``Zs`` equals 1."""
        return []

    def beta_v(self, i) -> float:
        raise NotImplementedError

    def analytic(self, i, beta: float) -> PartitionEntry:
        raise NotImplementedError

    def states(self, beta: float, depth: int = 400) -> FamilyStates:
        raise NotImplementedError

    def _edges(self, depth: int) -> list[tuple[str, str, str]]:
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.n})" if self.n is not None else f"{type(self).__name__}()"


class Hub(Family):
    """``v_0`` carries a loop and emits ``e_n`` to every ``v_n``; ``f_n`` steps back from ``v_{n+1}`` to ``v_n``."""

    name = "hub"

    def _edges(self, depth):
        es = [(f"e{k}", "v0", f"v{k}") for k in range(depth)]
        es += [(f"f{k}", f"v{k + 1}", f"v{k}") for k in range(depth - 1)]
        return es

    def regular_vertices(self, depth):
        return [self.vertex(i) for i in self.indices(depth) if i != 0]  # v_0 emits infinitely many edges

    def critical_betas(self):
        return [(LN2, True)]

    def beta_v(self, i):
        return LN2

    def analytic(self, i, beta):
        v = self.vertex(i)
        x = math.exp(-beta)
        h = x * _geom(x)  # from v_0 into v_n, n >= 1, avoiding v_n before the end
        if i == 0:
            return _entry(v, beta, _finite(h), _finite(_geom(x)))
        loops = x * (1.0 - x ** i) / (1.0 - x) if x < 1.0 else float(i)
        g = _geom(loops)  # excursions at v_0 that avoid v_i
        below = (1.0 - x ** i) / (1.0 - x) if x < 1.0 else float(i)
        zs = x ** i * g * h
        za = 1.0 + h + below * g * h
        return _entry(v, beta, _finite(zs), _finite(za))

    def states(self, beta, depth=400):
        if abs(beta - LN2) <= BETA_EPS:
            st = ClosedFormState("m_E0", Tag.CONSERVATIVE, lambda n: 2.0 ** (-n - 1))
            return FamilyStates(beta, (st,), "single critical class E^0")
        return FamilyStates(beta, (), "every infinite path returns to v0, and no vertex is critical")


class BiInfiniteLine(Family):
    """``v_p`` for integer ``p`` with ``e_p: v_p -> v_{p+1}`` and ``f_p: v_{p+1} -> v_p``.

    Truncations are centered windows; ``wrap=True`` closes the window into a
    cycle in both directions so every vertex receives exactly two edges.
    """

    name = "bi-infinite-line"

    def __init__(self, wrap: bool = False):
        self.wrap = wrap

    def indices(self, depth):
        h = (depth - 1) // 2
        return list(range(-h, depth - h))

    def _edges(self, depth):
        ps = self.indices(depth)
        es = []
        for p, q in zip(ps, ps[1:]):
            es += [(f"e{p}", f"v{p}", f"v{q}"), (f"f{p}", f"v{q}", f"v{p}")]
        if self.wrap:
            last, first = ps[-1], ps[0]
            es += [(f"e{last}", f"v{last}", f"v{first}"), (f"f{last}", f"v{first}", f"v{last}")]
        return es

    def critical_betas(self):
        return [(LN2, False)]

    def beta_v(self, i):
        return LN2

    def analytic(self, i, beta):
        v = self.vertex(i)
        x = math.exp(-beta)
        disc = 1.0 - 4.0 * x * x
        if disc < -BETA_EPS:
            return _entry(v, beta, DIVERGENT, DIVERGENT)
        root = math.sqrt(max(disc, 0.0))
        first = (1.0 - root) / (2.0 * x)  # first-passage sum one step to the left
        zs = 1.0 - root
        za = 1.0 + 2.0 * first / (1.0 - first) if first < 1.0 - BETA_EPS else math.inf
        return _entry(v, beta, _finite(zs), _finite(za))

    def states(self, beta, depth=400):
        bound = harmonic_window_bound(beta, depth)
        cert = {"kind": "harmonic-window-bound", "depth": depth, "bound": bound}
        if beta <= LN2 + BETA_EPS:
            why = "no regular vertices, and harmonic nonnegative summable functions vanish"
        else:
            why = "harmonic nonnegative functions are not summable"
        return FamilyStates(beta, (), why, cert)


def harmonic_window_bound(beta: float, depth: int) -> float:
    """Largest ``m(v_0)`` of a harmonic ``m >= 0`` on ``v_{-depth}..v_{depth}`` with mass <= 1.

    On the line, ``S(m) = 0`` reads ``m_{p-1} + m_{p+1} = e^beta m_p``, a
    two-dimensional solution space. Maximizing ``m_0`` over it under the
    window constraints is a two-variable linear program; the optimum bounds
    ``m(v_0)`` for every infinite-type state, and by translation every value.
    """
    p = np.arange(-depth, depth + 1, dtype=float)
    c = math.exp(beta) / 2.0
    if abs(c - 1.0) <= BETA_EPS:
        basis = np.vstack([np.ones_like(p), p / depth])
    elif c < 1.0:
        theta = math.acos(c)
        basis = np.vstack([np.cos(theta * p), np.sin(theta * p)])
    else:
        r = c + math.sqrt(c * c - 1.0)
        basis = np.vstack([np.exp((p - depth) * math.log(r)), np.exp((-p - depth) * math.log(r))])
    at0 = basis[:, depth]
    A_ub = np.vstack([-basis.T, basis.sum(axis=1)[None, :]])
    b_ub = np.concatenate([np.zeros(len(p)), [1.0]])
    res = linprog(-at0, A_ub=A_ub, b_ub=b_ub, bounds=[(None, None)] * 2, method="highs")
    if res.status != 0:
        raise RuntimeError(f"window program failed: {res.message}")
    return max(0.0, float(-res.fun))


class BinaryRay(Family):
    """Two parallel edges ``e_n, f_n: v_n -> v_{n+1}``."""

    name = "binary-ray"

    def _edges(self, depth):
        es = []
        for k in range(depth - 1):
            es += [(f"e{k}", f"v{k}", f"v{k + 1}"), (f"f{k}", f"v{k}", f"v{k + 1}")]
        return es

    def beta_v(self, i):
        return 0.0

    def analytic(self, i, beta):
        q = 2.0 * math.exp(-beta)
        za = float(i + 1) if q == 1.0 else (1.0 - q ** (i + 1)) / (1.0 - q)
        return _entry(self.vertex(i), beta, Value.finite(0.0), Value.finite(za))

    def states(self, beta, depth=400):
        if beta < LN2 - BETA_EPS:
            r = math.exp(beta) / 2.0
            st = ClosedFormState("m_dis", Tag.DISSIPATIVE, lambda n: (1.0 - r) * r ** n)
            return FamilyStates(beta, (st,), "geometric solution of S(m) = 0")
        return FamilyStates(beta, (), "S(m) = 0 forces m(v_n) = (e^beta/2)^n m(v_0), not summable")


class LoopRay(Family):
    """Loop ``e_n`` at each ``v_n`` and ``f_n: v_n -> v_{n+1}``."""

    name = "loop-ray"
    extra_loops = 0

    def _edges(self, depth):
        es = [(f"e{k}", f"v{k}", f"v{k}") for k in range(depth)]
        es += [(f"d{j}", "v0", "v0") for j in range(self.extra_loops)]
        es += [(f"f{k}", f"v{k}", f"v{k + 1}") for k in range(depth - 1)]
        return es

    def beta_v(self, i):
        return 0.0

    def critical_betas(self):
        return [(0.0, True)]

    @staticmethod
    def a(beta: float) -> float:
        x = math.exp(-beta)
        return x / (1.0 - x) if beta > 0 else math.inf

    def analytic(self, i, beta):
        v = self.vertex(i)
        x = math.exp(-beta)
        if beta <= 0.0:
            return _entry(v, beta, Value.finite(1.0), Value.finite(1.0) if i == 0 else DIVERGENT)
        a = self.a(beta)
        return _entry(v, beta, Value.finite(x), Value.finite(math.fsum(a ** (i - k) for k in range(i + 1))))

    def states(self, beta, depth=400):
        if beta <= 0.0:
            st = ClosedFormState("m_v0", Tag.CONSERVATIVE, lambda n: 1.0 if n == 0 else 0.0)
            return FamilyStates(beta, (st,), "v0 is the only critical vertex")
        if beta < LN2 - BETA_EPS:
            a = self.a(beta)
            st = ClosedFormState("m_inf", Tag.DISSIPATIVE, lambda k: a ** (-(k + 1)) * (a - 1.0))
            return FamilyStates(beta, (st,), "unique summable solution of S(m) = 0")
        return FamilyStates(beta, (), "S(m) = 0 gives a non-summable geometric sequence")


class DoubleLoopRay(LoopRay):
    """The loop ray with a second loop ``d0`` at ``v_0``."""

    name = "double-loop-ray"
    extra_loops = 1

    def beta_v(self, i):
        return LN2

    def critical_betas(self):
        return [(LN2, True)]

    def analytic(self, i, beta):
        v = self.vertex(i)
        x = math.exp(-beta)
        if i == 0:
            return _entry(v, beta, Value.finite(2.0 * x), Value.finite(1.0))
        a0 = x * _geom(2.0 * x)  # v_0 -> v_1 first passage, looping at v_0 first
        if beta <= 0.0 or not math.isfinite(a0):
            return _entry(v, beta, Value.finite(x), DIVERGENT)
        a = self.a(beta)
        za = math.fsum(a ** (i - k) for k in range(1, i + 1)) + a0 * a ** (i - 1)
        return _entry(v, beta, Value.finite(x), Value.finite(za))

    def states(self, beta, depth=400):
        if abs(beta - LN2) <= BETA_EPS:
            st = ClosedFormState("m_v0", Tag.CONSERVATIVE, lambda n: 1.0 if n == 0 else 0.0)
            return FamilyStates(beta, (st,), "m(v_0) > 0 forces m(v_1) = 0 and hence m(v_n) = 0 for n >= 1")
        return FamilyStates(beta, (), "no infinite-type states away from ln 2")


class TailOn(Family):
    """A ray ``... -> v_3 -> v_2 -> v_1`` ending at ``v_1``, which carries ``n`` loops."""

    name = "tail-on"

    def __init__(self, n: int):
        if n < 2:
            raise ValueError("n must be at least 2")
        self.n = n

    def indices(self, depth):
        return list(range(1, depth + 1))

    def _edges(self, depth):
        es = [(f"e{j}", "v1", "v1") for j in range(1, self.n + 1)]
        es += [(f"f{k}", f"v{k + 1}", f"v{k}") for k in range(1, depth)]
        return es

    def critical_betas(self):
        return [(math.log(self.n), True)]

    def beta_v(self, i):
        return math.log(self.n) if i == 1 else 0.0

    def analytic(self, i, beta):
        x = math.exp(-beta)
        za = _finite(_geom(x))  # the empty path plus one descending path from each v_k above
        zs = Value.finite(self.n * x) if i == 1 else Value.finite(0.0)
        return _entry(self.vertex(i), beta, zs, za)

    def states(self, beta, depth=400):
        return FamilyStates(beta, (), "every infinite path ends in the loops at v1")


class On(Family):
    """One vertex with ``n`` loops."""

    name = "on"

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be at least 1")
        self.n = n

    def indices(self, depth):
        return [0]

    def vertex(self, i):
        return "v"

    def _edges(self, depth):
        return [(f"e{j}", "v", "v") for j in range(1, self.n + 1)]

    def critical_betas(self):
        return [(math.log(self.n), True)]

    def beta_v(self, i):
        return math.log(self.n)

    def analytic(self, i, beta):
        return _entry("v", beta, Value.finite(self.n * math.exp(-beta)), Value.finite(1.0))

    def states(self, beta, depth=400):
        return FamilyStates(beta, (), "no wandering paths")


class OInfinity(Family):
    """One vertex with infinitely many loops; ``truncate(D)`` keeps ``D`` of them."""

    name = "o-infinity"

    def indices(self, depth):
        return [0]

    def vertex(self, i):
        return "v"

    def _edges(self, depth):
        return [(f"e{j}", "v", "v") for j in range(1, depth + 1)]

    def regular_vertices(self, depth):
        return []

    def beta_v(self, i):
        return math.inf

    def analytic(self, i, beta):
        return _entry("v", beta, DIVERGENT, Value.finite(1.0))

    def states(self, beta, depth=400):
        return FamilyStates(beta, (), "no vertex is regular or critical")


FAMILIES = {
    "hub": Hub,
    "bi-infinite-line": BiInfiniteLine,
    "binary-ray": BinaryRay,
    "loop-ray": LoopRay,
    "double-loop-ray": DoubleLoopRay,
    "tail-on": TailOn,
    "on": On,
    "o-infinity": OInfinity,
}
PARAMETRIZED = {"tail-on", "on"}


def get_family(name: str, n: int | None = None) -> Family:
    if name not in FAMILIES:
        raise ValueError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}")
    if name in PARAMETRIZED:
        return FAMILIES[name](2 if n is None else n)
    return FAMILIES[name]()


# -- family-level classification ------------------------------------------

def analytic_partitions(f: Family, beta: float, depth: int) -> dict[str, PartitionEntry]:
    return {f.vertex(i): f.analytic(i, beta) for i in f.indices(depth)}


def family_classification(f: Family, beta: float, depth: int, tol: float = TOL) -> VertexClassification:
    g = f.truncate(depth)
    return label_partitions(analytic_partitions(f, beta, depth), g.scc_labels, beta, tol)


def family_simplex(f: Family, beta: float, depth: int, relative: str = "toeplitz",
                   tol: float = TOL) -> SimplexDescription:
    """Extreme points at ``beta``: labels from the analytic values, vectors from the truncation."""
    g = f.truncate(depth, relative)
    cls = family_classification(f, beta, depth, tol)
    R = f.relative_set(depth, relative)
    flags: dict[str, list[str]] = {v: list(fl) for v, fl in cls.flags.items()}

    def vec(v: str, tag: Tag) -> StateVector | None:
        st = first_hit_state(g, beta, v, tol=tol)
        if st is None:
            flags.setdefault(v, []).append("truncation has divergent first-hit sums")
            return None
        return StateVector(st.values, float(beta), tag)

    fin = {v: s for v in cls.regular if v not in R and (s := vec(v, Tag.FINITE_TYPE)) is not None}
    con = {k: s for k in cls.crit_classes if (s := vec(k[0], Tag.CONSERVATIVE)) is not None}
    fs = f.states(beta, depth)
    idx = f.indices(depth)
    # these solve S(m) = 0 everywhere, so they satisfy (m2) for any relative set
    dis = [s.vector(f, idx) for s in fs.of_tag(Tag.DISSIPATIVE)]
    status = DisStatus("FamilySolved", fs.reason, tuple(dis)) if dis else DisStatus("Empty", fs.reason)
    no_kms = tuple(f.vertex(i) for i in idx if beta < f.beta_v(i) - 1e-9)
    return SimplexDescription(float(beta), fin, con, status, cls, no_kms,
                              {v: tuple(fl) for v, fl in flags.items()})


def family_ground_states(f: Family, depth: int, relative: str = "toeplitz") -> GroundStates:
    R = f.relative_set(depth, relative)
    verts = [f.vertex(i) for i in f.indices(depth)]
    ext = {v: point_mass(verts, v) for v in verts if v not in R}
    kms = {f.vertex(i): math.isfinite(f.beta_v(i)) for i in f.indices(depth) if f.vertex(i) in ext}
    return GroundStates(ext, kms)
