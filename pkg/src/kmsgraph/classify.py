"""Vertex classes, extreme states, membership and convex decomposition.

A candidate state is a map ``m: E^0 -> [0, 1]``. It is admissible at ``beta``
when ``sum m = 1``, the defect ``S(m)`` vanishes on the relative set and
``S(m) >= 0`` everywhere, where::

    S(m)(v) = m(v) - sum_{e in vE^1} N(e)^{-beta} m(r(e))
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping

import numpy as np

from . import spectral
from .graph import WeightedGraph
from .spectral import TOL, PartitionEntry

TOL_M = 1e-9
CRIT_BETA_TOL = 1e-9


class NotEquivariant(ValueError):
    pass


class NotAState(ValueError):
    pass


class Label(str, Enum):
    REGULAR = "Regular"
    CRITICAL = "Critical"
    NON_EQUIVARIANT = "NonEquivariant"


class Tag(str, Enum):
    FINITE_TYPE = "FiniteType"
    CONSERVATIVE = "Conservative"
    DISSIPATIVE = "Dissipative"
    GROUND = "Ground"
    MIXED = "Mixed"
    UNCHECKED = "Unchecked"


@dataclass(frozen=True)
class StateVector:
    values: Mapping[str, float]
    beta: float | None = None
    tag: Tag = Tag.UNCHECKED

    def __getitem__(self, v: str) -> float:
        return self.values.get(v, 0.0)

    @property
    def total(self) -> float:
        return math.fsum(self.values.values())

    def to_json(self) -> dict[str, float]:
        return dict(self.values)


@dataclass(frozen=True)
class VertexClassification:
    beta: float
    labels: dict[str, Label]
    crit_classes: tuple[tuple[str, ...], ...]
    flags: dict[str, tuple[str, ...]]
    partitions: dict[str, PartitionEntry]

    def with_label(self, label: Label) -> list[str]:
        return [v for v, lab in self.labels.items() if lab is label]

    @property
    def regular(self) -> list[str]:
        return self.with_label(Label.REGULAR)

    @property
    def critical(self) -> list[str]:
        return self.with_label(Label.CRITICAL)

    @property
    def equivariant(self) -> list[str]:
        return [v for v, lab in self.labels.items() if lab is not Label.NON_EQUIVARIANT]


def _near_one(x: float, tol: float) -> bool:
    return abs(x - 1.0) <= tol


def label_partitions(partitions: Mapping[str, PartitionEntry], scc: Mapping[str, int], beta: float,
                     tol: float = TOL, verify=None) -> VertexClassification:
    """Turn partition values into labels.

    ``verify(v)`` decides whether a vertex with ``|Zs - 1| <= tol`` is trusted
    as critical; untrusted ones are left NonEquivariant with a flag.
    """
    labels: dict[str, Label] = {}
    flags: dict[str, tuple[str, ...]] = {}
    for v, pv in partitions.items():
        f: list[str] = []
        zs, za = pv.zs, pv.za
        if za.is_finite and zs.is_finite and zs.x < 1.0 - tol:
            labels[v] = Label.REGULAR
        elif za.is_finite and zs.is_finite and _near_one(zs.x, tol):
            if verify is None or verify(v):
                labels[v] = Label.CRITICAL
            else:
                labels[v] = Label.NON_EQUIVARIANT
                f.append("boundary: Zs within tol of 1 at a beta not matching the root-found critical value")
        else:
            labels[v] = Label.NON_EQUIVARIANT
            if (zs.is_finite and _near_one(zs.x, tol)) or zs.status is spectral.Status.BOUNDARY:
                f.append("boundary: Zs at 1 with Za not finite")
            if za.status is spectral.Status.BOUNDARY:
                f.append("boundary: Za at its convergence edge")
        if f:
            flags[v] = tuple(f)
    groups: dict[int, list[str]] = {}
    for v, lab in labels.items():
        if lab is Label.CRITICAL:
            groups.setdefault(scc[v], []).append(v)
    return VertexClassification(float(beta), labels, tuple(tuple(c) for c in groups.values()),
                                flags, dict(partitions))


def classify_vertices(g: WeightedGraph, beta: float, tol: float = TOL,
                      trusted: bool = False) -> VertexClassification:
    """Label every vertex at ``beta``.

    Unless ``trusted`` (``beta`` is known to be a root-found critical value),
    a near-critical vertex is only called Critical after its own root of
    ``Zs = 1`` is located and found to agree with ``beta``.
    """
    parts = spectral.all_partition_values(g, beta, tol)

    def verify(v: str) -> bool:
        if trusted:
            return True
        root = spectral.zs_root(g, v, tol)
        return root is not None and abs(root - beta) <= CRIT_BETA_TOL * max(1.0, beta)

    return label_partitions(parts, g.scc_labels, beta, tol, verify)


# -- states ---------------------------------------------------------------

def first_hit_state(g: WeightedGraph, beta: float, v: str, pv: PartitionEntry | None = None,
                    tol: float = TOL) -> StateVector | None:
    """Normalized first-hit sums into ``v``; ``None`` if ``Za`` is not finite on ``g``."""
    pv = pv or spectral.partition_values(g, beta, v, tol)
    if not pv.za.is_finite:
        return None
    za = pv.za.x
    vals = {x: 0.0 for x in g.vertices}
    vals[v] = 1.0 / za
    for x, h in pv.first_hit.items():
        vals[x] = h / za
    return StateVector(vals, float(beta))


def extreme_state(g: WeightedGraph, beta: float, v: str, tol: float = TOL,
                  pv: PartitionEntry | None = None) -> StateVector:
    pv = pv or spectral.partition_values(g, beta, v, tol)
    if not (pv.za.is_finite and pv.zs.is_finite and pv.zs.x <= 1.0 + tol):
        raise NotEquivariant(f"{v!r} is neither regular nor critical at beta={beta!r}")
    tag = Tag.CONSERVATIVE if _near_one(pv.zs.x, tol) else Tag.FINITE_TYPE
    st = first_hit_state(g, beta, v, pv, tol)
    return StateVector(st.values, float(beta), tag)


def defect(g: WeightedGraph, beta: float, m: StateVector | Mapping[str, float]) -> dict[str, float]:
    vals = m.values if isinstance(m, StateVector) else m
    out = {}
    for v in g.vertices:
        flow = math.fsum(g.edge_factor(e.id, beta) * vals.get(e.dst, 0.0) for e in g.out_edges[v])
        out[v] = vals.get(v, 0.0) - flow
    return out


@dataclass(frozen=True)
class MembershipReport:
    m1_residual: float
    m2_violations: tuple[str, ...]
    m3_violations: tuple[str, ...]
    tol: float

    @property
    def m1(self) -> bool:
        return abs(self.m1_residual) <= self.tol

    @property
    def ok(self) -> bool:
        return self.m1 and not self.m2_violations and not self.m3_violations

    def to_json(self) -> dict:
        return {"m1": {"pass": self.m1, "residual": self.m1_residual},
                "m2": list(self.m2_violations), "m3": list(self.m3_violations),
                "pass": self.ok, "tol": self.tol}


def check_membership(g: WeightedGraph, beta: float, m: StateVector | Mapping[str, float],
                     tol_m: float = TOL_M) -> MembershipReport:
    vals = m.values if isinstance(m, StateVector) else m
    s = defect(g, beta, vals)
    resid = math.fsum(vals.get(v, 0.0) for v in g.vertices) - 1.0
    m2 = tuple(v for v in g.vertices if v in g.relative_set and abs(s[v]) > tol_m)
    m3 = tuple(v for v in g.vertices if s[v] < -tol_m or vals.get(v, 0.0) < -tol_m)
    return MembershipReport(resid, m2, m3, tol_m)


# -- decomposition --------------------------------------------------------

@dataclass(frozen=True)
class Decomposition:
    fin_coeffs: dict[str, float]
    con_coeffs: dict[tuple[str, ...], float]
    residual_mass: float
    consistency_failure: bool = False


def decompose(g: WeightedGraph, beta: float, m: StateVector | Mapping[str, float],
              classification: VertexClassification | None = None, tol_m: float = TOL_M,
              infinite_family: bool = False) -> Decomposition:
    vals = dict(m.values if isinstance(m, StateVector) else m)
    report = check_membership(g, beta, vals, tol_m)
    if not report.ok:
        raise NotAState(f"membership fails: {report.to_json()}")
    cls = classification or classify_vertices(g, beta)
    s = defect(g, beta, vals)
    remainder = dict(vals)
    fin: dict[str, float] = {}
    for v in cls.regular:
        if v in g.relative_set:
            continue
        pv = cls.partitions[v]
        c = pv.za.x * s[v] / (1.0 - pv.zs.x)
        fin[v] = c
        mv = first_hit_state(g, beta, v, pv)
        for x, val in mv.values.items():
            remainder[x] -= c * val
    con: dict[tuple[str, ...], float] = {}
    for klass in cls.crit_classes:
        rep = klass[0]
        con[klass] = remainder[rep] * cls.partitions[rep].za.x
    residual = 1.0 - math.fsum(fin.values()) - math.fsum(con.values())
    failure = (not infinite_family) and abs(residual) >= max(tol_m, 1e-8)
    return Decomposition(fin, con, residual, failure)


def reconstruct(g: WeightedGraph, beta: float, dec: Decomposition,
                classification: VertexClassification | None = None) -> dict[str, float]:
    cls = classification or classify_vertices(g, beta)
    out = {v: 0.0 for v in g.vertices}
    for v, c in dec.fin_coeffs.items():
        for x, val in first_hit_state(g, beta, v, cls.partitions[v]).values.items():
            out[x] += c * val
    for klass, c in dec.con_coeffs.items():
        rep = klass[0]
        for x, val in first_hit_state(g, beta, rep, cls.partitions[rep]).values.items():
            out[x] += c * val
    return out


# -- simplex --------------------------------------------------------------

@dataclass(frozen=True)
class DisStatus:
    kind: str  # "Empty" | "Unknown" | "FamilySolved"
    reason: str = ""
    states: tuple[StateVector, ...] = ()

    def to_json(self) -> dict:
        d: dict = {"kind": self.kind}
        if self.reason:
            d["reason"] = self.reason
        if self.states:
            d["states"] = [s.to_json() for s in self.states]
        return d


NO_WANDERING = DisStatus("Empty", "finite graph: every infinite path is recurrent")


@dataclass(frozen=True)
class SimplexDescription:
    beta: float
    fin_extremes: dict[str, StateVector]
    con_extremes: dict[tuple[str, ...], StateVector]
    dis_status: DisStatus
    classification: VertexClassification
    no_kms_vertices: tuple[str, ...] = ()
    flags: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def is_empty(self) -> bool:
        return not self.fin_extremes and not self.con_extremes and self.dis_status.kind != "FamilySolved"


def simplex(g: WeightedGraph, beta: float, tol: float = TOL, trusted: bool = False,
            classification: VertexClassification | None = None) -> SimplexDescription:
    cls = classification or classify_vertices(g, beta, tol, trusted)
    fin = {}
    for v in cls.regular:
        if v not in g.relative_set:
            fin[v] = extreme_state(g, beta, v, tol, cls.partitions[v])
    con = {}
    flags = {v: list(f) for v, f in cls.flags.items()}
    for klass in cls.crit_classes:
        ref = extreme_state(g, beta, klass[0], tol, cls.partitions[klass[0]])
        con[klass] = ref
        for other in klass[1:]:
            alt = extreme_state(g, beta, other, tol, cls.partitions[other])
            if max(abs(alt[x] - ref[x]) for x in g.vertices) > 1e-9:
                flags.setdefault(other, []).append("representative mismatch within critical class")
    no_kms = tuple(v for v in g.vertices if beta < spectral.beta_v(g, v) - 1e-9)
    return SimplexDescription(float(beta), fin, con, NO_WANDERING, cls, no_kms,
                              {v: tuple(f) for v, f in flags.items()})


# -- ground states --------------------------------------------------------

@dataclass(frozen=True)
class GroundStates:
    extremes: dict[str, StateVector]
    kms_infinity: dict[str, bool]


def point_mass(vertices, v: str) -> StateVector:
    return StateVector({x: 1.0 if x == v else 0.0 for x in vertices}, None, Tag.GROUND)


def ground_states(g: WeightedGraph) -> GroundStates:
    ext = {v: point_mass(g.vertices, v) for v in g.vertices if v not in g.relative_set}
    kms = {v: math.isfinite(spectral.beta_v(g, v)) for v in ext}
    return GroundStates(ext, kms)


# -- graphs with uniform in-path counts -----------------------------------

@dataclass(frozen=True)
class NiceGraph:
    k: int
    l: int
    threshold: float

    def regime(self, beta: float, tol: float = TOL) -> str:
        if beta < self.threshold - tol:
            return "empty"
        if beta <= self.threshold + tol:
            return "infinite-type"
        return "finite-type"


def nice_graph_check(g: WeightedGraph, max_length: int = 6) -> NiceGraph | None:
    """Detect a length ``l`` such that every vertex receives exactly ``k`` paths of length ``l``.

    Only meaningful for the constant weight ``e``; returns ``None`` otherwise.
    """
    if not g.vertices or any(abs(lw - 1.0) > 1e-12 for lw in g.log_weights.values()):
        return None
    n = len(g.vertices)
    A = np.zeros((n, n), dtype=object)
    for e in g.edges:
        A[g.index[e.src], g.index[e.dst]] += 1
    P = np.identity(n, dtype=object)
    for l in range(1, max_length + 1):
        P = P.dot(A)
        incoming = set(int(c) for c in P.sum(axis=0))
        if len(incoming) == 1:
            k = incoming.pop()
            if k >= 1:
                return NiceGraph(k, l, math.log(k) / l)
    return None
