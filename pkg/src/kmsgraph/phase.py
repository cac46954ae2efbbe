"""Critical inverse temperatures and phase tables over a grid of beta values."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import spectral
from .classify import Label, SimplexDescription, simplex
from .families import Family, family_simplex
from .graph import WeightedGraph
from .spectral import TOL

INSERT_TOL = 1e-12


@dataclass(frozen=True)
class CriticalInfo:
    vertex: str
    beta_v: float
    beta_crit: float | None
    za_finite: bool | None

    def to_json(self) -> dict:
        return {"vertex": self.vertex, "beta_v": self.beta_v, "beta_crit": self.beta_crit,
                "za_finite": self.za_finite}


def critical_betas(g: WeightedGraph, tol: float = TOL) -> dict[str, CriticalInfo]:
    out = {}
    for v in g.vertices:
        root = spectral.zs_root(g, v, tol)
        za_ok = None
        if root is not None:
            za_ok = spectral.partition_values(g, root, v, tol).za.is_finite
        out[v] = CriticalInfo(v, spectral.beta_v(g, v), root, za_ok)
    return out


@dataclass(frozen=True)
class PhaseRow:
    beta: float
    labels: dict[str, Label]
    n_fin: int
    n_con: int
    dis_status: str
    flags: dict[str, tuple[str, ...]]
    critical_point: bool = False

    @classmethod
    def from_simplex(cls, sd: SimplexDescription, critical_point: bool = False) -> "PhaseRow":
        return cls(sd.beta, dict(sd.classification.labels), len(sd.fin_extremes), len(sd.con_extremes),
                   sd.dis_status.kind, dict(sd.flags), critical_point)

    def to_json(self) -> dict:
        return {"beta": self.beta, "labels": {v: lab.value for v, lab in self.labels.items()},
                "n_fin": self.n_fin, "n_con": self.n_con, "dis_status": self.dis_status,
                "flags": {v: list(f) for v, f in self.flags.items()}, "critical_point": self.critical_point}


def grid(beta_min: float, beta_max: float, step: float) -> list[float]:
    n = int(math.floor((beta_max - beta_min) / step + 1e-9))
    return [float(x) for x in np.round(beta_min + step * np.arange(n + 1), 12)]


def _merge(betas: list[float], crit: list[float]) -> list[tuple[float, bool]]:
    lo, hi = min(betas), max(betas)
    out = {b: False for b in betas}
    for c in crit:
        if lo - INSERT_TOL <= c <= hi + INSERT_TOL:
            near = [b for b in out if abs(b - c) <= INSERT_TOL]
            for b in near:
                del out[b]
            out[c] = True
    return sorted(out.items())


def sweep(target: WeightedGraph | Family, betas, depth: int = 30, relative: str = "toeplitz",
          tol: float = TOL) -> list[PhaseRow]:
    """One row per beta; critical values inside the grid range are inserted and evaluated exactly there."""
    betas = [float(b) for b in betas]
    if isinstance(target, Family):
        crit = [b for b, _ in target.critical_betas()]
        return [PhaseRow.from_simplex(family_simplex(target, b, depth, relative, tol), is_crit)
                for b, is_crit in _merge(betas, crit)]
    info = critical_betas(target, tol)
    crit = sorted({c.beta_crit for c in info.values() if c.beta_crit is not None and c.za_finite})
    return [PhaseRow.from_simplex(simplex(target, b, tol, trusted=is_crit), is_crit)
            for b, is_crit in _merge(betas, crit)]


CSV_COLUMNS = ["beta", "vertex", "class", "n_fin", "n_con", "dis_status", "flags"]


def rows_to_csv(rows: list[PhaseRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in rows:
        for v, lab in r.labels.items():
            w.writerow([repr(r.beta), v, lab.value, r.n_fin, r.n_con, r.dis_status, "; ".join(r.flags.get(v, ()))])
    return buf.getvalue()
