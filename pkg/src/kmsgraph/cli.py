"""Command-line interface: ``kmsgraph <command> [flags]``.

Exit codes: 0 success, 2 invalid graph or state, 3 enumeration cap hit or an
inconclusive boundary-band result, 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import re
import sys
from typing import Any

import numpy as np

from . import classify as C
from . import families as F
from . import oracle as O
from . import paction as P
from . import phase as PH
from . import spectral as S
from .graph import GraphError, load
from .measures import CylinderMeasure, InvalidPath, NotBoundaryPath

SCHEMA = "kms-graph/1"
EXIT_OK, EXIT_INVALID, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 2, 3, 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


_LN = re.compile(r"^ln\(\s*([0-9]+(?:\.[0-9]*)?)\s*\)$")


def parse_beta(text: str) -> float:
    """A decimal, or ``ln(k)`` evaluated as ``math.log(k)``."""
    t = text.strip()
    m = _LN.match(t)
    try:
        beta = math.log(float(m.group(1))) if m else float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot read beta from {text!r}") from None
    if not math.isfinite(beta) or beta < 0:
        raise argparse.ArgumentTypeError(f"beta must be a finite number >= 0, got {text!r}")
    return beta


# -- serialization --------------------------------------------------------

def _clean(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, S.Value):
        return obj.to_json()
    return obj


def dumps(report: dict) -> str:
    return json.dumps(_clean(report), sort_keys=True, indent=2) + "\n"


def _partition_json(pv: S.PartitionEntry) -> dict:
    return {"Zs": pv.zs.to_json(), "Za": pv.za.to_json(), "Z": pv.z.to_json()}


def _state_json(g, beta, st: C.StateVector) -> dict:
    return {"values": st.to_json(), "defect": C.defect(g, beta, st), "tag": st.tag.value}


def _simplex_json(g, sd: C.SimplexDescription) -> dict:
    cls = sd.classification
    return {
        "beta": sd.beta,
        "labels": {v: lab.value for v, lab in cls.labels.items()},
        "partitions": {v: _partition_json(pv) for v, pv in cls.partitions.items()},
        "crit_classes": [list(k) for k in cls.crit_classes],
        "fin_extremes": {v: _state_json(g, sd.beta, st) for v, st in sd.fin_extremes.items()},
        "con_extremes": [{"class": list(k), **_state_json(g, sd.beta, st)} for k, st in sd.con_extremes.items()],
        "dis_status": sd.dis_status.to_json(),
        "no_kms_vertices": list(sd.no_kms_vertices),
        "flags": {v: list(f) for v, f in sd.flags.items()},
    }


def _boundary_flagged(flags: dict) -> bool:
    return any(msg.startswith("boundary") for fl in flags.values() for msg in fl)


# -- commands -------------------------------------------------------------

def _graph(args):
    if not args.graph:
        raise UsageError("--graph is required")
    return load(args.graph)


def cmd_classify(args) -> tuple[dict, int]:
    g = _graph(args)
    beta = _require_beta(args)
    trusted = False
    if args.at_critical:
        info = PH.critical_betas(g, args.tol)
        roots = [c.beta_crit for c in info.values() if c.beta_crit is not None and c.za_finite]
        if not roots:
            raise UsageError("--at-critical: the graph has no critical beta")
        beta = min(roots, key=lambda r: abs(r - beta))
        trusted = True
    sd = C.simplex(g, beta, args.tol, trusted=trusted)
    report = _simplex_json(g, sd)
    report["nice_graph"] = _nice_json(C.nice_graph_check(g))
    return report, EXIT_INCONCLUSIVE if _boundary_flagged(sd.flags) else EXIT_OK


def _nice_json(nice):
    if nice is None:
        return None
    return {"k": nice.k, "l": nice.l, "threshold": nice.threshold}


def _require_beta(args) -> float:
    if args.beta is None:
        raise UsageError("--beta is required")
    return args.beta


def _family(args) -> F.Family:
    if args.name == "bi-infinite-line":
        return F.BiInfiniteLine(wrap=args.wrap)
    return F.get_family(args.name, args.n)


def cmd_sweep(args) -> tuple[dict | str, int]:
    betas = PH.grid(args.beta_min, args.beta_max, args.step)
    if args.family:
        args.name = args.family
        target = _family(args)
    else:
        target = _graph(args)
    rows = PH.sweep(target, betas, depth=args.depth, relative=args.relative, tol=args.tol)
    code = EXIT_INCONCLUSIVE if any(_boundary_flagged(r.flags) and not r.critical_point for r in rows) else EXIT_OK
    if args.format == "csv":
        return PH.rows_to_csv(rows), code
    return {"rows": [r.to_json() for r in rows]}, code


def cmd_oracle(args) -> tuple[dict, int]:
    g = _graph(args)
    beta = _require_beta(args)
    vertices = [args.vertex] if args.vertex else list(g.vertices)
    classes = [O.PathClass(c) for c in args.path_class] if args.path_class else [
        O.PathClass.SIMPLE_LOOP, O.PathClass.FIRST_HIT, O.PathClass.ALL]
    records = []
    for v in vertices:
        if v not in g.index:
            raise UsageError(f"unknown vertex {v!r}")
        for pc in classes:
            if pc is O.PathClass.FIRST_HIT_FROM:
                for src in g.vertices:
                    q = O.PathClassQuery(v, pc, args.L, source=src)
                    records.append({"vertex": v, "class": pc.value, "source": src, "L": args.L,
                                    "sum": O.class_sum(g, q, beta, args.method)})
                continue
            q = O.PathClassQuery(v, pc, args.L)
            records.append({"vertex": v, "class": pc.value, "L": args.L,
                            "sum": O.class_sum(g, q, beta, args.method)})
    return {"beta": beta, "method": args.method, "records": records}, EXIT_OK


def cmd_measure(args) -> tuple[dict, int]:
    g = _graph(args)
    beta = _require_beta(args)
    if not args.state:
        raise UsageError("--state is required")
    with open(args.state) as fh:
        raw = json.load(fh)
    unknown = [v for v in raw if v not in g.index]
    if unknown:
        raise GraphError(f"state mentions unknown vertices {unknown}")
    m = C.StateVector({v: float(raw.get(v, 0.0)) for v in g.vertices}, beta)
    cm = CylinderMeasure(m, beta, g)
    report: dict = {"beta": beta, "membership": C.check_membership(g, beta, m, args.tol_m).to_json()}
    if args.path is not None:
        report["path"] = args.path
        report["cylinder_mass"] = cm.cylinder_mass(args.path)
        try:
            report["atom_mass"] = cm.atom_mass(args.path)
        except NotBoundaryPath as exc:
            report["atom_mass"] = None
            report["atom_note"] = str(exc)
    if args.L is not None:
        report["finite_mass"] = {"L": args.L, "value": cm.finite_mass(args.L)}
    return report, EXIT_OK


def cmd_action_check(args) -> tuple[dict, int]:
    if args.graph:
        graphs = [("graph", load(args.graph))]
    else:
        rng = np.random.default_rng(args.seed)
        graphs = [(f"random-{i}", P.random_action_graph(rng))
                  for i in range(args.random)]
    out, ok = [], True
    for name, g in graphs:
        rep = P.check_axioms(g, args.max_word, args.max_prefix, args.max_cycle)
        ok &= rep.ok
        out.append({"name": name, **rep.to_json()})
    return {"max_word": args.max_word, "max_prefix": args.max_prefix, "max_cycle": args.max_cycle,
            "seed": args.seed, "graphs": out, "pass": ok}, EXIT_OK if ok else EXIT_INVALID


def cmd_family(args) -> tuple[dict, int]:
    f = _family(args)
    beta = _require_beta(args)
    g = f.truncate(args.depth, args.relative)
    sd = F.family_simplex(f, beta, args.depth, args.relative, args.tol)
    fs = f.states(beta, args.cert_depth)
    idx = f.indices(args.depth)
    report = _simplex_json(g, sd)
    report.update({
        "family": f.name, "n": f.n, "depth": args.depth, "relative": args.relative,
        "beta_v": {f.vertex(i): f.beta_v(i) for i in idx},
        "infinite_type_states": [{"name": s.name, "tag": s.tag.value,
                                  "values": s.vector(f, idx).to_json()} for s in fs.states],
        "infinite_type_reason": fs.reason,
        "certificate": fs.certificate or None,
        "truncation_nice_graph": _nice_json(C.nice_graph_check(g)),
    })
    return report, EXIT_OK


def cmd_ground(args) -> tuple[dict, int]:
    if args.family:
        args.name = args.family
        gs = F.family_ground_states(_family(args), args.depth, args.relative)
    else:
        gs = C.ground_states(_graph(args))
    return {"extremes": {v: st.to_json() for v, st in gs.extremes.items()},
            "kms_infinity": gs.kms_infinity}, EXIT_OK


# -- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--graph", help="graph description (JSON)")
    common.add_argument("--beta", type=parse_beta, help="inverse temperature: decimal or ln(k)")
    common.add_argument("--tol", type=float, default=S.TOL, help="boundary band on spectral radius and Zs")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--format", choices=["json", "csv"], default="json")

    fam = argparse.ArgumentParser(add_help=False)
    fam.add_argument("--n", type=int, default=None, help="parameter for tail-on and on")
    fam.add_argument("--depth", type=int, default=30)
    fam.add_argument("--relative", choices=["toeplitz", "full"], default="toeplitz")
    fam.add_argument("--wrap", action="store_true", help="close bi-infinite-line truncations into a cycle")

    p = _Parser(prog="kmsgraph", description="KMS-state classification for weighted graphs")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("classify", parents=[common], help="vertex classes and extreme states at one beta")
    s.add_argument("--at-critical", action="store_true", help="snap beta to the nearest root-found critical value")
    s.set_defaults(func=cmd_classify)

    s = sub.add_parser("sweep", parents=[common, fam], help="phase table over a beta grid")
    s.add_argument("--family", choices=sorted(F.FAMILIES))
    s.add_argument("--beta-min", type=parse_beta, default=0.0)
    s.add_argument("--beta-max", type=parse_beta, default=2.0)
    s.add_argument("--step", type=float, default=0.1)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("oracle", parents=[common], help="truncated path sums by enumeration")
    s.add_argument("--vertex")
    s.add_argument("--L", type=int, default=10)
    s.add_argument("--class", dest="path_class", action="append", choices=[c.value for c in O.PathClass])
    s.add_argument("--method", choices=["enumerate", "dp"], default="enumerate")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("measure", parents=[common], help="cylinder and atom masses of a state")
    s.add_argument("--state", help="state vector JSON {vertex: value}")
    s.add_argument("--path", help="comma-separated edge ids, or a vertex id")
    s.add_argument("--L", type=int, default=None, help="also report finite-path mass up to this length")
    s.add_argument("--tol-m", type=float, default=C.TOL_M)
    s.set_defaults(func=cmd_measure)

    s = sub.add_parser("action-check", parents=[common], help="partial-action axiom suite")
    s.add_argument("--max-word", type=int, default=4)
    s.add_argument("--max-prefix", type=int, default=6)
    s.add_argument("--max-cycle", type=int, default=4)
    s.add_argument("--random", type=int, default=20, help="number of random graphs when --graph is absent")
    s.set_defaults(func=cmd_action_check)

    s = sub.add_parser("family", parents=[common, fam], help="one example family at one beta")
    s.add_argument("--name", required=True, choices=sorted(F.FAMILIES))
    s.add_argument("--cert-depth", type=int, default=400, help="window depth for emptiness certificates")
    s.set_defaults(func=cmd_family)

    s = sub.add_parser("ground", parents=[common, fam], help="ground states and the KMS_inf flag")
    s.add_argument("--family", choices=sorted(F.FAMILIES))
    s.set_defaults(func=cmd_ground)
    return p


def run(argv: list[str] | None = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        report, code = args.func(args)
    except UsageError as exc:
        print(f"kmsgraph: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GraphError, InvalidPath, C.NotAState, C.NotEquivariant) as exc:
        print(f"kmsgraph: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, json.JSONDecodeError) as exc:
        print(f"kmsgraph: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (O.ExplosionCap, S.SingularSolve) as exc:
        print(f"kmsgraph: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    if isinstance(report, str):
        stdout.write(report)
    else:
        stdout.write(dumps({"schema": SCHEMA, "command": args.command, "tol": args.tol, **report}))
    return code


def main() -> None:
    sys.exit(run())
