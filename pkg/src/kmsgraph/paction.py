"""Partial action of the free group on edges over boundary paths.

Letters are ``(edge_id, +1)`` or ``(edge_id, -1)``. A word acts right to left:
``e`` prepends the edge (defined on paths starting at ``r(e)``), ``e^-1``
strips a leading ``e``. Boundary paths are finite paths ending outside the
relative set, or infinite paths; only eventually periodic infinite paths are
represented, as ``prefix`` followed by a repeated ``cycle``.

Two independent routes evaluate a word: :func:`apply` reads the word's shape
(``u``, ``u^-1`` or ``u u'^-1``) and rewrites a prefix in one step, while
:func:`apply_letters` composes single-letter maps. The axiom checks compare
them.
"""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Iterable, Iterator, Sequence

import numpy as np

from .graph import WeightedGraph, random_graph

Letter = tuple[str, int]


# -- words ----------------------------------------------------------------

@dataclass(frozen=True)
class FreeWord:
    letters: tuple[Letter, ...] = ()

    def __len__(self) -> int:
        return len(self.letters)

    def __mul__(self, other: "FreeWord") -> "FreeWord":
        return reduce(self.letters + other.letters)

    def inverse(self) -> "FreeWord":
        return FreeWord(tuple((e, -s) for e, s in reversed(self.letters)))

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return ".".join(e if s > 0 else f"{e}^-1" for e, s in self.letters)


def reduce(letters: Iterable[Letter]) -> FreeWord:
    return _reduce(tuple(letters))


@lru_cache(maxsize=1 << 16)
def _reduce(letters: tuple[Letter, ...]) -> FreeWord:
    out: list[Letter] = []
    for e, s in letters:
        if s not in (1, -1):
            raise ValueError(f"exponent must be +1 or -1, got {s!r}")
        if out and out[-1] == (e, -s):
            out.pop()
        else:
            out.append((e, s))
    return FreeWord(tuple(out))


def parse_word(text: str) -> FreeWord:
    """Parse ``"e.f^-1.g"`` (``1`` or empty for the identity)."""
    letters = []
    for tok in text.replace(" ", "").split("."):
        if tok in ("", "1"):
            continue
        if tok.endswith("^-1"):
            letters.append((tok[:-3], -1))
        else:
            letters.append((tok, 1))
    return reduce(letters)


# -- shapes ---------------------------------------------------------------

@dataclass(frozen=True)
class Identity:
    pass


@dataclass(frozen=True)
class PathWord:
    u: tuple[str, ...]


@dataclass(frozen=True)
class InversePathWord:
    u: tuple[str, ...]


@dataclass(frozen=True)
class Transposition:
    u: tuple[str, ...]
    u_prime: tuple[str, ...]


@dataclass(frozen=True)
class Null:
    pass


Shape = Identity | PathWord | InversePathWord | Transposition | Null


@lru_cache(maxsize=1 << 16)
def shape(g: WeightedGraph, w: FreeWord) -> Shape:
    letters = w.letters
    if not letters:
        return Identity()
    if any(e not in g.edge_map for e, _ in letters):
        return Null()
    k = 0
    while k < len(letters) and letters[k][1] > 0:
        k += 1
    if any(s > 0 for _, s in letters[k:]):
        return Null()  # some e^-1 f factor
    u = tuple(e for e, _ in letters[:k])
    u_prime = tuple(e for e, _ in reversed(letters[k:]))
    if (u and not g.is_path(u)) or (u_prime and not g.is_path(u_prime)):
        return Null()
    if not u_prime:
        return PathWord(u)
    if not u:
        return InversePathWord(u_prime)
    if g.range(u[-1]) != g.range(u_prime[-1]):
        return Null()
    return Transposition(u, u_prime)


# -- boundary paths -------------------------------------------------------

@dataclass(frozen=True)
class BoundaryPath:
    """Canonical boundary path: shortest prefix, primitive cycle (empty if finite)."""

    prefix: tuple[str, ...]
    cycle: tuple[str, ...]
    start: str

    @property
    def is_finite(self) -> bool:
        return not self.cycle

    def first_edge(self) -> str | None:
        if self.prefix:
            return self.prefix[0]
        return self.cycle[0] if self.cycle else None

    def edges(self, n: int) -> tuple[str, ...]:
        """First ``n`` edges (all of them for a shorter finite path)."""
        out = list(self.prefix[:n])
        while self.cycle and len(out) < n:
            out.extend(self.cycle)
        return tuple(out[:n])

    def __str__(self) -> str:
        if self.is_finite:
            return ",".join(self.prefix) if self.prefix else self.start
        head = ",".join(self.prefix)
        return f"{head}({','.join(self.cycle)})^inf" if head else f"({','.join(self.cycle)})^inf"


def _primitive(cycle: tuple[str, ...]) -> tuple[str, ...]:
    n = len(cycle)
    for p in range(1, n + 1):
        if n % p == 0 and cycle[:p] * (n // p) == cycle:
            return cycle[:p]
    return cycle


def make_path(g: WeightedGraph, prefix: Sequence[str] = (), cycle: Sequence[str] = (),
              start: str | None = None, check: bool = True) -> BoundaryPath:
    prefix, cycle = tuple(prefix), _primitive(tuple(cycle))
    while prefix and cycle and prefix[-1] == cycle[-1]:
        prefix, cycle = prefix[:-1], (cycle[-1],) + cycle[:-1]
    if prefix:
        start = g.source(prefix[0])
    elif cycle:
        start = g.source(cycle[0])
    if start is None:
        raise ValueError("a length-0 path needs its vertex")
    bp = BoundaryPath(prefix, cycle, start)
    if check and not is_boundary_path(g, bp):
        raise ValueError(f"{bp} is not a boundary path")
    return bp


def is_boundary_path(g: WeightedGraph, x: BoundaryPath) -> bool:
    if x.start not in g.index:
        return False
    walk = x.prefix + x.cycle
    if walk and (not g.is_path(walk) or g.source(walk[0]) != x.start):
        return False
    if x.cycle:
        return g.range(x.cycle[-1]) == g.source(x.cycle[0])
    end = g.range(x.prefix[-1]) if x.prefix else x.start
    return end not in g.relative_set


# -- application ----------------------------------------------------------

def _canonical(g: WeightedGraph, prefix: tuple[str, ...], cycle: tuple[str, ...]) -> BoundaryPath:
    # cycle is already primitive; only the prefix/rotation needs normalizing
    while prefix and cycle and prefix[-1] == cycle[-1]:
        prefix, cycle = prefix[:-1], (cycle[-1],) + cycle[:-1]
    return BoundaryPath(prefix, cycle, g.source(prefix[0] if prefix else cycle[0]))


def _prepend(g: WeightedGraph, u: tuple[str, ...], x: BoundaryPath) -> BoundaryPath:
    if not u:
        return x
    return _canonical(g, u + x.prefix, x.cycle)


def _strip(g: WeightedGraph, u: tuple[str, ...], x: BoundaryPath) -> BoundaryPath | None:
    """Remove the leading ``u`` from ``x``; ``None`` if ``x`` does not start with ``u``."""
    if not u:
        return x
    if x.edges(len(u)) != u:
        return None
    n = len(u)
    if len(x.prefix) >= n:
        rest = x.prefix[n:]
        if rest or x.cycle:
            return BoundaryPath(rest, x.cycle, g.source(rest[0] if rest else x.cycle[0]))
        return BoundaryPath((), (), g.range(u[-1]))
    k = (n - len(x.prefix)) % len(x.cycle)
    cyc = x.cycle[k:] + x.cycle[:k]
    return BoundaryPath((), cyc, g.source(cyc[0]))


def apply(g: WeightedGraph, w: FreeWord, x: BoundaryPath) -> BoundaryPath | None:
    """``phi_w(x)`` read off the shape of ``w``; ``None`` outside the domain."""
    sh = shape(g, w)
    if isinstance(sh, Identity):
        return x
    if isinstance(sh, Null):
        return None
    if isinstance(sh, PathWord):
        return _prepend(g, sh.u, x) if x.start == g.range(sh.u[-1]) else None
    if isinstance(sh, InversePathWord):
        return _strip(g, sh.u, x)
    rest = _strip(g, sh.u_prime, x)
    return None if rest is None else _prepend(g, sh.u, rest)


def apply_letter(g: WeightedGraph, letter: Letter, x: BoundaryPath) -> BoundaryPath | None:
    e, s = letter
    if s > 0:
        return _prepend(g, (e,), x) if x.start == g.range(e) else None
    return _strip(g, (e,), x)


def apply_letters(g: WeightedGraph, w: FreeWord, x: BoundaryPath | None) -> BoundaryPath | None:
    """``phi_{l_1} o ... o phi_{l_k}`` letter by letter."""
    for letter in reversed(w.letters):
        if x is None:
            return None
        x = apply_letter(g, letter, x)
    return x


# -- samples --------------------------------------------------------------

def _paths_from(g: WeightedGraph, v: str, max_len: int) -> Iterator[tuple[str, ...]]:
    stack: list[tuple[tuple[str, ...], str]] = [((), v)]
    while stack:
        p, end = stack.pop()
        yield p
        if len(p) < max_len:
            stack.extend((p + (e.id,), e.dst) for e in g.out_edges[end])


def primitive_cycles(g: WeightedGraph, max_cycle: int) -> list[tuple[str, ...]]:
    """Closed primitive edge cycles up to length ``max_cycle``, every rotation included."""
    out = []
    for v in g.vertices:
        for p in _paths_from(g, v, max_cycle):
            if p and g.range(p[-1]) == v and _primitive(p) == p:
                out.append(p)
    return out


def boundary_sample(g: WeightedGraph, max_prefix: int = 6, max_cycle: int = 4) -> list[BoundaryPath]:
    """Every canonical boundary path with prefix <= max_prefix and cycle <= max_cycle."""
    cycles_at: dict[str, list[tuple[str, ...]]] = {v: [] for v in g.vertices}
    for c in primitive_cycles(g, max_cycle):
        cycles_at[g.source(c[0])].append(c)
    out = []
    for v in g.vertices:
        for p in _paths_from(g, v, max_prefix):
            end = g.range(p[-1]) if p else v
            if end not in g.relative_set:
                out.append(BoundaryPath(p, (), v))
            for c in cycles_at[end]:
                if p and p[-1] == c[-1]:
                    continue  # not canonical: the prefix could be shortened
                out.append(BoundaryPath(p, c, v))
    return out


def witness(g: WeightedGraph, v: str) -> BoundaryPath:
    """Some boundary path starting at ``v``, found by walking until a sink-like end or a repeat."""
    walk: list[str] = []
    seen = {v: 0}
    cur = v
    while cur in g.relative_set:
        e = g.out_edges[cur][0]
        walk.append(e.id)
        cur = e.dst
        if cur in seen:
            i = seen[cur]
            return make_path(g, walk[:i], walk[i:], v)
        seen[cur] = len(walk)
    return make_path(g, walk, (), v)


def defined_sequences(g: WeightedGraph, x: BoundaryPath, max_word: int
                      ) -> Iterator[tuple[tuple[Letter, ...], tuple[BoundaryPath, ...]]]:
    """Letter sequences (not necessarily reduced) that act stepwise on ``x``.

    Yields ``(letters, chain)`` where ``chain[j]`` is the image after the last
    ``j`` letters have acted. Sequences grow on the left, following only
    letters whose single-step map is defined at the current image.
    """
    stack = [((), (x,))]
    while stack:
        seq, chain = stack.pop()
        yield seq, chain
        if len(seq) == max_word:
            continue
        y = chain[-1]
        cands = [(e.id, 1) for e in g.in_edges[y.start]]
        first = y.first_edge()
        if first is not None:
            cands.append((first, -1))
        for letter in cands:
            z = apply_letter(g, letter, y)
            if z is not None:
                stack.append(((letter,) + seq, chain + (z,)))


def reduced_words(g: WeightedGraph, max_len: int) -> Iterator[FreeWord]:
    alphabet = [(e.id, s) for e in g.edges for s in (1, -1)]
    yield FreeWord()
    for n in range(1, max_len + 1):
        for combo in product(alphabet, repeat=n):
            if all(combo[i] != (combo[i + 1][0], -combo[i + 1][1]) for i in range(n - 1)):
                yield FreeWord(combo)


# -- axiom suite ----------------------------------------------------------

def random_action_graph(rng: np.random.Generator) -> WeightedGraph:
    """Random graph on at most 5 vertices, no parallel edges, sized so the exhaustive suite stays fast."""
    return random_graph(rng, max_vertices=5, max_parallel=1, edge_prob=0.25, relative_prob=0.5)


@dataclass
class AxiomReport:
    checks: Counter
    violations: Counter
    examples: list[str]
    sample_size: int = 0

    @property
    def ok(self) -> bool:
        return sum(self.violations.values()) == 0

    def to_json(self) -> dict:
        laws = sorted(set(self.checks) | set(self.violations))
        return {"sample_size": self.sample_size,
                "laws": {k: {"checks": self.checks[k], "violations": self.violations[k]} for k in laws},
                "pass": self.ok, "examples": self.examples[:10]}


def check_axioms(g: WeightedGraph, max_word: int = 4, max_prefix: int = 6, max_cycle: int = 4,
                 null_word_len: int = 2) -> AxiomReport:
    """Run every law over the boundary-path sample and all words up to ``max_word``.

    For each sample path ``x`` and each stepwise-defined letter sequence
    ``s = s_1 s_2`` (``s_2`` acting first) the checks are

    * composition: ``apply(red(s_2), x)`` and ``apply(red(s_1), .)`` reproduce
      the stepwise images, and ``apply(red(s), x)`` equals the final image;
    * involution: ``apply(red(s)^-1, .)`` returns to ``x``;
    * semi-saturation: when ``s`` is reduced, every right factor is defined at ``x``.
    """
    rep = AxiomReport(Counter(), Counter(), [])
    sample = boundary_sample(g, max_prefix, max_cycle)
    rep.sample_size = len(sample)

    def record(law: str, ok: bool, detail) -> None:
        rep.checks[law] += 1
        if not ok:
            rep.violations[law] += 1
            if len(rep.examples) < 50:
                rep.examples.append(f"{law}: {detail()}")

    edge_ids = [e.id for e in g.edges]
    for x in sample:
        hits = [e for e in edge_ids if apply_letter(g, (e, -1), x) is not None]
        record("orthogonality", len(hits) <= 1, lambda: f"{x} lies in the ranges of {hits}")
        direct: dict[tuple[Letter, ...], BoundaryPath | None] = {(): x}
        for seq, chain in defined_sequences(g, x, max_word):
            if not seq:
                continue
            z = chain[-1]
            w = reduce(seq)
            direct[seq] = got = apply(g, w, x)
            record("composition", got == z, lambda: f"{w} at {x}")
            back = apply(g, w.inverse(), z)
            record("involution", back == x, lambda: f"{w} at {x} -> {z} -> {back}")
            n = len(seq)
            for j in range(1, n):
                # the right factor is a shorter sequence already checked against chain[j]
                w1 = reduce(seq[:n - j])
                record("composition", apply(g, w1, chain[j]) == z,
                       lambda: f"{w1} * {reduce(seq[n - j:])} at {x}")
                if len(w) == n:
                    record("semi-saturation", direct[seq[n - j:]] is not None,
                           lambda: f"{w1}|{reduce(seq[n - j:])} at {x}")
    for w in reduced_words(g, null_word_len):
        sh = shape(g, w)
        if isinstance(sh, Null):
            bad = [x for x in sample if apply_letters(g, w, x) is not None]
            record("shape-domain", not bad, lambda: f"Null word {w} defined at {bad[0]}")
        elif isinstance(sh, Identity):
            continue
        else:
            u_prime = sh.u_prime if isinstance(sh, Transposition) else (
                sh.u if isinstance(sh, InversePathWord) else ())
            v = g.range(u_prime[-1]) if u_prime else g.range(sh.u[-1])
            x = _prepend(g, u_prime, witness(g, v))
            record("shape-domain", apply_letters(g, w, x) is not None, lambda: f"{w} undefined at witness {x}")
    return rep
