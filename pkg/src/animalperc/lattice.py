"""Geometry of edge animals on the integer lattice.

An animal is a finite connected set of nearest-neighbour edges of Z^d.
Edges are stored canonically as (base, axis) where ``base`` is the
lexicographically smaller endpoint and ``axis`` is the coordinate in
which the other endpoint is one step up.  Lexicographic order compares
coordinate 0 first, then coordinate 1, and so on; this order is fixed
once here and used consistently everywhere.

Coordinates are plain Python integers, so there is no overflow bound to
respect; the enumeration scales used elsewhere keep every coordinate
within n_max + 2 of the origin anyway.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, NamedTuple

Vertex = tuple  # tuple[int, ...] of length d


class LatticeError(ValueError):
    """Structural problem with an animal or edge set."""


class EmptyAnimalError(LatticeError):
    pass


class DisconnectedAnimalError(LatticeError):
    pass


class Edge(NamedTuple):
    base: Vertex
    axis: int

    def endpoints(self) -> tuple[Vertex, Vertex]:
        tip = list(self.base)
        tip[self.axis] += 1
        return self.base, tuple(tip)


def edge_between(u: Vertex, w: Vertex) -> Edge:
    """Canonical edge joining two adjacent vertices."""
    if len(u) != len(w):
        raise LatticeError("endpoint dimensions differ")
    diff = [(i, w[i] - u[i]) for i in range(len(u)) if u[i] != w[i]]
    if len(diff) != 1 or abs(diff[0][1]) != 1:
        raise LatticeError(f"vertices {u} and {w} are not nearest neighbours")
    axis, step = diff[0]
    return Edge(u, axis) if step == 1 else Edge(w, axis)


@dataclass(frozen=True)
class Animal:
    """A finite set of lattice edges in Z^d.  Immutable; safe to share."""

    d: int
    edges: frozenset

    def __post_init__(self):
        if self.d < 2:
            raise LatticeError(f"dimension must be >= 2, got {self.d}")
        for e in self.edges:
            if len(e.base) != self.d:
                raise LatticeError(f"edge {e} does not live in Z^{self.d}")
            if not 0 <= e.axis < self.d:
                raise LatticeError(f"edge {e} has axis outside [0, {self.d})")

    @property
    def n(self) -> int:
        return len(self.edges)

    def vertices(self) -> set:
        verts = set()
        for e in self.edges:
            u, w = e.endpoints()
            verts.add(u)
            verts.add(w)
        return verts

    def sorted_edges(self) -> list:
        return sorted(self.edges)


@dataclass(frozen=True)
class AnimalStats:
    """Exact per-animal counts.

    m counts outlying edges: edges not in the animal sharing at least
    one endpoint with an animal edge, each counted once.  Contacts have
    both endpoints among the animal's vertices, solvents exactly one.
    """

    n: int
    m: int
    v: int
    c: int
    k_contacts: int
    s_solvents: int


def animal(d: int, edges: Iterable) -> Animal:
    """Build an Animal from (base, axis) pairs or Edge values."""
    canon = frozenset(Edge(tuple(b), a) for b, a in edges)
    return Animal(d, canon)


def is_connected(edges) -> bool:
    """True iff the edge set induces a single connected component.

    The empty set is not connected by convention.
    """
    edges = set(edges)
    if not edges:
        return False
    incident: dict = {}
    for e in edges:
        for x in e.endpoints():
            incident.setdefault(x, []).append(e)
    start = next(iter(edges))
    seen = {start}
    stack = [start]
    while stack:
        e = stack.pop()
        for x in e.endpoints():
            for f in incident[x]:
                if f not in seen:
                    seen.add(f)
                    stack.append(f)
    return len(seen) == len(edges)


def _require_nonempty(a: Animal):
    if not a.edges:
        raise EmptyAnimalError("operation undefined for the empty animal")


def compute_stats(a: Animal) -> AnimalStats:
    """Exact counts (n, m, v, c, contacts, solvents) for a connected animal."""
    _require_nonempty(a)
    if not is_connected(a.edges):
        raise DisconnectedAnimalError("animal is not connected")
    verts = a.vertices()
    d = a.d
    outlying = Counter()
    for x in verts:
        for axis in range(d):
            up = Edge(x, axis)
            if up not in a.edges:
                outlying[up] += 1
            lo = list(x)
            lo[axis] -= 1
            down = Edge(tuple(lo), axis)
            if down not in a.edges:
                outlying[down] += 1
    n = len(a.edges)
    v = len(verts)
    k = sum(1 for cnt in outlying.values() if cnt == 2)
    s = sum(1 for cnt in outlying.values() if cnt == 1)
    return AnimalStats(n=n, m=len(outlying), v=v, c=n - v + 1, k_contacts=k, s_solvents=s)


def translate(a: Animal, vec) -> Animal:
    if len(vec) != a.d:
        raise LatticeError("translation vector has wrong length")
    moved = frozenset(
        Edge(tuple(b + t for b, t in zip(e.base, vec)), e.axis) for e in a.edges
    )
    return Animal(a.d, moved)


def lex_extreme_vertices(a: Animal) -> tuple[Vertex, Vertex]:
    """(lex-min vertex, lex-max vertex) of the animal's vertex set."""
    _require_nonempty(a)
    verts = a.vertices()
    return min(verts), max(verts)


def normalize_lex_min(a: Animal) -> Animal:
    """Unique translate whose lex-minimal vertex is the origin."""
    _require_nonempty(a)
    vmin, _ = lex_extreme_vertices(a)
    if all(c == 0 for c in vmin):
        return a
    return translate(a, tuple(-c for c in vmin))


def is_normalized(a: Animal) -> bool:
    vmin, _ = lex_extreme_vertices(a)
    return all(c == 0 for c in vmin)


def brute_force_perimeter(a: Animal) -> int:
    """Outlying-edge count by scanning every edge in the inflated bounding box.

    Deliberately naive; used to cross-check compute_stats.
    """
    _require_nonempty(a)
    verts = a.vertices()
    d = a.d
    lo = [min(x[i] for x in verts) - 1 for i in range(d)]
    hi = [max(x[i] for x in verts) + 1 for i in range(d)]

    def boxed(prefix):
        i = len(prefix)
        if i == d:
            yield tuple(prefix)
            return
        for c in range(lo[i], hi[i] + 1):
            yield from boxed(prefix + [c])

    count = 0
    for base in boxed([]):
        for axis in range(d):
            e = Edge(base, axis)
            if e in a.edges:
                continue
            u, w = e.endpoints()
            if u in verts or w in verts:
                count += 1
    return count


# --- fixture serialization ------------------------------------------------
# Format: {"d": d, "edges": [[[x0, ..., x_{d-1}], axis], ...]}

def to_fixture(a: Animal) -> dict:
    return {"d": a.d, "edges": [[list(e.base), e.axis] for e in a.sorted_edges()]}


def from_fixture(obj: dict) -> Animal:
    return animal(obj["d"], obj["edges"])


def dumps(a: Animal) -> str:
    return json.dumps(to_fixture(a), sort_keys=True, separators=(",", ":"))


def loads(text: str) -> Animal:
    return from_fixture(json.loads(text))
