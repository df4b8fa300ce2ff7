"""Exact census of edge-animal translation classes by (n, m).

The enumerator generates each translation class exactly once: for each
axis a it grows animals containing the root edge (origin, a) while only
admitting edges strictly greater than the root in a fixed
translation-invariant total order, so the root is forced to be the
minimal edge of every animal produced.  The untried/seen discipline of
the backtracking tree guarantees no repeats.

Two exact counts are tallied per (n, m) cell:

* sigma_prime  - number of translation classes,
* sigma        - vertex-weighted class sum (a class with v vertices has
                 exactly v translates in which the origin is a vertex,
                 so this equals the origin-incident count).

Vertices are packed into single integers with balanced power-of-two
digits so the hot loop is pure integer arithmetic.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

from .analysis import delyon_bound
from .lattice import Animal, Edge, animal, compute_stats, normalize_lex_min

FORMAT_VERSION = 1
_SPLIT_DEPTH = 3  # parallel runs split the search tree at this fixed depth
_ORACLE_MAX_N = 5
_HARD_MAX_N = 16

FLOOR_EPS = 1e-9  # absorbed when flooring float beta * n


class CensusFormatError(ValueError):
    """Census file failed schema, version or checksum validation."""


def to_ratio(beta) -> Fraction:
    """Exact rational view of a surface-area-to-volume ratio.

    Fractions and ints pass through exactly; floats are converted via
    Fraction(float).limit_denominator(10**9), which recovers every ratio
    a caller could plausibly have meant from a literal.
    """
    if isinstance(beta, Fraction):
        return beta
    if isinstance(beta, int):
        return Fraction(beta)
    if isinstance(beta, float):
        return Fraction(beta).limit_denominator(10**9)
    if isinstance(beta, str):
        return Fraction(beta)
    raise TypeError(f"cannot interpret {beta!r} as a ratio")


def floor_mul(beta, n: int) -> int:
    """floor(beta * n) with an exact path for rational beta.

    Float beta gets a documented epsilon guard: values within FLOOR_EPS
    below an integer floor up to it.
    """
    if isinstance(beta, (Fraction, int)):
        b = Fraction(beta)
        return (b.numerator * n) // b.denominator
    return math.floor(beta * n + FLOOR_EPS)


@dataclass
class CensusTable:
    """Exact (n, m) -> (sigma_prime, sigma) counts up to n_max.

    Treated as immutable after construction.
    """

    d: int
    n_max: int
    entries: dict = field(default_factory=dict)  # (n, m) -> (sigma_prime, sigma)

    def sigma_prime(self, n: int, m: int) -> int:
        return self.entries.get((n, m), (0, 0))[0]

    def sigma(self, n: int, m: int) -> int:
        return self.entries.get((n, m), (0, 0))[1]

    def ms_for(self, n: int) -> list:
        return sorted(m for (nn, m) in self.entries if nn == n)

    def validate(self):
        bound = lambda n: 2 * (self.d - 1) * n + 2 * self.d
        for (n, m), (sp, sg) in self.entries.items():
            if not (1 <= n <= self.n_max):
                raise CensusFormatError(f"entry n={n} outside [1, {self.n_max}]")
            if sp <= 0 or sg <= 0:
                raise CensusFormatError(f"nonpositive count at {(n, m)}")
            if not 0 < m <= bound(n):
                raise CensusFormatError(f"perimeter {m} at n={n} violates bound {bound(n)}")
            if not sp <= sg <= (n + 1) * sp:
                raise CensusFormatError(
                    f"vertex-weighted count at {(n, m)} outside [sigma', (n+1) sigma']"
                )
        return self

    def sorted_entries(self) -> list:
        return [[n, m, sp, sg] for (n, m), (sp, sg) in sorted(self.entries.items())]


# --- packed-integer lattice helpers ----------------------------------------

def _packing(d: int, n_max: int):
    """Bit width and per-axis vertex deltas for balanced digit packing.

    Digits stay within +-(n_max + 2), strictly inside the balanced range,
    so packed sums are collision-free.
    """
    bits = (n_max + 4).bit_length() + 1
    deltas = [1 << (bits * a) for a in range(d)]
    return bits, deltas


def _decode_vertex(v: int, d: int, bits: int) -> tuple:
    half = 1 << (bits - 1)
    mask = (1 << bits) - 1
    coords = []
    for _ in range(d):
        digit = ((v + half) & mask) - half
        coords.append(digit)
        v = (v - digit) >> bits
    return tuple(coords)


def _perimeter_packed(verts, eset, d, vdeltas, edeltas) -> int:
    out = set()
    add = out.add
    for x in verts:
        xd = x * d
        for a in range(d):
            c = xd + a
            if c not in eset:
                add(c)
            c = xd - edeltas[a] + a
            if c not in eset:
                add(c)
    return len(out)


def _expand(edges, eset, verts, untried, seen, acc, n_max, d, vdeltas, edeltas,
            split, tasks, sink):
    """Backtracking core.  Tallies every animal in the subtree into acc.

    When ``split`` is set, subtrees rooted at depth == split are emitted
    into ``tasks`` instead of being explored.
    """
    for idx in range(len(untried)):
        e = untried[idx]
        v, a = divmod(e, d)
        w = v + vdeltas[a]
        added = []
        if v not in verts:
            verts.add(v)
            added.append(v)
        if w not in verts:
            verts.add(w)
            added.append(w)
        edges.append(e)
        eset.add(e)
        n = len(edges)
        m = _perimeter_packed(verts, eset, d, vdeltas, edeltas)
        cell = acc.get((n, m))
        if cell is None:
            acc[(n, m)] = [1, len(verts)]
        else:
            cell[0] += 1
            cell[1] += len(verts)
        if sink is not None:
            sink(tuple(edges))
        if n < n_max:
            new = []
            root = edges[0]
            for x in (v, w):
                xd = x * d
                for a2 in range(d):
                    c = xd + a2
                    if c > root and c not in seen:
                        new.append(c)
                    c = xd - edeltas[a2] + a2
                    if c > root and c not in seen:
                        new.append(c)
            seen.update(new)
            rest = untried[idx + 1:] + new
            if split is not None and n == split:
                tasks.append((tuple(edges), frozenset(verts), tuple(rest), frozenset(seen)))
            else:
                _expand(edges, eset, verts, rest, seen, acc, n_max, d,
                        vdeltas, edeltas, split, tasks, sink)
            seen.difference_update(new)
        edges.pop()
        eset.remove(e)
        for x in added:
            verts.remove(x)


def _roots(d: int, n_max: int, acc, split, tasks, sink):
    """Run the enumeration from each per-axis root edge."""
    _, vdeltas = _packing(d, n_max)
    edeltas = [dl * d for dl in vdeltas]
    for axis in range(d):
        root = axis  # edge (origin, axis) packs to 0 * d + axis
        _expand([], set(), set(), [root], {root}, acc, n_max, d,
                vdeltas, edeltas, split, tasks, sink)


def _run_task(args):
    d, n_max, state = args
    _, vdeltas = _packing(d, n_max)
    edeltas = [dl * d for dl in vdeltas]
    edges, verts, untried, seen = state
    acc: dict = {}
    _expand(list(edges), set(edges), set(verts), list(untried), set(seen),
            acc, n_max, d, vdeltas, edeltas, None, None, None)
    return acc


def _merge(into: dict, other: dict):
    for key, (sp, sg) in other.items():
        cell = into.get(key)
        if cell is None:
            into[key] = [sp, sg]
        else:
            cell[0] += sp
            cell[1] += sg


def enumerate_census(d: int, n_max: int, parallelism: int = 1) -> CensusTable:
    """Exact translation-class census for 1 <= n <= n_max.

    Output is independent of ``parallelism``: parallel runs split the
    backtracking tree at a fixed shallow depth and merge per-(n, m)
    integer tallies, which commute.
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if n_max > _HARD_MAX_N:
        raise ValueError(f"n_max {n_max} exceeds the supported limit {_HARD_MAX_N}")
    acc: dict = {}
    if parallelism <= 1 or n_max <= _SPLIT_DEPTH:
        _roots(d, n_max, acc, None, None, None)
    else:
        tasks: list = []
        _roots(d, n_max, acc, _SPLIT_DEPTH, tasks, None)
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            for part in pool.map(_run_task, [(d, n_max, s) for s in tasks], chunksize=4):
                _merge(acc, part)
    entries = {key: (sp, sg) for key, (sp, sg) in acc.items()}
    return CensusTable(d=d, n_max=n_max, entries=entries).validate()


def iter_census_animals(d: int, n_max: int):
    """Yield the normalized representative Animal of every class, n <= n_max.

    Deterministic order.  Materializes decoded animals; intended for
    desk-scale sweeps and tests, not for deep censuses.
    """
    bits, _ = _packing(d, n_max)
    collected: list = []
    acc: dict = {}
    _roots(d, n_max, acc, None, None, collected.append)
    for packed in collected:
        edges = []
        for e in packed:
            v, a = divmod(e, d)
            edges.append(Edge(_decode_vertex(v, d, bits), a))
        yield normalize_lex_min(Animal(d, frozenset(edges)))


def animals_with(d: int, n: int, m: int | None = None) -> list:
    """Normalized class representatives at exactly n edges (optionally fixed m)."""
    out = []
    for a in iter_census_animals(d, n):
        if a.n != n:
            continue
        if m is not None and compute_stats(a).m != m:
            continue
        out.append(a)
    return out


# --- independent oracle -----------------------------------------------------

def brute_force_census(d: int, n_max: int) -> CensusTable:
    """Oracle census by exhaustive growth of connected edge subsets.

    Works on explicit coordinates with lattice-core normalization and
    stats, sharing no machinery with enumerate_census.  Every connected
    (s+1)-edge set contains a connected s-edge subset, so growing each
    class by every incident edge and deduplicating the normalized forms
    reaches every class.  Refuses n_max > 5 by contract.
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    if not 1 <= n_max <= _ORACLE_MAX_N:
        raise ValueError(f"oracle supports 1 <= n_max <= {_ORACLE_MAX_N}")
    entries: dict = {}

    def tally(cls: frozenset):
        st = compute_stats(Animal(d, cls))
        sp, sg = entries.get((st.n, st.m), (0, 0))
        entries[(st.n, st.m)] = (sp + 1, sg + st.v)

    origin = tuple([0] * d)
    layer = {frozenset([Edge(origin, a)]) for a in range(d)}
    for cls in layer:
        tally(cls)
    for _ in range(2, n_max + 1):
        nxt = set()
        for cls in layer:
            a = Animal(d, cls)
            verts = a.vertices()
            for x in verts:
                for axis in range(d):
                    for cand in (Edge(x, axis), Edge(tuple(c - (1 if i == axis else 0) for i, c in enumerate(x)), axis)):
                        if cand in cls:
                            continue
                        grown = normalize_lex_min(Animal(d, cls | {cand}))
                        nxt.add(grown.edges)
        layer = nxt
        for cls in layer:
            tally(cls)
    return CensusTable(d=d, n_max=n_max, entries=entries).validate()


def literal_subset_census(d: int, n_max: int, box_half: int | None = None) -> CensusTable:
    """Second oracle: filter literally every <=n_max-edge subset in a box.

    Only feasible for n_max <= 2; kept as the most transparent possible
    cross-check of the small counts.
    """
    from itertools import combinations
    from .lattice import is_connected

    if n_max > 2:
        raise ValueError("literal subset filtering is only feasible for n_max <= 2")
    half = box_half if box_half is not None else n_max + 1

    def boxed(prefix):
        if len(prefix) == d:
            yield tuple(prefix)
            return
        for c in range(-half, half + 1):
            yield from boxed(prefix + [c])

    all_edges = [Edge(b, a) for b in boxed([]) for a in range(d)]
    entries: dict = {}
    seen_classes = set()
    for n in range(1, n_max + 1):
        for combo in combinations(all_edges, n):
            es = frozenset(combo)
            if not is_connected(es):
                continue
            norm = normalize_lex_min(Animal(d, es))
            if norm.edges in seen_classes:
                continue
            seen_classes.add(norm.edges)
            st = compute_stats(norm)
            sp, sg = entries.get((st.n, st.m), (0, 0))
            entries[(st.n, st.m)] = (sp + 1, sg + st.v)
    return CensusTable(d=d, n_max=n_max, entries=entries).validate()


# --- derived rate values ----------------------------------------------------

def rate_values(table: CensusTable, n: int, beta) -> tuple[float, float, float]:
    """(f_n, f'_n, g_hat_n) at surface-area-to-volume ratio beta.

    f_n(beta) = sigma(n, floor(beta n)) ** (1/n), f'_n likewise from
    sigma_prime, and g_hat_n = f_n * beta**beta / (beta+1)**(beta+1).
    Missing (n, floor(beta n)) cells give 0.
    """
    if n > table.n_max:
        raise ValueError(f"n={n} exceeds census depth {table.n_max}")
    hi = 2 * (table.d - 1)
    bf = float(Fraction(beta) if isinstance(beta, (Fraction, int)) else beta)
    if not 0 < bf < hi:
        raise ValueError(f"beta must lie in (0, {hi})")
    m = floor_mul(beta, n)
    f_n = table.sigma(n, m) ** (1.0 / n)
    f_pn = table.sigma_prime(n, m) ** (1.0 / n)
    g_hat = f_n / delyon_bound(bf)
    return f_n, f_pn, g_hat


def delyon_check(table: CensusTable) -> dict:
    """Exact per-cell inequality sigma(n,m) * n^n * m^m <= (n+m)^(n+m).

    Any violation indicates an enumeration bug and raises.  Returns the
    maximum ratio attained (as a float) and the cell attaining it.
    """
    if not table.entries:
        raise ValueError("census table is empty")
    worst = (0.0, None)
    for (n, m), (_, sigma) in sorted(table.entries.items()):
        lhs = sigma * n**n * m**m
        rhs = (n + m) ** (n + m)
        if lhs > rhs:
            raise AssertionError(f"counting-bound violation at (n={n}, m={m}): {sigma}")
        ratio = float(Fraction(lhs, rhs))
        if ratio > worst[0]:
            worst = (ratio, (n, m))
    return {
        "status": "pass",
        "cells": len(table.entries),
        "max_ratio": worst[0],
        "argmax_cell": worst[1],
    }


# --- persistence --------------------------------------------------------------

def _canonical_payload(table: CensusTable) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "d": table.d,
        "n_max": table.n_max,
        "entries": table.sorted_entries(),
    }


def _checksum(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def census_bytes(table: CensusTable) -> bytes:
    payload = _canonical_payload(table)
    payload["checksum"] = _checksum(_canonical_payload(table))
    return (json.dumps(payload, sort_keys=True, separators=(",", ":")) + "\n").encode()


def save_census(table: CensusTable, path) -> None:
    with open(path, "wb") as fh:
        fh.write(census_bytes(table))


def load_census(path) -> CensusTable:
    try:
        with open(path, "rb") as fh:
            payload = json.loads(fh.read().decode())
    except (OSError, ValueError) as exc:
        raise CensusFormatError(f"unreadable census file {path}: {exc}") from exc
    if not isinstance(payload, dict) or "format_version" not in payload:
        raise CensusFormatError("census file lacks a format_version header")
    if payload["format_version"] != FORMAT_VERSION:
        raise CensusFormatError(
            f"unsupported census format version {payload['format_version']}, "
            f"expected {FORMAT_VERSION}"
        )
    expected = payload.get("checksum")
    body = {k: payload[k] for k in ("format_version", "d", "n_max", "entries")}
    if _checksum(body) != expected:
        raise CensusFormatError("census checksum mismatch; file corrupt or edited")
    entries = {(n, m): (sp, sg) for n, m, sp, sg in payload["entries"]}
    return CensusTable(d=payload["d"], n_max=payload["n_max"], entries=entries).validate()


def census_csv(table: CensusTable) -> str:
    lines = ["n,m,sigma_prime,sigma"]
    for n, m, sp, sg in table.sorted_entries():
        lines.append(f"{n},{m},{sp},{sg}")
    return "\n".join(lines) + "\n"
