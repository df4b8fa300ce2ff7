"""Bond-percolation Monte Carlo from the origin, and census-exact observables.

Each lattice edge's open/closed status is a pure function of
(seed, replicate, edge coordinates) through a counter-based integer
hash, so outcomes are reproducible, independent of exploration order,
and embarrassingly parallel with a determinism contract: the same
(seed, replicate) always yields the same cluster, whatever the task
count.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

CAPPED = -1  # sentinel outcome for clusters larger than the exploration cap

_M64 = (1 << 64) - 1
_PACK_BITS = 21  # cluster coordinates must stay below 2**20; cap enforces this
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCD & _M64
    z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53 & _M64
    return z ^ (z >> 33)


def edge_threshold(p: float) -> int:
    """Integer threshold t so that an edge is open iff hash < t.

    t / 2**64 matches p to within 2**-64, which is far inside every
    statistical tolerance used here.
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    return min(1 << 64, max(0, round(p * (1 << 64))))


@dataclass(frozen=True)
class PercolationRun:
    """Monte Carlo configuration; results are a pure function of it."""

    d: int
    p: float
    seed: int
    samples: int
    cluster_cap: int = 100_000

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"dimension must be >= 2, got {self.d}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        if self.samples < 0:
            raise ValueError("sample count must be nonnegative")
        if not 0 < self.cluster_cap < (1 << (_PACK_BITS - 2)):
            raise ValueError(f"cluster_cap must lie in (0, {1 << (_PACK_BITS - 2)})")


def _grow(d, thresh, base_key, cap, vdeltas, edeltas):
    """Edge count of the origin's open cluster, or CAPPED.

    Breadth-first growth over vertices; every incident edge's status is
    sampled exactly once per replicate via the keyed hash.
    """
    mask = _M64
    open_edges = 0
    frontier = [0]
    visited = {0}
    decided = {}
    axes = range(d)
    while frontier:
        x = frontier.pop()
        xd = x * d
        for a in axes:
            for ekey, other in ((xd + a, x + vdeltas[a]),
                                (xd - edeltas[a] + a, x - vdeltas[a])):
                status = decided.get(ekey)
                if status is None:
                    z = (base_key ^ ekey) & mask
                    z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCD & mask
                    z = (z ^ (z >> 33)) * 0xC4CEB9FE1A85EC53 & mask
                    status = (z ^ (z >> 33)) < thresh
                    decided[ekey] = status
                    if status:
                        open_edges += 1
                        if open_edges > cap:
                            return CAPPED
                if status and other not in visited:
                    visited.add(other)
                    frontier.append(other)
    return open_edges


def _replicate_key(seed: int, replicate: int) -> int:
    return _mix((_mix(seed & _M64) ^ (replicate + _GOLDEN)) & _M64)


def grow_cluster(run: PercolationRun, replicate: int):
    """Cluster size in edges for one replicate, or CAPPED."""
    vdeltas = [1 << (_PACK_BITS * a) for a in range(run.d)]
    edeltas = [dl * run.d for dl in vdeltas]
    thresh = edge_threshold(run.p)
    # fold packed edge keys above 64 bits (only relevant for d >= 4)
    return _grow(run.d, thresh, _replicate_key(run.seed, replicate),
                 run.cluster_cap, vdeltas, edeltas)


def _sample_chunk(args):
    d, p, seed, cap, lo, hi = args
    vdeltas = [1 << (_PACK_BITS * a) for a in range(d)]
    edeltas = [dl * d for dl in vdeltas]
    thresh = edge_threshold(p)
    counts: dict = {}
    for rep in range(lo, hi):
        size = _grow(d, thresh, _replicate_key(seed, rep), cap, vdeltas, edeltas)
        counts[size] = counts.get(size, 0) + 1
    return counts


@dataclass(frozen=True)
class ClusterSample:
    run: PercolationRun
    counts: dict = field(default_factory=dict)  # size -> occurrences, CAPPED keyed -1
    capped: int = 0

    def frequency(self, n: int) -> float:
        return self.counts.get(n, 0) / self.run.samples if self.run.samples else 0.0


def sample_cluster_sizes(run: PercolationRun, parallelism: int = 1,
                         chunk: int = 65536) -> ClusterSample:
    """Histogram of |C(0)| over replicates 0 .. samples-1.

    Chunked over fixed replicate ranges; per-chunk tallies are summed,
    so the result is identical for every parallelism setting.
    """
    bounds = [(lo, min(lo + chunk, run.samples)) for lo in range(0, run.samples, chunk)]
    args = [(run.d, run.p, run.seed, run.cluster_cap, lo, hi) for lo, hi in bounds]
    counts: dict = {}
    if parallelism <= 1 or len(args) <= 1:
        parts = map(_sample_chunk, args)
    else:
        pool = ProcessPoolExecutor(max_workers=parallelism)
        parts = pool.map(_sample_chunk, args)
    for part in parts:
        for size, cnt in part.items():
            counts[size] = counts.get(size, 0) + cnt
    if parallelism > 1 and len(args) > 1:
        pool.shutdown()
    capped = counts.pop(CAPPED, 0)
    return ClusterSample(run=run, counts=dict(sorted(counts.items())), capped=capped)


def estimate_Pn(sample: ClusterSample, n: int) -> tuple[float, float]:
    """(empirical frequency of |C(0)| = n, binomial standard error).

    Capped outcomes are excluded from the numerator and reported on the
    sample itself.
    """
    if n >= sample.run.cluster_cap:
        raise ValueError("requested size is not below the exploration cap")
    total = sample.run.samples
    if total == 0:
        return 0.0, 0.0
    phat = sample.counts.get(n, 0) / total
    return phat, math.sqrt(phat * (1.0 - phat) / total)


# --- census-exact observables -------------------------------------------------

def exact_Pn(table, p: float, n: int) -> float:
    """P_p(|C(0)| = n) = sum_m sigma(n, m) p^n (1-p)^m, evaluated exactly
    from the census counts with compensated summation."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if n > table.n_max:
        raise ValueError(f"n={n} exceeds census depth {table.n_max}")
    pn = p**n
    q = 1.0 - p
    return math.fsum(table.sigma(n, m) * pn * q**m for m in table.ms_for(n))


def sigma_N(table, p: float, N: int) -> float:
    """Partial probability that |C(0)| <= N, including the empty cluster.

    The empty-animal convention contributes (1-p)^(2d) as the n = 0 term;
    it lives here, never in the census table.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if N > table.n_max:
        raise ValueError(f"N={N} exceeds census depth {table.n_max}")
    total = (1.0 - p) ** (2 * table.d)
    return total + math.fsum(exact_Pn(table, p, n) for n in range(1, N + 1))


def chi_truncated(table, p: float, N: int, p_c: float = 0.5) -> float:
    """Truncation lower bound on the mean cluster size sum_n n P_p(|C(0)|=n)."""
    if p >= p_c:
        raise ValueError(f"p={p} must be below the configured p_c={p_c}")
    if N > table.n_max:
        raise ValueError(f"N={N} exceeds census depth {table.n_max}")
    return math.fsum(n * exact_Pn(table, p, n) for n in range(1, N + 1))


# --- subcritical argmax points --------------------------------------------------

@dataclass(frozen=True)
class SubcriticalMax:
    n: int
    t_n: float
    alpha_n: float
    p_c: float
    clamped: bool
    value: float  # P_{t_n}(|C(0)| = n)


def find_tn(table, n: int, p_c: float, grid: int = 10_000, tol: float = 1e-12) -> SubcriticalMax:
    """Least maximizer of P_p(|C(0)| = n) over p in (0, p_c].

    A single contributing (n, m) cell has the closed-form stationary
    point n / (n + m); otherwise a dense grid plus golden-section
    refinement is used, with ties broken toward the least p.
    """
    if not 0.0 < p_c < 1.0:
        raise ValueError(f"p_c must lie in (0, 1), got {p_c}")
    terms = [(m, table.sigma(n, m)) for m in table.ms_for(n)]
    if not terms:
        raise ValueError(f"census has no animals with n={n}")

    def value(p: float) -> float:
        pn = p**n
        q = 1.0 - p
        return math.fsum(sg * pn * q**m for m, sg in terms)

    if len(terms) == 1:
        m = terms[0][0]
        stationary = n / (n + m)
        t = min(stationary, p_c)
        clamped = stationary > p_c
    else:
        best_j, best_v = 1, -1.0
        for j in range(1, grid + 1):
            p = p_c * j / grid
            v = value(p)
            if v > best_v:
                best_j, best_v = j, v
        lo = p_c * max(best_j - 1, 1) / grid
        hi = p_c * min(best_j + 1, grid) / grid
        invphi = (math.sqrt(5.0) - 1.0) / 2.0
        a, b = lo, hi
        x1 = b - invphi * (b - a)
        x2 = a + invphi * (b - a)
        f1, f2 = value(x1), value(x2)
        while b - a > tol:
            if f1 >= f2:  # keep the left interval on ties: least maximizer
                b, x2, f2 = x2, x1, f1
                x1 = b - invphi * (b - a)
                f1 = value(x1)
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + invphi * (b - a)
                f2 = value(x2)
        t = min(a, p_c)
        clamped = best_j == grid
    return SubcriticalMax(n=n, t_n=t, alpha_n=1.0 / t - 1.0, p_c=p_c,
                          clamped=clamped, value=value(t))


# --- decay-rate estimation ------------------------------------------------------

def ols_fit(xs, ys) -> dict:
    """Plain least-squares line fit with slope standard error and R^2."""
    k = len(xs)
    if k < 2:
        raise ValueError("need at least two points to fit a line")
    mx = sum(xs) / k
    my = sum(ys) / k
    sxx = sum((x - mx) ** 2 for x in xs)
    if sxx == 0:
        raise ValueError("degenerate abscissae")
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = my - slope * mx
    resid = [y - (intercept + slope * x) for x, y in zip(xs, ys)]
    ss_res = sum(r * r for r in resid)
    ss_tot = sum((y - my) ** 2 for y in ys)
    se = math.sqrt(ss_res / (k - 2) / sxx) if k > 2 else float("nan")
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {"slope": slope, "intercept": intercept, "slope_se": se, "r2": r2, "points": k}


def q_estimate(table, p: float, n_window, sample: ClusterSample | None = None,
               p_c: float = 0.5) -> dict:
    """Decay-rate estimate: least-squares slope of -log P(|C(0)|=n) against n.

    Census-exact probabilities are used for n <= n_max; beyond that a
    ClusterSample at the same p supplies empirical frequencies.  Window
    entries with no usable probability are excluded and reported.
    """
    if p >= p_c:
        raise ValueError(f"q(p) is defined for p below p_c={p_c}")
    xs, ys, excluded = [], [], []
    for n in n_window:
        prob = None
        source = None
        if table is not None and n <= table.n_max:
            prob = exact_Pn(table, p, n)
            source = "census"
        elif sample is not None:
            if sample.run.p != p:
                raise ValueError("sample was drawn at a different p")
            prob = sample.frequency(n)
            source = "mc"
        if not prob or prob <= 0.0:
            excluded.append(n)
            continue
        xs.append(n)
        ys.append(-math.log(prob))
        del source
    if len(xs) < 2:
        return {"status": "insufficient-data", "p": p, "window": list(n_window),
                "excluded": excluded}
    fit = ols_fit(xs, ys)
    return {
        "status": "ok",
        "p": p,
        "window": list(n_window),
        "q_hat": fit["slope"],
        "q_se": fit["slope_se"],
        "r2": fit["r2"],
        "excluded": excluded,
        "points": len(xs),
    }


def exact_probability_fraction(table, p: Fraction, n: int) -> Fraction:
    """exact_Pn over the rationals, for tests that want tolerance zero."""
    p = Fraction(p)
    q = 1 - p
    return sum(Fraction(table.sigma(n, m)) * p**n * q**m for m in table.ms_for(n))
