"""
Numerical side: realize symbolic points, measure covering radii, and search
for group elements that make a finite set epsilon-dense.

Metrics are fixed: arc length on the circle R/Z and the quotient sup-metric
``d(x, y) = max_i min(|x_i - y_i|, 1 - |x_i - y_i|)`` on T^n.  The covering
radius of a finite set S is ``sup_y min_{s in S} d(y, s)``, the Hausdorff
distance from S to the whole space.

All searches are one-sided: running out of budget returns an ``Exhausted``
or ``Inconclusive`` value, never a claim that no witness exists.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from decimal import Decimal, localcontext
from fractions import Fraction
from functools import lru_cache
from itertools import islice
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .exact_core import (
    GroupPresentation,
    IntMatrix,
    SymbolicPoint,
    Word,
    apply_automorphism,
    enumerate_words,
    frac_str,
    orbit_is_closed_mod_q,
    orbit_mod_q_matrix,
)
from .structure import centralizer_basis, finite_orbit, HypothesisError

__all__ = [
    "Realization",
    "CoveringBound",
    "DensityCertificate",
    "Exhausted",
    "SampleTooSmall",
    "BudgetExceeded",
    "instantiate",
    "instantiate_many",
    "covering_radius_circle",
    "covering_radius_torus",
    "covering_radius_oracle",
    "dilation_search",
    "dilation_radii",
    "translate_search",
    "plan_sample_size",
    "discrepancy",
    "orbit_discrepancy",
    "orbit_density_probe",
    "FiniteReport",
    "DenseReport",
    "Inconclusive",
    "write_series_csv",
]

DEFAULT_PRECISION = 30
MIN_PRECISION = 15
DEFAULT_GRID_BUDGET = 4_000_000


class SampleTooSmall(ValueError):
    pass


class BudgetExceeded(ValueError):
    pass


# ---------------------------------------------------------------------------
# realization

@lru_cache(maxsize=None)
def _sqrt_prime_frac(slot: int, digits: int) -> Decimal:
    from sympy import prime

    with localcontext() as ctx:
        ctx.prec = digits + 5
        s = Decimal(int(prime(slot + 1))).sqrt()
        return s - int(s)


@dataclass(frozen=True)
class Realization:
    """Concrete values for the ``r`` formal scalar symbols of a context.

    By default scalar slot ``s`` is ``frac(sqrt(p_s))`` with ``p_0 = 2``;
    for a vector symbol ``z_j`` of T^n that puts ``frac(sqrt(p_{j n + i}))``
    in coordinate ``i``.  Square roots of distinct primes are linearly
    independent over Q, so the default is a faithful stand-in for formal
    symbols.  ``explicit`` overrides with decimal strings; independence is
    then the caller's assertion and accuracy is capped by the digits given.
    """

    r: int
    explicit: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.explicit is not None and len(self.explicit) != self.r:
            raise ValueError("explicit realization has %d values for r=%d"
                             % (len(self.explicit), self.r))

    def values(self, digits: int) -> list[Decimal]:
        if self.explicit is not None:
            return [Decimal(x) for x in self.explicit]
        return [_sqrt_prime_frac(s, digits) for s in range(self.r)]


def _dec(x: Fraction) -> Decimal:
    if x.denominator == 1:
        return Decimal(x.numerator)
    return Decimal(x.numerator) / Decimal(x.denominator)


def _working_digits(p: SymbolicPoint, precision: int) -> int:
    big = max((abs(c.numerator) for row in p.C for c in row), default=1)
    return precision + len(str(big)) + 10


def instantiate(p: SymbolicPoint, R: Realization, precision: int = DEFAULT_PRECISION
                ) -> tuple[Decimal, ...]:
    """``q + C . R(zeta)`` reduced mod 1, rounded once to ``precision`` places."""
    if precision < MIN_PRECISION:
        raise ValueError("precision %d < %d digits" % (precision, MIN_PRECISION))
    if R.r != p.r:
        raise ValueError("realization has %d symbols, point context has %d" % (R.r, p.r))
    work = _working_digits(p, precision)
    zeta = R.values(work)
    quantum = Decimal(1).scaleb(-precision)
    out = []
    with localcontext() as ctx:
        ctx.prec = work
        for qi, row in zip(p.q, p.C):
            x = _dec(qi)
            for c, z in zip(row, zeta):
                if c:
                    if c.denominator == 1:
                        x += c.numerator * z
                    else:
                        x += c.numerator * z / c.denominator
            x -= x.to_integral_value(rounding="ROUND_FLOOR")
            x = x.quantize(quantum)
            if x >= 1:
                x -= 1
            out.append(x)
    return tuple(out)


def instantiate_many(points: Sequence[SymbolicPoint], R: Realization,
                     precision: int = DEFAULT_PRECISION) -> np.ndarray:
    """Float array of shape (len(points), n) with entries in [0, 1)."""
    arr = np.array([[float(x) for x in instantiate(p, R, precision)] for p in points],
                   dtype=float)
    return _wrap(arr)


def _wrap(arr: np.ndarray) -> np.ndarray:
    arr = np.mod(arr, 1.0)
    arr[arr >= 1.0] = 0.0
    return arr


# ---------------------------------------------------------------------------
# covering radii

def covering_radius_circle(X):
    """Exact covering radius of a finite subset of R/Z: half the largest gap.

    Works in the numeric type of the inputs (Fraction and Decimal stay exact).
    """
    xs = sorted(x - math.floor(x) for x in X)
    if not xs:
        raise ValueError("covering radius of an empty set")
    gap = xs[0] + 1 - xs[-1]
    for a, b in zip(xs, xs[1:]):
        if b - a > gap:
            gap = b - a
    return gap / 2


@dataclass(frozen=True)
class CoveringBound:
    lo: float
    hi: float
    grid_spacing: float
    metric: str = "quotient-linf"

    def to_json(self) -> dict:
        return {"lo": self.lo, "hi": self.hi, "grid_spacing": self.grid_spacing,
                "metric": self.metric}


def _cells_per_axis(delta: float) -> int:
    return max(1, math.ceil(1.0 / delta - 1e-9))


def _grid_centers(m: int, n: int) -> np.ndarray:
    ax = (np.arange(m) + 0.5) / m
    mesh = np.meshgrid(*([ax] * n), indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=1)


def covering_radius_torus(S, delta: float, budget: int = DEFAULT_GRID_BUDGET
                          ) -> CoveringBound:
    """Two-sided bound on the covering radius of ``S`` in T^n.

    ``D`` is the largest distance from a centre of the ``delta``-grid to S;
    the true radius lies in ``[D - delta/2, D + delta/2]`` (clipped to
    ``[0, 1/2]``).
    """
    S = _wrap(np.atleast_2d(np.asarray(S, dtype=float)))
    k, n = S.shape
    if k == 0:
        raise ValueError("covering radius of an empty set")
    if not 0 < delta <= 0.25:
        raise ValueError("grid spacing must lie in (0, 1/4], got %r" % delta)
    m = _cells_per_axis(delta)
    if n * m ** n > budget:
        raise BudgetExceeded("grid of %d^%d cells exceeds budget %d; use a larger delta"
                             % (m, n, budget))
    h = 1.0 / m
    centers = _grid_centers(m, n)
    chunk = max(1, (1 << 21) // max(1, k * n))
    D = 0.0
    for start in range(0, len(centers), chunk):
        c = centers[start:start + chunk]
        diff = np.abs(c[:, None, :] - S[None, :, :])
        diff = np.minimum(diff, 1.0 - diff)
        D = max(D, float(diff.max(axis=2).min(axis=1).max()))
    lo = max(D - h / 2, 0.0)
    hi = min(D + h / 2, 0.5)
    return CoveringBound(min(lo, hi), hi, h)


def covering_radius_oracle(S, spacing: float) -> CoveringBound:
    """Independent covering bound via a periodic sup-norm k-d tree.

    Used to re-verify certificates on a grid finer than the search grid.
    """
    S = _wrap(np.atleast_2d(np.asarray(S, dtype=float)))
    n = S.shape[1]
    m = _cells_per_axis(spacing)
    h = 1.0 / m
    tree = cKDTree(S, boxsize=1.0)
    centers = _grid_centers(m, n)
    dist, _ = tree.query(centers, k=1, p=np.inf)
    D = float(dist.max())
    return CoveringBound(max(D - h / 2, 0.0), min(D + h / 2, 0.5), h)


# ---------------------------------------------------------------------------
# dilations on the circle

@dataclass(frozen=True)
class Exhausted:
    """A bounded search finished without a witness (not a disproof)."""

    tried: int
    best: float | None = None
    reason: str = ""

    def __bool__(self):
        return False

    def to_json(self) -> dict:
        return {"status": "exhausted", "tried": self.tried,
                "best": None if self.best is None else float(self.best),
                "reason": self.reason}


@dataclass(frozen=True)
class DilationResult:
    n: int
    covering_radius: object

    def to_json(self) -> dict:
        return {"status": "found", "n": self.n, "covering_radius": str(self.covering_radius)}


def _exact_digits(X, n_max: int) -> int:
    """Decimal precision at which ``n * x`` is exact for every n <= n_max."""
    digs = [len(x.as_tuple().digits) for x in X if isinstance(x, Decimal)]
    return max([28] + [d + len(str(n_max)) + 2 for d in digs])


def dilation_radii(X, n_max: int) -> list:
    """Exact covering radii of ``mX`` for m = 1..n_max."""
    X = list(X)
    with localcontext() as ctx:
        ctx.prec = _exact_digits(X, n_max)
        return [covering_radius_circle([m * x for x in X]) for m in range(1, n_max + 1)]


def dilation_search(X, eps, N_max: int = 10 ** 6):
    """Smallest ``n`` in ``[1, N_max]`` with ``nX`` eps-dense on the circle.

    When every element of ``X`` is a Fraction the dilates are periodic in
    ``n`` with period the common denominator, so the scan stops early.
    """
    X = list(X)
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    if N_max < 1:
        raise ValueError("N_max must be >= 1")
    limit = N_max
    reason = ""
    if X and all(isinstance(x, (Fraction, int)) for x in X):
        period = math.lcm(*(Fraction(x).denominator for x in X))
        if period < limit:
            limit = period
            reason = ("all points are rational with common denominator %d; "
                      "the dilates nX repeat with period %d" % (period, period))
    best = None
    with localcontext() as ctx:
        ctx.prec = _exact_digits(X, limit)
        for n in range(1, limit + 1):
            rad = covering_radius_circle([n * x for x in X])
            if rad <= eps:
                return DilationResult(n, rad)
            if best is None or rad < best:
                best = rad
    if not reason:
        reason = "no dilation n <= %d is eps-dense" % N_max
    return Exhausted(limit, best, reason)


# ---------------------------------------------------------------------------
# searches on the torus

@dataclass(frozen=True)
class SamplePlan:
    ell: int
    cells_per_axis: int
    centers: np.ndarray = field(repr=False)


def plan_sample_size(eps: float, n: int) -> SamplePlan:
    """``ell = ceil(1/eps)^n`` and the centres of the eps-cell grid.

    Any tuple with one point in each cell is eps-dense in the sup-metric.
    """
    if not 0 < eps < 0.5 + 1e-12:
        raise ValueError("eps must lie in (0, 1/2]")
    m = _cells_per_axis(eps)
    return SamplePlan(m ** n, m, _grid_centers(m, n))


@dataclass(frozen=True)
class DensityCertificate:
    word: Word
    matrix: IntMatrix
    covering: CoveringBound
    epsilon: float
    sample_size: int
    verification: CoveringBound
    word_index: int

    def to_json(self) -> dict:
        return {"status": "found", "word": self.word.to_json(), "word_str": str(self.word),
                "word_length": len(self.word), "word_index": self.word_index,
                "matrix": [[str(x) for x in r] for r in self.matrix.rows],
                "covering": self.covering.to_json(), "epsilon": self.epsilon,
                "sample_size": self.sample_size,
                "verification": dict(self.verification.to_json(),
                                     passed=self.verification.hi <= self.epsilon)}


_CTX: dict = {}


def _init_worker(ctx):
    _CTX.clear()
    _CTX.update(ctx)


def _eval_block(block):
    """First (index, covering, verification) in the block that certifies, else None."""
    A, R, eps, delta = _CTX["A"], _CTX["R"], _CTX["eps"], _CTX["delta"]
    prec = _CTX["precision"]
    for idx, M in block:
        pts = instantiate_many([apply_automorphism(M, p) for p in A], R, prec)
        cov = covering_radius_torus(pts, delta, _CTX["budget"])
        if cov.hi <= eps:
            ver = covering_radius_oracle(pts, delta / 4)
            if ver.hi <= eps:
                return idx, cov, ver
    return None


def _blocks(it, size):
    while True:
        b = list(islice(it, size))
        if not b:
            return
        yield b


def translate_search(A: Sequence[SymbolicPoint], G: GroupPresentation, R: Realization,
                     eps: float, L_max: int = 16, delta: float | None = None,
                     precision: int = DEFAULT_PRECISION, workers: int = 1,
                     block_size: int = 32, grid_budget: int = DEFAULT_GRID_BUDGET):
    """First group element, in canonical word order, that makes ``gA`` eps-dense.

    Words are enumerated breadth-first and deduplicated by matrix (see
    ``enumerate_words``).  A candidate must satisfy ``hi <= eps`` on the
    ``delta`` grid and again on an independent ``delta/4`` oracle grid.
    With several workers, blocks of words are evaluated in parallel and the
    earliest certifying index wins, so the result does not depend on
    ``workers``.
    """
    A = list(A)
    if not A:
        raise SampleTooSmall("empty sample")
    n = A[0].n
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    if delta is None:
        delta = eps / 4
    if delta > eps / 4 + 1e-12:
        raise ValueError("grid spacing %g exceeds eps/4 = %g" % (delta, eps / 4))
    need = math.floor(1 / (2 * eps) + 1e-12) ** n
    if len(A) < need:
        raise SampleTooSmall("%d points cannot be %g-dense in T^%d (need >= %d)"
                             % (len(A), eps, n, need))
    ctx = {"A": A, "R": R, "eps": eps, "delta": delta, "precision": precision,
           "budget": grid_budget}
    words: list[Word] = []
    mats: list[IntMatrix] = []

    def indexed():
        for i, (w, M) in enumerate(enumerate_words(G, L_max)):
            words.append(w)
            mats.append(M)
            yield i, M

    blocks = _blocks(indexed(), block_size)
    hit = None
    if workers <= 1:
        _init_worker(ctx)
        for b in blocks:
            hit = _eval_block(b)
            if hit:
                break
    else:
        with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=(ctx,)) as ex:
            while hit is None:
                batch = list(islice(blocks, workers))
                if not batch:
                    break
                found = [h for h in ex.map(_eval_block, batch) if h]
                if found:
                    hit = min(found, key=lambda h: h[0])
    if hit is None:
        return Exhausted(len(words), None, "no word of length <= %d certifies eps=%g"
                         % (L_max, eps))
    idx, cov, ver = hit
    return DensityCertificate(words[idx], mats[idx], cov, eps, len(A), ver, idx)


# ---------------------------------------------------------------------------
# equidistribution

def discrepancy(S, k: int) -> float:
    """Largest deviation of box frequencies from ``k^-n`` over the k^n boxes.

    Boxes are half-open ``[i/k, (i+1)/k)`` per axis.  Fractions are binned
    exactly.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    pts = list(S) if not isinstance(S, np.ndarray) else S
    if len(pts) == 0:
        raise ValueError("discrepancy of an empty set")
    if not isinstance(pts, np.ndarray) and isinstance(pts[0][0], Fraction):
        idx = np.array([[(x.numerator * k) // x.denominator % k for x in p] for p in pts],
                       dtype=np.int64)
    else:
        arr = _wrap(np.atleast_2d(np.asarray(pts, dtype=float)))
        idx = np.minimum(np.floor(arr * k).astype(np.int64), k - 1)
    N, n = idx.shape
    flat = np.ravel_multi_index(idx.T, (k,) * n)
    counts = np.bincount(flat, minlength=k ** n)
    return float(np.abs(counts / N - k ** (-n)).max())


def orbit_discrepancy(G: GroupPresentation, u: Sequence[int], q: int, k: int):
    """Size, box discrepancy and closedness of the finite orbit of ``u/q``.

    Works on integer residues throughout, so binning is exact.
    """
    orb = orbit_mod_q_matrix(G, [[int(x) % q] for x in u], q)
    V = np.array([np.asarray(m, dtype=object)[:, 0] for m in orb], dtype=object)
    idx = np.array((V * k) // q, dtype=np.int64)
    N, n = idx.shape
    counts = np.bincount(np.ravel_multi_index(idx.T, (k,) * n), minlength=k ** n)
    disc = float(np.abs(counts / N - k ** (-n)).max())
    closed = orbit_is_closed_mod_q(G, np.array(V, dtype=np.int64), q)
    return N, disc, closed


# ---------------------------------------------------------------------------
# orbit dichotomy probe

@dataclass(frozen=True)
class FiniteReport:
    orbit: tuple[SymbolicPoint, ...]
    closed: bool

    @property
    def size(self):
        return len(self.orbit)

    def to_json(self):
        return {"status": "finite", "size": self.size, "closed_under_generators": self.closed,
                "orbit": [[frac_str(x) for x in p.q] for p in self.orbit]}


@dataclass(frozen=True)
class DenseReport:
    points_used: int
    max_word_length: int
    covering: CoveringBound
    verification: CoveringBound
    epsilon: float

    def to_json(self):
        return {"status": "dense", "points_used": self.points_used,
                "max_word_length": self.max_word_length, "epsilon": self.epsilon,
                "covering": self.covering.to_json(),
                "verification": dict(self.verification.to_json(),
                                     passed=self.verification.hi <= self.epsilon)}


@dataclass(frozen=True)
class Inconclusive:
    points_used: int
    best: CoveringBound | None
    epsilon: float

    def __bool__(self):
        return False

    def to_json(self):
        return {"status": "inconclusive", "points_used": self.points_used,
                "epsilon": self.epsilon,
                "best": None if self.best is None else self.best.to_json()}


def _closed(orbit, G) -> bool:
    s = set(p.q for p in orbit)
    for p in orbit:
        for g in G.generators + G.inverses:
            if apply_automorphism(g, p).q not in s:
                return False
    return True


def orbit_density_probe(p: SymbolicPoint, G: GroupPresentation, R: Realization, eps: float,
                        budget: int = 10 ** 5, delta: float | None = None,
                        precision: int = DEFAULT_PRECISION):
    """Finite orbit for rational points; otherwise grow the orbit until eps-dense.

    Orbit points ``g p`` are taken over distinct group elements in canonical
    word order, at most ``budget`` of them.  The covering radius is checked
    at doubling checkpoints and at the end.
    """
    cb = centralizer_basis(G)
    if not cb.is_scalar:
        raise HypothesisError("commutant has dimension %d; the dichotomy needs an "
                              "irreducible action" % cb.dimension)
    if p.is_rational:
        orb = tuple(finite_orbit(p, G))
        return FiniteReport(orb, _closed(orb, G))
    if delta is None:
        delta = min(eps / 4, 0.25)
    pts = []
    best = None
    checkpoint = 16
    length = 0
    for w, M in enumerate_words(G, 10 ** 9):
        pts.append([float(x) for x in instantiate(apply_automorphism(M, p), R, precision)])
        length = len(w)
        count = len(pts)
        if count == checkpoint or count == budget:
            checkpoint *= 2
            cov = covering_radius_torus(pts, delta)
            if best is None or cov.hi < best.hi:
                best = cov
            if cov.hi <= eps:
                ver = covering_radius_oracle(pts, delta / 4)
                if ver.hi <= eps:
                    return DenseReport(count, length, cov, ver, eps)
        if count >= budget:
            break
    if best is None:
        best = covering_radius_torus(pts, delta)
    return Inconclusive(len(pts), best, eps)


def write_series_csv(path, rows) -> None:
    """Write ``(index, value)`` pairs with a header row."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "value"])
        for i, v in rows:
            w.writerow([i, v])
