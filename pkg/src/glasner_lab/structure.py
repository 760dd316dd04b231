"""
Exact structure theory for Gamma acting on tuples of torus points.

Rational dependence and rank of point families, the commutant of the
group, finite orbits of rational points, and classification of orbit
closures of pairs and tuples into four shapes:

``Finite``
    every point is rational; the closure is the (finite) orbit itself.
``FiniteTimesFull``
    the rational points carry a finite orbit and the remaining points are
    rationally independent, so they fill a full product of tori.
``AffineUnion``
    a rationally independent base ``a_1..a_r`` plus extra points
    ``b_k = q_k^0 + sum_j q_k^j a_j``.  Writing ``a_j = t_j x_j`` the closure
    is the union over translations ``h`` of the images of
    ``(x_1..x_r) -> (t_1 x_1, .., t_r x_r, h_k + sum_j sbar_k^j x_j)``.
``FullProduct``
    the points are rationally independent.

The translation list is the full Gamma-orbit of the stacked rational
offsets, so a descriptor is a containment certificate: every translate lies
in the true closure and the union of translates covers it.

Classification requires the commutant of the group to be the scalars; when
it is larger the multipliers of a dependent pair need not be scalar and we
refuse rather than guess.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache, reduce
from math import gcd, lcm
from typing import Sequence

from .exact_core import (
    GroupPresentation,
    SymbolicPoint,
    check_context,
    frac_str,
    orbit_mod_q_matrix,
    rational_kernel,
    _mod1,
    _rref,
)

__all__ = [
    "HypothesisError",
    "DependenceRelation",
    "Independent",
    "RankProfile",
    "CommutantBasis",
    "ClosureDescriptor",
    "Finite",
    "FiniteTimesFull",
    "AffineUnion",
    "FullProduct",
    "rank_and_basis",
    "is_rationally_dependent",
    "centralizer_basis",
    "finite_orbit",
    "tuple_orbit",
    "classify_pair",
    "build_affine_closure",
    "closure_membership",
    "classify_tuple",
    "hyperplane_subfamily",
    "analyse_sample",
    "descriptor_from_json",
    "random_independent_points",
]


class HypothesisError(ValueError):
    """The group fails a checkable necessary condition of the classification."""


RatVec = tuple[Fraction, ...]


def _vec_str(v) -> list[str]:
    return [frac_str(x) for x in v]


# ---------------------------------------------------------------------------
# rank and dependence

@dataclass(frozen=True)
class RankProfile:
    d: tuple[int, ...]
    r: int
    basis_indices: tuple[int, ...]


class _EchelonBasis:
    """Incrementally maintained echelon basis of a subspace of Q^m."""

    def __init__(self):
        self.rows: list[list[Fraction]] = []
        self.pivots: list[int] = []

    def reduce(self, v) -> list[Fraction]:
        v = list(v)
        for row, p in zip(self.rows, self.pivots):
            f = v[p]
            if f:
                v = [a - f * b for a, b in zip(v, row)]
        return v

    def add(self, v) -> bool:
        v = self.reduce(v)
        p = next((i for i, x in enumerate(v) if x != 0), None)
        if p is None:
            return False
        piv = v[p]
        v = [x / piv for x in v]
        self.rows.append(v)
        self.pivots.append(p)
        return True


def rank_and_basis(points: Sequence[SymbolicPoint]) -> RankProfile:
    """Partial ranks ``d_l`` of the Q-span of the first l points modulo Q^n.

    Rational points contribute nothing.  ``basis_indices`` is the greedy
    choice of points that raise the rank, in order.
    """
    if not points:
        raise ValueError("rank of an empty family is undefined")
    check_context(*points)
    eb = _EchelonBasis()
    d, basis = [], []
    for i, p in enumerate(points):
        if eb.add(p.coeff_vector()):
            basis.append(i)
        d.append(len(basis))
    return RankProfile(tuple(d), len(basis), tuple(basis))


@dataclass(frozen=True)
class DependenceRelation:
    """``sum_i coefficients[i] * x_i == offset`` in T^n, exactly."""

    coefficients: tuple[int, ...]
    offset: RatVec

    def to_json(self) -> dict:
        return {"coefficients": list(self.coefficients), "offset": _vec_str(self.offset)}


class _IndependentType:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self):
        return "Independent"

    def __bool__(self):
        return False


Independent = _IndependentType()


def is_rationally_dependent(points: Sequence[SymbolicPoint]):
    """Return a primitive nonzero integer relation, or ``Independent``.

    The relation is the first kernel vector of the stacked coefficient
    matrix; its first nonzero entry is positive.
    """
    if not points:
        raise ValueError("empty family")
    check_context(*points)
    m = len(points[0].coeff_vector())
    cols = [p.coeff_vector() for p in points]
    M = [[cols[i][row] for i in range(len(points))] for row in range(m)]
    if not M:
        M = [[0] * len(points)]
    ker = rational_kernel(M)
    if not ker:
        return Independent
    a = ker[0]
    n = points[0].n
    off = tuple(_mod1(sum(ai * p.q[i] for ai, p in zip(a, points))) for i in range(n))
    return DependenceRelation(tuple(a), off)


# ---------------------------------------------------------------------------
# commutant

@dataclass(frozen=True)
class CommutantBasis:
    dimension: int
    basis: tuple[tuple[tuple[Fraction, ...], ...], ...]

    @property
    def is_scalar(self) -> bool:
        return self.dimension == 1

    def to_json(self) -> dict:
        return {"dimension": self.dimension, "is_scalar": self.is_scalar,
                "basis": [[_vec_str(row) for row in B] for B in self.basis]}


@lru_cache(maxsize=64)
def _commutant(gen_rows) -> CommutantBasis:
    n = len(gen_rows[0])
    eqs = []
    # unknown lambda flattened row-major: lambda[a][b] -> a*n+b
    for g in gen_rows:
        for i in range(n):
            for j in range(n):
                row = [0] * (n * n)
                # (lambda g)_{ij} - (g lambda)_{ij}
                for k in range(n):
                    row[i * n + k] += g[k][j]
                    row[k * n + j] -= g[i][k]
                eqs.append(row)
    ker = rational_kernel(eqs)
    basis = tuple(tuple(tuple(Fraction(v[a * n + b]) for b in range(n)) for a in range(n))
                  for v in ker)
    return CommutantBasis(len(basis), basis)


def centralizer_basis(G: GroupPresentation) -> CommutantBasis:
    """Rational matrices commuting with every generator."""
    return _commutant(tuple(g.rows for g in G.generators))


def _guard(G: GroupPresentation):
    cb = centralizer_basis(G)
    if not cb.is_scalar:
        raise HypothesisError(
            "commutant of the group has dimension %d > 1: the action is reducible over Q "
            "and closures of dependent pairs need not be scalar graphs" % cb.dimension)


# ---------------------------------------------------------------------------
# finite orbits

def tuple_orbit(points: Sequence, G: GroupPresentation) -> list[tuple[RatVec, ...]]:
    """Exact orbit of a tuple of rational points under the diagonal action.

    ``points`` are rational ``SymbolicPoint`` or plain rational vectors.  The
    orbit is computed on numerators modulo the common denominator and returned
    in breadth-first discovery order, starting with the input tuple.
    """
    vecs = []
    for p in points:
        if isinstance(p, SymbolicPoint):
            if not p.is_rational:
                raise ValueError("point %r is not rational" % (p,))
            vecs.append(p.q)
        else:
            vecs.append(tuple(_mod1(Fraction(x)) for x in p))
    if not vecs:
        return [()]
    q = reduce(lcm, (x.denominator for v in vecs for x in v), 1)
    n = G.n
    if any(len(v) != n for v in vecs):
        raise ValueError("dimension mismatch")
    U = [[int(vecs[c][i] * q) for c in range(len(vecs))] for i in range(n)]
    out = []
    for X in orbit_mod_q_matrix(G, U, q):
        out.append(tuple(tuple(Fraction(int(X[i][c]), q) for i in range(n))
                         for c in range(len(vecs))))
    return out


def finite_orbit(p: SymbolicPoint, G: GroupPresentation) -> list[SymbolicPoint]:
    """The exact finite orbit of a rational point."""
    if not p.is_rational:
        raise ValueError("finite_orbit needs a rational point, got %r" % (p,))
    return [SymbolicPoint.make(t[0], r=p.r) for t in tuple_orbit([p], G)]


# ---------------------------------------------------------------------------
# closure descriptors

class ClosureDescriptor:
    case = "?"
    arity: int

    def to_json(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Finite(ClosureDescriptor):
    points: tuple[tuple[RatVec, ...], ...]
    case = "finite"

    def __post_init__(self):
        if len(set(self.points)) != len(self.points):
            raise ValueError("Finite descriptor points must be distinct")

    @property
    def arity(self):
        return len(self.points[0])

    def to_json(self):
        return {"case": self.case, "arity": self.arity,
                "points": [[_vec_str(v) for v in t] for t in self.points]}


@dataclass(frozen=True)
class FiniteTimesFull(ClosureDescriptor):
    arity: int
    finite_positions: tuple[int, ...]
    finite_factor: tuple[tuple[RatVec, ...], ...]
    full_positions: tuple[int, ...]
    case = "finite_times_full"

    def to_json(self):
        return {"case": self.case, "arity": self.arity,
                "finite_positions": list(self.finite_positions),
                "finite_factor": [[_vec_str(v) for v in t] for t in self.finite_factor],
                "full_positions": list(self.full_positions)}


@dataclass(frozen=True)
class AffineUnion(ClosureDescriptor):
    """Union over ``h`` of ``phi_h((T^n)^r)``.

    Position ``basis_positions[j]`` of the tuple is ``multipliers[j] * x_j``;
    position ``extra_positions[k]`` is ``h[k] + sum_j coeff_rows[k][j] * x_j``.
    """

    arity: int
    r: int
    basis_positions: tuple[int, ...]
    extra_positions: tuple[int, ...]
    multipliers: tuple[int, ...]
    coeff_rows: tuple[tuple[int, ...], ...]
    translations: tuple[tuple[RatVec, ...], ...]
    case = "affine_union"

    def __post_init__(self):
        if any(t < 1 for t in self.multipliers):
            raise ValueError("multipliers must be >= 1")
        if len(self.multipliers) != self.r or len(self.basis_positions) != self.r:
            raise ValueError("base rank does not match multipliers")

    @property
    def dimension(self) -> int:
        """Real dimension n*r of each affine piece."""
        n = len(self.translations[0][0]) if self.translations and self.translations[0] else 0
        return n * self.r

    @property
    def pair_multipliers(self) -> tuple[int, int]:
        """``(a, b)`` with closure ``{(a w, b w + h)}`` for a dependent pair."""
        if self.r != 1 or len(self.extra_positions) != 1:
            raise ValueError("not a pair descriptor")
        return self.multipliers[0], self.coeff_rows[0][0]

    def to_json(self):
        return {"case": self.case, "arity": self.arity, "r": self.r,
                "basis_positions": list(self.basis_positions),
                "extra_positions": list(self.extra_positions),
                "multipliers": list(self.multipliers),
                "coeff_rows": [list(r) for r in self.coeff_rows],
                "translations": [[_vec_str(v) for v in h] for h in self.translations]}


@dataclass(frozen=True)
class FullProduct(ClosureDescriptor):
    arity: int
    case = "full_product"

    def to_json(self):
        return {"case": self.case, "arity": self.arity}


def _rv(v) -> RatVec:
    return tuple(Fraction(x) for x in v)


def descriptor_from_json(d: dict) -> ClosureDescriptor:
    case = d["case"]
    if case == "finite":
        return Finite(tuple(tuple(_rv(v) for v in t) for t in d["points"]))
    if case == "finite_times_full":
        return FiniteTimesFull(d["arity"], tuple(d["finite_positions"]),
                               tuple(tuple(_rv(v) for v in t) for t in d["finite_factor"]),
                               tuple(d["full_positions"]))
    if case == "affine_union":
        return AffineUnion(d["arity"], d["r"], tuple(d["basis_positions"]),
                           tuple(d["extra_positions"]), tuple(d["multipliers"]),
                           tuple(tuple(r) for r in d["coeff_rows"]),
                           tuple(tuple(_rv(v) for v in h) for h in d["translations"]))
    if case == "full_product":
        return FullProduct(d["arity"])
    raise ValueError("unknown descriptor case %r" % case)


# ---------------------------------------------------------------------------
# affine closures

def _span_coords(basis: Sequence[SymbolicPoint], p: SymbolicPoint) -> RatVec | None:
    """Coordinates of ``p`` modulo Q^n in the independent family ``basis``."""
    r = len(basis)
    cols = [b.coeff_vector() for b in basis] + [p.coeff_vector()]
    M = [[cols[c][i] for c in range(r + 1)] for i in range(len(cols[0]))]
    ker = rational_kernel(M) if M else [(0,) * r + (1,)]
    ker = [k for k in ker if k[-1] != 0]
    if not ker:
        return None
    k = ker[0]
    return tuple(Fraction(-k[j], k[-1]) for j in range(r))


def _affine(basis_pts, basis_pos, others, other_pos, arity, G) -> AffineUnion:
    r = len(basis_pts)
    coords, offsets = [], []
    for p in others:
        c = _span_coords(basis_pts, p)
        if c is None:
            raise ValueError("point %r is not in the Q-span of the basis" % (p,))
        coords.append(c)
        # rational offset q_k^0 = b_k - sum_j q_k^j a_j taken on canonical lifts
        off = tuple(_mod1(p.q[i] - sum(cj * a.q[i] for cj, a in zip(c, basis_pts)))
                    for i in range(p.n))
        offsets.append(off)
    t = [reduce(lcm, (c[j].denominator for c in coords), 1) for j in range(r)]
    rows = tuple(tuple(int(c[j] * t[j]) for j in range(r)) for c in coords)
    trans = tuple(tuple_orbit(offsets, G)) if offsets else ((),)
    return AffineUnion(arity, r, tuple(basis_pos), tuple(other_pos), tuple(t), rows, trans)


def build_affine_closure(basis_pts: Sequence[SymbolicPoint], extras: Sequence[SymbolicPoint],
                         G: GroupPresentation) -> AffineUnion:
    """Affine closure of ``basis_pts + extras`` (in that order).

    ``t_j`` is the lcm over extras of the reduced denominators of ``q_k^j``
    and ``sbar_k^j = q_k^j t_j``; for two extras this is the familiar
    ``t = t_k t_l / gcd(t_k, t_l)``, ``sbar_k = s_k t_l / gcd``.
    """
    pts = list(basis_pts) + list(extras)
    check_context(*pts)
    if rank_and_basis(basis_pts).r != len(basis_pts):
        raise ValueError("basis points are not rationally independent")
    for p in extras:
        if p.is_rational:
            raise ValueError("extra %r is rational; remove rational points first" % (p,))
    r = len(basis_pts)
    return _affine(basis_pts, range(r), extras, range(r, len(pts)), len(pts), G)


def classify_pair(x: SymbolicPoint, y: SymbolicPoint, G: GroupPresentation) -> ClosureDescriptor:
    check_context(x, y)
    _guard(G)
    xr, yr = x.is_rational, y.is_rational
    if xr and yr:
        return Finite(tuple(tuple_orbit([x, y], G)))
    if xr or yr:
        i = 0 if xr else 1
        fin = tuple(tuple_orbit([(x, y)[i]], G))
        return FiniteTimesFull(2, (i,), fin, (1 - i,))
    if rank_and_basis([x, y]).r == 2:
        return FullProduct(2)
    # C_y = (b/a) C_x with gcd(a, b) = 1; then x = a z, y = b z + q_1
    return _affine([x], (0,), [y], (1,), 2, G)


def classify_tuple(points: Sequence[SymbolicPoint], G: GroupPresentation) -> ClosureDescriptor:
    """Orbit-closure descriptor of an arbitrary finite tuple."""
    if not points:
        raise ValueError("empty tuple")
    check_context(*points)
    _guard(G)
    k = len(points)
    rat = [i for i, p in enumerate(points) if p.is_rational]
    irr = [i for i in range(k) if i not in rat]
    if not irr:
        return Finite(tuple(tuple_orbit(points, G)))
    prof = rank_and_basis([points[i] for i in irr])
    if prof.r == len(irr):
        if not rat:
            return FullProduct(k)
        fin = tuple(tuple_orbit([points[i] for i in rat], G))
        return FiniteTimesFull(k, tuple(rat), fin, tuple(irr))
    basis_pos = [irr[i] for i in prof.basis_indices]
    other_pos = [i for i in irr if i not in basis_pos] + rat
    return _affine([points[i] for i in basis_pos], basis_pos,
                   [points[i] for i in other_pos], other_pos, k, G)


# ---------------------------------------------------------------------------
# membership

def _in_finite(tup, pts) -> bool:
    if not all(p.is_rational for p in tup):
        return False
    return tuple(p.q for p in tup) in set(pts)


def closure_membership(tup: Sequence[SymbolicPoint], d: ClosureDescriptor) -> bool:
    """Exact test of whether the symbolic tuple lies in the described closure."""
    if len(tup) != d.arity:
        raise ValueError("tuple has %d points, descriptor arity %d" % (len(tup), d.arity))
    if isinstance(d, FullProduct):
        return True
    if isinstance(d, Finite):
        return _in_finite(tup, d.points)
    if isinstance(d, FiniteTimesFull):
        return _in_finite([tup[i] for i in d.finite_positions], d.finite_factor)
    if not isinstance(d, AffineUnion):
        raise TypeError("unknown descriptor %r" % (d,))

    base = [tup[i] for i in d.basis_positions]
    extra = [tup[i] for i in d.extra_positions]
    n = tup[0].n
    # symbolic parts must match for every preimage choice
    for b, row in zip(extra, d.coeff_rows):
        C = [list(rw) for rw in b.C]
        for a, s, t in zip(base, row, d.multipliers):
            if s:
                f = Fraction(s, t)
                C = [[c - f * x for c, x in zip(rc, ra)] for rc, ra in zip(C, a.C)]
        if any(x != 0 for rc in C for x in rc):
            return False
    trans = set(d.translations)
    # rational part: h_k = q_{b_k} - sum_j sbar_k^j (q_{a_j} + e_j) / t_j
    base_res = [tuple(b.q[i] - sum(Fraction(s, t) * a.q[i]
                                   for a, s, t in zip(base, row, d.multipliers))
                      for i in range(n))
                for b, row in zip(extra, d.coeff_rows)]
    choices = [list(itertools.product(range(t), repeat=n)) for t in d.multipliers]
    for es in itertools.product(*choices):
        h = tuple(tuple(_mod1(base_res[k][i] - sum(Fraction(s * e[i], t) for s, e, t
                                                   in zip(row, es, d.multipliers)))
                        for i in range(n))
                  for k, row in enumerate(d.coeff_rows))
        if h in trans:
            return True
    return False


# ---------------------------------------------------------------------------
# sample analysis for the density argument

def hyperplane_subfamily(coords: Sequence[RatVec], threshold: float = 0.5,
                         max_subsets: int = 20000) -> list[int] | None:
    """Indices of coefficient vectors concentrated on one affine hyperplane.

    A hyperplane of Q^r is ``p + V`` with ``dim V = r - 1`` (a single point
    when ``r = 1``).  Returns the indices on the most populated hyperplane if
    they make up more than ``threshold`` of the family, else None.  Only the
    first ``max_subsets`` spanning subsets are examined.
    """
    m = len(coords)
    if m == 0:
        return None
    r = len(coords[0])
    best: list[int] = []
    if r == 1:
        groups: dict = {}
        for i, c in enumerate(coords):
            groups.setdefault(c, []).append(i)
        best = max(groups.values(), key=len)
    else:
        for ix in itertools.islice(itertools.combinations(range(m), r), max_subsets):
            p0 = coords[ix[0]]
            dirs = [[a - b for a, b in zip(coords[i], p0)] for i in ix[1:]]
            normal = rational_kernel(dirs)
            if len(normal) != 1:
                continue
            nv = normal[0]
            lvl = sum(a * b for a, b in zip(nv, p0))
            on = [i for i, c in enumerate(coords) if sum(a * b for a, b in zip(nv, c)) == lvl]
            if len(on) > len(best):
                best = on
    if len(best) > threshold * m:
        return best
    return None


@dataclass(frozen=True)
class SampleCase:
    """Which branch of the density argument a finite sample falls into.

    ``case`` is ``"independent"`` when every irrational point is new
    (rank grows with the sample), ``"rational"`` when the rank is 0 and
    ``"affine"`` otherwise.  ``reduced`` lists the indices kept after the
    hyperplane fallback (all irrational indices when it did not trigger).
    """

    case: str
    profile: RankProfile
    rational_indices: tuple[int, ...]
    basis_indices: tuple[int, ...]
    extra_indices: tuple[int, ...]
    reduced: tuple[int, ...] = field(default=())
    fallback_triggered: bool = False


def analyse_sample(points: Sequence[SymbolicPoint], threshold: float = 0.5) -> SampleCase:
    prof = rank_and_basis(points)
    rat = tuple(i for i, p in enumerate(points) if p.is_rational)
    irr = [i for i in range(len(points)) if i not in rat]
    if prof.r == 0:
        return SampleCase("rational", prof, rat, (), (), tuple(irr))
    if prof.r == len(irr):
        return SampleCase("independent", prof, rat, prof.basis_indices, (), tuple(irr))
    basis = list(prof.basis_indices)
    extras = [i for i in irr if i not in basis]
    bpts = [points[i] for i in basis]
    coords = [_span_coords(bpts, points[i]) for i in extras]
    sub = hyperplane_subfamily(coords, threshold)
    if sub is None or prof.r == 1:
        return SampleCase("affine", prof, rat, tuple(basis), tuple(extras), tuple(irr))
    kept = [extras[i] for i in sub]
    sub_prof = rank_and_basis([points[i] for i in kept])
    sbasis = tuple(kept[i] for i in sub_prof.basis_indices)
    sextra = tuple(i for i in kept if i not in sbasis)
    return SampleCase("affine", sub_prof, rat, sbasis, sextra, tuple(kept), True)


def random_independent_points(count: int, n: int, r: int, rng, max_num: int = 3,
                              max_den: int = 3) -> list[SymbolicPoint]:
    """``count`` rationally independent points with small random rational data.

    Coefficient entries are ``a/b`` with ``|a| <= max_num`` and ``1 <= b <= max_den``;
    rational parts are ``a/b`` in [0, 1).  Needs ``count <= n * r``.
    ``rng`` is a ``numpy.random.Generator``.
    """
    if count > n * r:
        raise ValueError("at most n*r = %d independent points exist in this context" % (n * r))
    eb = _EchelonBasis()
    out: list[SymbolicPoint] = []
    while len(out) < count:
        C = tuple(tuple(Fraction(int(rng.integers(-max_num, max_num + 1)),
                                 int(rng.integers(1, max_den + 1))) for _ in range(r))
                  for _ in range(n))
        q = tuple(Fraction(int(rng.integers(0, max_den)), max_den) for _ in range(n))
        p = SymbolicPoint(q, C)
        if eb.add(p.coeff_vector()):
            out.append(p)
    return out
