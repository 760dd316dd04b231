"""
Exact substrate: rational linear algebra, torus points with symbolic
irrational parts, unimodular matrix groups and word evaluation.

Everything here is exact. Rationals are ``fractions.Fraction`` and integers
are plain Python ints, so nothing overflows and nothing is rounded.

A ``SymbolicPoint`` of the n-torus is ``q + C . zeta`` where ``q`` is a
rational vector reduced into [0,1)^n and ``C`` is an n x r rational matrix
over r formal scalar irrationals ``zeta_0 .. zeta_{r-1}``.  The scalars are
assumed linearly independent over Q together with 1; a concrete choice is
made only when a point is instantiated (see ``glasner_lab.density``).

A *vector symbol* ``z_j`` of the n-torus is the block of scalar slots
``j*n .. j*n + n - 1``, i.e. the point whose i-th coordinate is the scalar
``zeta_{j*n+i}``.  ``vector_symbol`` builds such points.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from math import gcd, lcm
from typing import Iterable, Iterator, Sequence

import numpy as np

__all__ = [
    "BasisContextError",
    "to_fraction",
    "frac_str",
    "IntMatrix",
    "SymbolicPoint",
    "vector_symbol",
    "rational_point",
    "GroupPresentation",
    "sl2z",
    "block_diag",
    "Word",
    "apply_automorphism",
    "rational_kernel",
    "rank_of",
    "evaluate_word",
    "random_word",
    "enumerate_words",
    "orbit_mod_q",
    "orbit_mod_q_matrix",
    "orbit_is_closed_mod_q",
]


# ---------------------------------------------------------------------------
# rationals

def to_fraction(x) -> Fraction:
    """Parse ints, Fractions and ``"num/den"`` / decimal strings exactly."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        raise TypeError("refusing float %r: pass a 'num/den' string instead" % x)
    return Fraction(x)


def frac_str(x: Fraction) -> str:
    if x.denominator == 1:
        return str(x.numerator)
    return "%d/%d" % (x.numerator, x.denominator)


def _mod1(x: Fraction) -> Fraction:
    return x - (x.numerator // x.denominator)


def _primitive(v: Sequence[Fraction]) -> tuple[int, ...]:
    """Scale a nonzero rational vector to coprime integers, first nonzero > 0."""
    den = reduce(lcm, (x.denominator for x in v), 1)
    ints = [int(x * den) for x in v]
    g = reduce(gcd, ints, 0)
    ints = [a // g for a in ints]
    for a in ints:
        if a != 0:
            if a < 0:
                ints = [-b for b in ints]
            break
    return tuple(ints)


# ---------------------------------------------------------------------------
# exact linear algebra

def _rref(rows: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form in place; returns (rows, pivot columns)."""
    if not rows:
        return rows, []
    n_rows, n_cols = len(rows), len(rows[0])
    pivots = []
    r = 0
    for c in range(n_cols):
        if r == n_rows:
            break
        piv = next((i for i in range(r, n_rows) if rows[i][c] != 0), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        p = rows[r][c]
        if p != 1:
            rows[r] = [x / p for x in rows[r]]
        pr = rows[r]
        for i in range(n_rows):
            if i != r:
                f = rows[i][c]
                if f != 0:
                    rows[i] = [a - f * b for a, b in zip(rows[i], pr)]
        pivots.append(c)
        r += 1
    return rows, pivots


def rational_kernel(M) -> list[tuple[int, ...]]:
    """Basis of the rational null space ``{v : M v = 0}``.

    Each basis vector is scaled to coprime integers with its first nonzero
    entry positive.  Returns an empty list when the kernel is trivial.
    ``M`` is any rectangular nested sequence of ints, Fractions or
    ``"num/den"`` strings; a matrix with zero rows needs ``len(M[0])``
    unavailable, so pass at least one (possibly zero) row.
    """
    rows = [[to_fraction(x) for x in row] for row in M]
    if not rows:
        return []
    n_cols = len(rows[0])
    if any(len(row) != n_cols for row in rows):
        raise ValueError("ragged matrix")
    rows, pivots = _rref(rows)
    free = [c for c in range(n_cols) if c not in set(pivots)]
    basis = []
    for f in free:
        v = [Fraction(0)] * n_cols
        v[f] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -rows[r][f]
        basis.append(_primitive(v))
    return basis


def rank_of(M) -> int:
    rows = [[to_fraction(x) for x in row] for row in M]
    return len(_rref(rows)[1]) if rows else 0


# ---------------------------------------------------------------------------
# integer matrices

@dataclass(frozen=True)
class IntMatrix:
    """Square integer matrix, stored row-major as a tuple of tuples."""

    rows: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        n = len(self.rows)
        if n == 0 or any(len(r) != n for r in self.rows):
            raise ValueError("IntMatrix must be square and nonempty")
        for r in self.rows:
            for x in r:
                if not isinstance(x, int) or isinstance(x, bool):
                    raise TypeError("IntMatrix entries must be ints, got %r" % (x,))

    @classmethod
    def of(cls, data) -> "IntMatrix":
        """Build from nested rows, or a flat row-major list of n*n entries.

        Entries may be ints or decimal strings of arbitrary length.
        """
        data = list(data)
        if data and not isinstance(data[0], (list, tuple)):
            n = int(round(len(data) ** 0.5))
            if n * n != len(data):
                raise ValueError("flat matrix of length %d is not square" % len(data))
            data = [data[i * n:(i + 1) * n] for i in range(n)]
        return cls(tuple(tuple(int(x) for x in row) for row in data))

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(tuple(tuple(int(i == j) for j in range(n)) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.rows)

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if other.n != self.n:
            raise ValueError("dimension mismatch: %d vs %d" % (self.n, other.n))
        cols = list(zip(*other.rows))
        return IntMatrix(tuple(
            tuple(sum(a * b for a, b in zip(row, col)) for col in cols)
            for row in self.rows))

    def apply(self, v: Sequence) -> list:
        """Matrix times column vector (entries of any exact numeric type)."""
        return [sum(a * x for a, x in zip(row, v)) for row in self.rows]

    def det(self) -> int:
        # Bareiss fraction-free elimination
        a = [list(r) for r in self.rows]
        n = self.n
        sign, prev = 1, 1
        for k in range(n - 1):
            if a[k][k] == 0:
                sw = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
                if sw is None:
                    return 0
                a[k], a[sw] = a[sw], a[k]
                sign = -sign
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
            prev = a[k][k]
        return sign * a[n - 1][n - 1]

    def inverse(self) -> "IntMatrix":
        """Exact inverse; only defined for unimodular matrices."""
        n = self.n
        rows = [[Fraction(x) for x in r] + [Fraction(int(i == j)) for j in range(n)]
                for i, r in enumerate(self.rows)]
        rows, pivots = _rref(rows)
        if pivots[:n] != list(range(n)):
            raise ValueError("matrix is singular")
        inv = [r[n:] for r in rows]
        if any(x.denominator != 1 for r in inv for x in r):
            raise ValueError("matrix is not unimodular; inverse is not integral")
        return IntMatrix(tuple(tuple(int(x) for x in r) for r in inv))

    def mod(self, q: int) -> tuple[tuple[int, ...], ...]:
        return tuple(tuple(x % q for x in r) for r in self.rows)

    def max_abs(self) -> int:
        return max(abs(x) for r in self.rows for x in r)

    def tolist(self) -> list[list[int]]:
        return [list(r) for r in self.rows]

    def __repr__(self):
        return "IntMatrix(%s)" % (self.tolist(),)


def block_diag(*blocks: IntMatrix) -> IntMatrix:
    n = sum(b.n for b in blocks)
    rows = []
    off = 0
    for b in blocks:
        for r in b.rows:
            rows.append((0,) * off + r + (0,) * (n - off - b.n))
        off += b.n
    return IntMatrix(tuple(rows))


# ---------------------------------------------------------------------------
# symbolic torus points

@dataclass(frozen=True)
class SymbolicPoint:
    """Point ``q + C . zeta`` of the n-torus with exact rational data.

    ``q`` is stored reduced into [0,1)^n, so two points are equal iff they
    are the same point of the torus (for independent ``zeta``).
    """

    q: tuple[Fraction, ...]
    C: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        q = tuple(_mod1(to_fraction(x)) for x in self.q)
        C = tuple(tuple(to_fraction(x) for x in row) for row in self.C)
        if len(C) != len(q):
            raise ValueError("coefficient matrix has %d rows for n=%d" % (len(C), len(q)))
        if C and len({len(row) for row in C}) != 1:
            raise ValueError("ragged coefficient matrix")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "C", C)

    @classmethod
    def make(cls, q, C=None, r: int = 0) -> "SymbolicPoint":
        q = tuple(q)
        if C is None:
            C = tuple((0,) * r for _ in q)
        return cls(q, tuple(tuple(row) for row in C))

    @property
    def n(self) -> int:
        return len(self.q)

    @property
    def r(self) -> int:
        return len(self.C[0]) if self.C else 0

    @property
    def is_rational(self) -> bool:
        return all(x == 0 for row in self.C for x in row)

    def coeff_vector(self) -> tuple[Fraction, ...]:
        """Row-major flattening of ``C``; the point's class modulo Q^n."""
        return tuple(x for row in self.C for x in row)

    def denominator(self) -> int:
        return reduce(lcm, (x.denominator for x in self.q), 1)

    def scale(self, k) -> "SymbolicPoint":
        """``k * p`` for a rational ``k`` (as a lift; q is taken in [0,1))."""
        k = to_fraction(k)
        return SymbolicPoint(tuple(k * x for x in self.q),
                             tuple(tuple(k * x for x in row) for row in self.C))

    def __add__(self, other: "SymbolicPoint") -> "SymbolicPoint":
        check_context(self, other)
        return SymbolicPoint(tuple(a + b for a, b in zip(self.q, other.q)),
                             tuple(tuple(a + b for a, b in zip(ra, rb))
                                   for ra, rb in zip(self.C, other.C)))

    def __sub__(self, other: "SymbolicPoint") -> "SymbolicPoint":
        return self + other.scale(-1)

    def shift(self, v) -> "SymbolicPoint":
        return SymbolicPoint(tuple(a + to_fraction(b) for a, b in zip(self.q, v)), self.C)

    def to_json(self) -> dict:
        return {"q": [frac_str(x) for x in self.q],
                "C": [[frac_str(x) for x in row] for row in self.C]}

    @classmethod
    def from_json(cls, d: dict) -> "SymbolicPoint":
        return cls(tuple(d["q"]), tuple(tuple(row) for row in d["C"]))

    def __repr__(self):
        qs = ", ".join(frac_str(x) for x in self.q)
        if self.is_rational:
            return "SymbolicPoint(q=(%s))" % qs
        return "SymbolicPoint(q=(%s), C=%s)" % (
            qs, [[frac_str(x) for x in row] for row in self.C])


class BasisContextError(ValueError):
    """Points were built over different symbol contexts or dimensions."""


def check_context(*points: SymbolicPoint):
    shapes = {(p.n, p.r) for p in points}
    if len(shapes) > 1:
        raise BasisContextError("points do not share one basis context: %s" % sorted(shapes))


def vector_symbol(j: int, n: int, n_symbols: int, coeff=1, q=None) -> SymbolicPoint:
    """The point ``coeff * z_j + q`` in a context of ``n_symbols`` vector symbols."""
    coeff = to_fraction(coeff)
    r = n * n_symbols
    if not 0 <= j < n_symbols:
        raise IndexError("vector symbol %d out of range" % j)
    C = [[Fraction(0)] * r for _ in range(n)]
    for i in range(n):
        C[i][j * n + i] = coeff
    q = (0,) * n if q is None else q
    return SymbolicPoint(tuple(q), tuple(tuple(row) for row in C))


def rational_point(q, r: int = 0) -> SymbolicPoint:
    return SymbolicPoint.make(q, r=r)


# ---------------------------------------------------------------------------
# groups and words

@dataclass(frozen=True)
class GroupPresentation:
    """Finite list of unimodular generators of a subgroup of GL(n, Z).

    ``flags`` records hypotheses asserted by the user (for example
    ``{"semisimple": True, "irreducible": True}``); they are never checked.
    """

    generators: tuple[IntMatrix, ...]
    flags: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        gens = tuple(g if isinstance(g, IntMatrix) else IntMatrix.of(g)
                     for g in self.generators)
        if not gens:
            raise ValueError("generator list is empty")
        n = gens[0].n
        for i, g in enumerate(gens):
            if g.n != n:
                raise ValueError("generator %d has dimension %d, expected %d" % (i, g.n, n))
            d = g.det()
            if abs(d) != 1:
                raise ValueError("generator %d has determinant %d; |det| must be 1" % (i, d))
        object.__setattr__(self, "generators", gens)
        object.__setattr__(self, "_inverses", tuple(g.inverse() for g in gens))

    @property
    def n(self) -> int:
        return self.generators[0].n

    @property
    def inverses(self) -> tuple[IntMatrix, ...]:
        return self._inverses

    def letters(self) -> list[tuple[int, int]]:
        """Alphabet in canonical order: g0, g0^-1, g1, g1^-1, ..."""
        return [(i, e) for i in range(len(self.generators)) for e in (1, -1)]

    def letter_matrix(self, letter: tuple[int, int]) -> IntMatrix:
        i, e = letter
        return self.generators[i] if e == 1 else self._inverses[i]

    @classmethod
    def from_json(cls, doc) -> "GroupPresentation":
        if isinstance(doc, (str, bytes)):
            doc = json.loads(doc)
        n = int(doc["n"])
        gens = [IntMatrix.of(g) for g in doc["generators"]]
        for i, g in enumerate(gens):
            if g.n != n:
                raise ValueError("generator %d is %dx%d, declared n=%d" % (i, g.n, g.n, n))
        return cls(tuple(gens), dict(doc.get("flags", {})))

    @classmethod
    def load(cls, path) -> "GroupPresentation":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> dict:
        return {"n": self.n, "generators": [g.tolist() for g in self.generators],
                "flags": dict(self.flags)}


def sl2z() -> GroupPresentation:
    """SL(2, Z) with its elementary generators [[1,1],[0,1]] and [[1,0],[1,1]]."""
    return GroupPresentation((IntMatrix(((1, 1), (0, 1))), IntMatrix(((1, 0), (1, 1)))),
                             {"semisimple": True, "irreducible": True})


@dataclass(frozen=True)
class Word:
    """Freely reduced word in the generators; letters are (index, +-1)."""

    letters: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        letters = tuple((int(i), int(e)) for i, e in self.letters)
        for i, e in letters:
            if e not in (1, -1) or i < 0:
                raise ValueError("bad letter (%d, %d)" % (i, e))
        for (i, e), (j, f) in zip(letters, letters[1:]):
            if i == j and e == -f:
                raise ValueError("word is not freely reduced at letter g%d^%d" % (i, e))
        object.__setattr__(self, "letters", letters)

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        if not self.letters:
            return "e"
        return " ".join("g%d" % i if e == 1 else "g%d^-1" % i for i, e in self.letters)

    def to_json(self) -> list:
        return [[i, e] for i, e in self.letters]


def evaluate_word(w: Word, G: GroupPresentation) -> IntMatrix:
    """Product of the word's letters in order, exactly."""
    M = IntMatrix.identity(G.n)
    for i, e in w.letters:
        if i >= len(G.generators):
            raise IndexError("generator index %d out of range" % i)
        M = M @ G.letter_matrix((i, e))
    return M


def enumerate_words(G: GroupPresentation, max_length: int) -> Iterator[tuple[Word, IntMatrix]]:
    """Freely reduced words by length, lexicographic within a length.

    Words whose matrix already appeared are dropped and never extended, so
    every group element of word length <= ``max_length`` is produced exactly
    once, attached to its first word in this order.
    """
    letters = G.letters()
    mats = [G.letter_matrix(a) for a in letters]
    seen = set()
    ident = IntMatrix.identity(G.n)
    seen.add(ident.rows)
    yield Word(), ident
    level = [((), ident)]
    for _ in range(max_length):
        nxt = []
        for letters_w, M in level:
            last = letters_w[-1] if letters_w else None
            for a, A in zip(letters, mats):
                if last is not None and last[0] == a[0] and last[1] == -a[1]:
                    continue
                P = M @ A
                if P.rows in seen:
                    continue
                seen.add(P.rows)
                lw = letters_w + (a,)
                nxt.append((lw, P))
                yield Word(lw), P
        if not nxt:
            return
        level = nxt


def apply_automorphism(g: IntMatrix, p: SymbolicPoint) -> SymbolicPoint:
    """Image of ``p`` under the toral automorphism induced by ``g``."""
    if g.n != p.n:
        raise ValueError("dimension mismatch: matrix %d, point %d" % (g.n, p.n))
    q = g.apply(p.q)
    if p.r:
        cols = list(zip(*p.C))
        gc = [g.apply(col) for col in cols]
        C = tuple(zip(*gc))
    else:
        C = tuple(() for _ in range(p.n))
    return SymbolicPoint(tuple(q), C)


# ---------------------------------------------------------------------------
# finite orbits on (Z/q)^n

def orbit_mod_q(G: GroupPresentation, u: Sequence[int], q: int) -> set[tuple[int, ...]]:
    """Orbit of the residue vector ``u`` under ``G`` acting on (Z/qZ)^n."""
    if q < 1:
        raise ValueError("modulus must be positive")
    start = np.array([[int(x) % q] for x in u], dtype=object)
    orb = orbit_mod_q_matrix(G, start, q)
    return {tuple(int(x) for x in col[:, 0]) for col in orb}


def orbit_mod_q_matrix(G: GroupPresentation, U, q: int) -> list[np.ndarray]:
    """Orbit of an n x k residue matrix under the diagonal action ``U -> gU mod q``.

    Breadth-first over generators and their inverses; returns the orbit in
    discovery order (start first) as a list of integer arrays.  State
    space is at most q^(nk) so this always terminates.
    """
    U = np.asarray(U, dtype=object) % q
    n, k = U.shape
    if n != G.n:
        raise ValueError("dimension mismatch: group %d, vectors %d" % (G.n, n))
    gens = [np.array(g.mod(q), dtype=object) for g in G.generators]
    gens += [np.array(g.mod(q), dtype=object) for g in G.inverses]
    dim = n * k
    if q ** dim < 2 ** 62 and q * q * n < 2 ** 62:
        return _orbit_vectorized(gens, U.astype(np.int64), q)
    seen = {tuple(U.flat)}
    order = [U]
    queue = deque([U])
    while queue:
        X = queue.popleft()
        for g in gens:
            Y = g.dot(X) % q
            key = tuple(Y.flat)
            if key not in seen:
                seen.add(key)
                order.append(Y)
                queue.append(Y)
    return order


def _orbit_vectorized(gens, U: np.ndarray, q: int) -> list[np.ndarray]:
    n, k = U.shape
    dim = n * k
    weights = np.array([q ** i for i in range(dim)], dtype=np.int64)
    G64 = [np.asarray(g, dtype=np.int64) for g in gens]

    def encode(stack):  # stack: (m, n, k)
        return stack.reshape(len(stack), dim) @ weights

    frontier = U[None, :, :]
    seen = set(encode(frontier).tolist())
    out = [frontier]
    while len(frontier):
        imgs = np.concatenate([np.einsum("ij,mjk->mik", g, frontier) % q for g in G64])
        codes = encode(imgs)
        codes, idx = np.unique(codes, return_index=True)
        # keep discovery order stable: unique sorts, so re-sort by first index
        order = np.argsort(idx, kind="stable")
        codes, idx = codes[order], idx[order]
        fresh = [i for c, i in zip(codes.tolist(), idx.tolist()) if c not in seen]
        seen.update(codes.tolist())
        frontier = imgs[fresh]
        if len(frontier):
            out.append(frontier)
    stack = np.concatenate(out)
    return [m for m in stack]


def orbit_is_closed_mod_q(G: GroupPresentation, vectors, q: int) -> bool:
    """Check that a set of residue vectors is mapped into itself by every generator."""
    V = np.asarray(vectors, dtype=np.int64).reshape(-1, G.n) % q
    if q ** G.n >= 2 ** 62:
        S = {tuple(v) for v in V.tolist()}
        return all(tuple(x % q for x in g.apply(v)) in S
                   for g in G.generators + G.inverses for v in V.tolist())
    w = np.array([q ** i for i in range(G.n)], dtype=np.int64)
    codes = np.unique(V @ w)
    for g in G.generators + G.inverses:
        img = (V @ np.array(g.mod(q), dtype=np.int64).T) % q
        if not np.isin(img @ w, codes).all():
            return False
    return True


def random_word(G: GroupPresentation, length: int, rng) -> Word:
    """Uniform freely reduced word of the given length (``rng``: numpy Generator)."""
    letters = G.letters()
    out: list[tuple[int, int]] = []
    while len(out) < length:
        a = letters[int(rng.integers(len(letters)))]
        if out and out[-1][0] == a[0] and out[-1][1] == -a[1]:
            continue
        out.append(a)
    return Word(tuple(out))
