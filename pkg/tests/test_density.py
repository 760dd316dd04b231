import math
from decimal import Decimal, localcontext
from fractions import Fraction as F

import numpy as np
import pytest

from glasner_lab.exact_core import (
    GroupPresentation,
    SymbolicPoint,
    apply_automorphism,
    block_diag,
    orbit_mod_q,
    rational_point,
    sl2z,
    vector_symbol,
)
from glasner_lab.density import (
    BudgetExceeded,
    DenseReport,
    DensityCertificate,
    Exhausted,
    FiniteReport,
    Inconclusive,
    Realization,
    SampleTooSmall,
    covering_radius_circle,
    covering_radius_oracle,
    covering_radius_torus,
    dilation_search,
    discrepancy,
    instantiate,
    instantiate_many,
    orbit_density_probe,
    orbit_discrepancy,
    plan_sample_size,
    translate_search,
)
from glasner_lab.structure import HypothesisError, random_independent_points, tuple_orbit

G = sl2z()
z = vector_symbol(0, 2, 1)


def torus_oracle(S, m):
    """Exhaustive sup-distance minimum over an m^n grid of sample points."""
    S = np.atleast_2d(np.asarray(S, float))
    n = S.shape[1]
    ax = np.arange(m) / m
    Y = np.stack([g.ravel() for g in np.meshgrid(*([ax] * n), indexing="ij")], axis=1)
    best = 0.0
    for i in range(0, len(Y), 4096):
        d = np.abs(Y[i:i + 4096, None, :] - S[None])
        d = np.minimum(d, 1 - d).max(axis=2).min(axis=1)
        best = max(best, float(d.max()))
    return best


def sqrt_frac(p, digits=40):
    with localcontext() as c:
        c.prec = digits
        s = Decimal(p).sqrt()
        return s - int(s)


# -- instantiate -----------------------------------------------------------

def test_instantiate_rational():
    assert instantiate(rational_point((F(1, 2), F(1, 4))), Realization(0)) == (
        Decimal("0.5"), Decimal("0.25"))


def test_instantiate_default_realization():
    x = instantiate(z, Realization(2))
    assert str(x[0]).startswith("0.41421356")
    assert str(x[1]).startswith("0.73205080")
    assert abs(x[0] - sqrt_frac(2)) < Decimal("1e-29")
    assert abs(x[1] - sqrt_frac(3)) < Decimal("1e-29")


def test_instantiate_linearity():
    p = z.scale(2).shift((F(1, 2), 0))
    x = instantiate(p, Realization(2))
    with localcontext() as c:
        c.prec = 40
        e0 = (2 * sqrt_frac(2) + Decimal("0.5")) % 1
        e1 = (2 * sqrt_frac(3)) % 1
    assert abs(x[0] - e0) < Decimal("1e-29") and abs(x[1] - e1) < Decimal("1e-29")


def test_instantiate_precision_floor():
    with pytest.raises(ValueError):
        instantiate(z, Realization(2), precision=10)


def test_instantiate_large_coefficients_keep_precision():
    g_big = 10 ** 25
    p = SymbolicPoint((0, 0), ((g_big, 0), (0, 1)))
    x = instantiate(p, Realization(2), precision=30)
    with localcontext() as c:
        c.prec = 100
        exact = (g_big * sqrt_frac(2, 100)) % 1
    assert abs(x[0] - exact) < Decimal("1e-29")


def test_explicit_realization():
    R = Realization(2, ("0.1", "0.25"))
    p = SymbolicPoint((0, 0), ((1, 1), (0, 2)))
    assert instantiate(p, R, 15) == (Decimal("0.350000000000000"), Decimal("0.500000000000000"))


# -- circle ----------------------------------------------------------------

def test_circle_examples():
    assert covering_radius_circle([F(0)]) == F(1, 2)
    assert covering_radius_circle([F(0), F(1, 2)]) == F(1, 4)
    assert covering_radius_circle([F(0), F(1, 4), F(1, 2)]) == F(1, 4)


def test_circle_empty():
    with pytest.raises(ValueError):
        covering_radius_circle([])


def test_circle_against_dense_sampling():
    rng = np.random.default_rng(5)
    grid = np.arange(10 ** 6) / 10 ** 6
    for _ in range(100):
        X = rng.random(int(rng.integers(1, 7)))
        d = np.abs(grid[:, None] - X[None])
        oracle = np.minimum(d, 1 - d).min(axis=1).max()
        assert abs(covering_radius_circle(X) - oracle) <= 1e-6


# -- torus -----------------------------------------------------------------

def test_torus_grid_of_16():
    S = [((i + 0.5) / 4, (j + 0.5) / 4) for i in range(4) for j in range(4)]
    b = covering_radius_torus(S, 1 / 16)
    assert b.lo <= 1 / 8 <= b.hi
    assert b.hi - b.lo <= 1 / 16


def test_torus_single_point():
    for delta in (1 / 4, 1 / 10, 1 / 33):
        b = covering_radius_torus([(0.3, 0.7)], delta)
        assert b.lo <= 0.5 <= b.hi <= 0.5


def test_torus_random_20_against_fine_oracle():
    S = np.random.default_rng(2).random((20, 2))
    b = covering_radius_torus(S, 1 / 64)
    oracle = torus_oracle(S, 1024)
    assert b.lo <= oracle <= b.hi
    assert b.hi - b.lo <= 1 / 64


def test_torus_budget():
    with pytest.raises(BudgetExceeded):
        covering_radius_torus(np.zeros((1, 3)), 1 / 200, budget=10 ** 6)


def test_torus_bad_delta():
    with pytest.raises(ValueError):
        covering_radius_torus([(0, 0)], 0.3)


def test_oracle_agrees_with_grid_bound():
    rng = np.random.default_rng(8)
    for _ in range(10):
        S = rng.random((15, 2))
        b = covering_radius_torus(S, 1 / 32)
        o = covering_radius_oracle(S, 1 / 128)
        assert max(b.lo, o.lo) <= min(b.hi, o.hi)


# -- dilations -------------------------------------------------------------

def test_dilation_two_torsion_exhausted():
    for N in (1, 10, 10 ** 6):
        res = dilation_search([F(0), F(1, 2)], 0.1, N)
        assert isinstance(res, Exhausted) and not res


def test_dilation_single_point_exhausted():
    res = dilation_search([sqrt_frac(2)], 0.4, 500)
    assert isinstance(res, Exhausted) and res.tried == 500


def test_dilation_minimal():
    X = [F(1, 10), F(1, 7)]
    res = dilation_search(X, 0.3, 100)
    for m in range(1, res.n):
        assert covering_radius_circle([m * x for x in X]) > 0.3
    assert covering_radius_circle([res.n * x for x in X]) <= 0.3


def test_dilation_kronecker_50():
    alpha = Decimal(2).sqrt()
    with localcontext() as c:
        c.prec = 40
        X = [(j * alpha) % 1 for j in range(1, 51)]
    res = dilation_search(X, 0.05, 10 ** 4)
    assert res.n <= 10 ** 4
    Xf = [F(x) for x in X]
    for m in range(1, res.n + 1):
        r = covering_radius_circle([m * x for x in Xf])
        assert (r <= F(1, 20)) == (m == res.n)


# -- plan ------------------------------------------------------------------

@pytest.mark.parametrize("eps,n,ell", [(0.5, 1, 2), (0.25, 2, 16), (0.2, 2, 25)])
def test_plan_sample_size(eps, n, ell):
    plan = plan_sample_size(eps, n)
    assert plan.ell == ell and len(plan.centers) == ell
    assert covering_radius_torus(plan.centers, min(eps / 4, 0.25)).hi <= eps + 1e-12


# -- discrepancy -----------------------------------------------------------

def test_discrepancy_uniform_grid():
    S = [((i + 0.5) / 4, (j + 0.5) / 4) for i in range(4) for j in range(4)]
    assert discrepancy(S, 2) == 0


def test_discrepancy_single_point():
    assert discrepancy([(0.1, 0.2)], 2) == pytest.approx(0.75)


def test_discrepancy_exact_fractions():
    S = [(F(1, 4), F(0)), (F(3, 4), F(1, 2))]
    assert discrepancy(S, 2) == pytest.approx(0.25)


def test_discrepancy_orbit_997():
    size, disc, closed = orbit_discrepancy(G, (1, 0), 997, 4)
    # for prime q the orbit is every nonzero residue vector; count boxes directly
    q, k = 997, 4
    per_axis = [sum(1 for a in range(q) if a * k // q == b) for b in range(k)]
    counts = [per_axis[i] * per_axis[j] - (i == 0 and j == 0) for i in range(k)
              for j in range(k)]
    oracle = max(abs(F(c, q * q - 1) - F(1, 16)) for c in counts)
    assert size == q * q - 1 and closed
    assert disc == pytest.approx(float(oracle), abs=1e-15)
    assert disc <= 0.1


def test_discrepancy_matches_generic_path():
    orb = tuple_orbit([(F(1, 31), 0)], G)
    assert discrepancy([t[0] for t in orb], 4) == pytest.approx(
        orbit_discrepancy(G, (1, 0), 31, 4)[1])


# -- translate search ------------------------------------------------------

def test_translate_search_rejects_tiny_sample():
    with pytest.raises(SampleTooSmall):
        translate_search([rational_point((F(1, 2), F(1, 2)))], G, Realization(0), 0.1)


def test_translate_search_rejects_coarse_grid():
    A = random_independent_points(25, 2, 26, np.random.default_rng(0))
    with pytest.raises(ValueError):
        translate_search(A, G, Realization(26), 0.2, delta=0.1)


def test_translate_search_orbit_sample():
    orb = sorted(orbit_mod_q(G, (1, 0), 997))
    A = [rational_point((F(a, 997), F(b, 997))) for a, b in orb[::4000]]
    res = translate_search(A, G, Realization(0), 0.2, L_max=4, delta=0.05)
    assert isinstance(res, DensityCertificate)
    assert len(res.word) <= 2
    S = instantiate_many([apply_automorphism(res.matrix, a) for a in A], Realization(0))
    assert torus_oracle(S, 200) <= 0.2


def test_translate_search_exhausted():
    A = [rational_point((F(i, 2), F(j, 2))) for i in range(2) for j in range(2)]
    res = translate_search(A, G, Realization(0), 0.2, L_max=3, delta=0.05)
    assert isinstance(res, Exhausted) and res.tried > 1


def test_translate_search_small_independent():
    A = random_independent_points(9, 2, 6, np.random.default_rng(4))
    res = translate_search(A, G, Realization(6), 0.3, L_max=8, delta=0.05)
    assert isinstance(res, DensityCertificate)
    assert res.covering.hi <= 0.3 and res.verification.hi <= 0.3
    S = instantiate_many([apply_automorphism(res.matrix, a) for a in A], Realization(6))
    assert torus_oracle(S, 400) <= 0.3


# -- probe -----------------------------------------------------------------

def test_probe_rational():
    rep = orbit_density_probe(rational_point((F(1, 2), F(1, 2)), 2), G, Realization(2), 0.1)
    assert isinstance(rep, FiniteReport) and rep.size == 3 and rep.closed


def test_probe_irrational_dense():
    rep = orbit_density_probe(z, G, Realization(2), 0.1, budget=10 ** 5)
    assert isinstance(rep, DenseReport)
    assert rep.covering.hi <= 0.1 and rep.verification.hi <= 0.1


def test_probe_budget_one():
    rep = orbit_density_probe(z, G, Realization(2), 0.05, budget=1)
    assert isinstance(rep, Inconclusive) and not rep and rep.points_used == 1


def test_probe_guard():
    H = GroupPresentation(tuple(block_diag(g, g) for g in G.generators))
    with pytest.raises(HypothesisError):
        orbit_density_probe(vector_symbol(0, 4, 1), H, Realization(4), 0.1)


def test_graph_confinement_numeric():
    x, y = z.scale(2), z.scale(3)
    R = Realization(2)
    rng = np.random.default_rng(9)
    from glasner_lab.exact_core import evaluate_word, random_word
    for _ in range(300):
        g = evaluate_word(random_word(G, int(rng.integers(0, 13)), rng), G)
        u = instantiate(apply_automorphism(g, x), R)
        v = instantiate(apply_automorphism(g, y), R)
        for a, b in zip(u, v):
            d = (3 * a - 2 * b) % 1
            assert min(d, 1 - d) <= Decimal("1e-9")
