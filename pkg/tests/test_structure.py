from fractions import Fraction as F
from math import gcd

import numpy as np
import pytest

from glasner_lab.exact_core import (
    BasisContextError,
    GroupPresentation,
    IntMatrix,
    SymbolicPoint,
    apply_automorphism,
    block_diag,
    evaluate_word,
    random_word,
    rational_point,
    sl2z,
    vector_symbol,
)
from glasner_lab.structure import (
    AffineUnion,
    Finite,
    FiniteTimesFull,
    FullProduct,
    HypothesisError,
    Independent,
    analyse_sample,
    build_affine_closure,
    centralizer_basis,
    classify_pair,
    classify_tuple,
    closure_membership,
    descriptor_from_json,
    finite_orbit,
    hyperplane_subfamily,
    is_rationally_dependent,
    rank_and_basis,
    tuple_orbit,
)

G = sl2z()
z = vector_symbol(0, 2, 1)


def zz(j, m, coeff=1, q=None):
    return vector_symbol(j, 2, m, coeff, q)


def reducible():
    return GroupPresentation(tuple(block_diag(g, g) for g in sl2z().generators))


# -- rank ------------------------------------------------------------------

def test_rank_of_rationals_is_zero():
    prof = rank_and_basis([rational_point((F(1, 2), 0), 2), rational_point((0, 0), 2)])
    assert prof.r == 0 and prof.d == (0, 0) and prof.basis_indices == ()


def test_rank_one_symbol():
    prof = rank_and_basis([z, z.scale(2).shift((F(1, 3), 0))])
    assert prof.r == 1 and prof.basis_indices == (0,)


def test_rank_two_symbols():
    assert rank_and_basis([zz(0, 2), zz(1, 2)]).r == 2


def test_rank_empty_rejected():
    with pytest.raises(ValueError):
        rank_and_basis([])


def test_rank_is_nondecreasing():
    rng = np.random.default_rng(1)
    pts = [SymbolicPoint((0, 0), tuple(tuple(F(int(x)) for x in rng.integers(-1, 2, 3))
                                       for _ in range(2))) for _ in range(12)]
    d = rank_and_basis(pts).d
    assert all(a <= b for a, b in zip(d, d[1:]))
    assert d[-1] == rank_and_basis(pts).r


# -- dependence ------------------------------------------------------------

def test_dependence_with_offset():
    rel = is_rationally_dependent([z, z.scale(2).shift((F(1, 3), 0))])
    assert rel.coefficients == (2, -1)
    assert rel.offset == (F(2, 3), 0)


def test_independent_symbols():
    assert is_rationally_dependent([zz(0, 2), zz(1, 2)]) is Independent


def test_single_rational_point_is_dependent():
    rel = is_rationally_dependent([rational_point((F(1, 2), 0))])
    assert rel.coefficients == (1,)
    assert rel.offset == (F(1, 2), 0)


# -- centralizer -----------------------------------------------------------

def test_sl2_commutant_is_scalar():
    cb = centralizer_basis(G)
    assert cb.dimension == 1 and cb.is_scalar
    assert cb.basis == (((1, 0), (0, 1)),)


def test_identity_generator_commutant_is_everything():
    for n in (2, 3):
        cb = centralizer_basis(GroupPresentation((IntMatrix.identity(n),)))
        assert cb.dimension == n * n


def test_reducible_commutant_has_dimension_four():
    cb = centralizer_basis(reducible())
    assert cb.dimension == 4 and not cb.is_scalar
    gens = reducible().generators
    for B in cb.basis:
        for g in gens:
            Bg = [[sum(B[i][k] * g.rows[k][j] for k in range(4)) for j in range(4)]
                  for i in range(4)]
            gB = [[sum(g.rows[i][k] * B[k][j] for k in range(4)) for j in range(4)]
                  for i in range(4)]
            assert Bg == gB


def test_commutant_dimension_invariant_under_conjugation():
    rng = np.random.default_rng(7)
    for gens in (G.generators, reducible().generators):
        n = gens[0].n
        base = centralizer_basis(GroupPresentation(gens)).dimension
        for _ in range(5):
            # random unimodular conjugator from elementary operations
            P = IntMatrix.identity(n)
            for _ in range(6):
                i, j = rng.choice(n, 2, replace=False)
                E = [list(r) for r in IntMatrix.identity(n).rows]
                E[i][j] = int(rng.integers(-2, 3))
                P = P @ IntMatrix.of(E)
            conj = tuple(P @ g @ P.inverse() for g in gens)
            assert centralizer_basis(GroupPresentation(conj)).dimension == base


def test_classifiers_refuse_reducible_groups():
    H = reducible()
    x = vector_symbol(0, 4, 1)
    with pytest.raises(HypothesisError):
        classify_pair(x, x.scale(2), H)
    with pytest.raises(HypothesisError):
        classify_tuple([x], H)


# -- finite orbits ---------------------------------------------------------

def test_finite_orbit_half_half():
    orb = finite_orbit(rational_point((F(1, 2), F(1, 2))), G)
    assert {p.q for p in orb} == {(F(1, 2), F(1, 2)), (0, F(1, 2)), (F(1, 2), 0)}


def test_finite_orbit_zero():
    assert [p.q for p in finite_orbit(rational_point((0, 0)), G)] == [(0, 0)]


def test_finite_orbit_fifth():
    orb = finite_orbit(rational_point((F(1, 5), 0)), G)
    assert len(orb) == 24
    assert {p.q for p in orb} == {(F(a, 5), F(b, 5)) for a in range(5) for b in range(5)} - {(0, 0)}


def test_finite_orbit_rejects_irrational():
    with pytest.raises(ValueError):
        finite_orbit(z, G)


@pytest.mark.parametrize("start", [(F(1, 6), F(1, 3)), (F(1, 4), F(1, 2)), (F(3, 8), 0)])
def test_finite_orbit_restart_gives_same_set(start):
    orb = {p.q for p in finite_orbit(rational_point(start), G)}
    for q in list(orb)[:5]:
        assert {p.q for p in finite_orbit(rational_point(q), G)} == orb
    for g in G.generators:
        for q in orb:
            assert apply_automorphism(g, rational_point(q)).q in orb


# -- pairs -----------------------------------------------------------------

def test_pair_rational_is_finite_mod_6():
    x, y = rational_point((F(1, 2), 0)), rational_point((0, F(1, 3)))
    d = classify_pair(x, y, G)
    assert isinstance(d, Finite)
    # BFS mod 6 on (Z/6)^4 with the diagonal action
    seen = tuple_orbit([x, y], G)
    assert set(d.points) == set(seen)
    assert ((F(1, 2), 0), (0, F(1, 3))) in d.points
    assert closure_membership([x, y], d)


def test_pair_one_rational():
    d = classify_pair(rational_point((F(1, 2), 0), 2), vector_symbol(0, 2, 1), G)
    assert isinstance(d, FiniteTimesFull)
    assert d.full_positions == (1,) and len(d.finite_factor) == 3


def test_pair_diagonal():
    d = classify_pair(z, z, G)
    assert isinstance(d, AffineUnion)
    assert d.pair_multipliers == (1, 1)
    assert d.translations == (((0, 0),),)


def test_pair_independent():
    assert isinstance(classify_pair(zz(0, 2), zz(1, 2), G), FullProduct)


def test_pair_context_mismatch():
    with pytest.raises(BasisContextError):
        classify_pair(zz(0, 2), z, G)


def test_pair_two_three():
    d = classify_pair(z.scale(2), z.scale(3), G)
    assert d.pair_multipliers == (2, 3)


def test_pair_negative_ratio():
    d = classify_pair(z.scale(3), z.scale(-2).shift((F(1, 2), 0)), G)
    a, b = d.pair_multipliers
    assert (a, b) == (3, -2) and gcd(a, b) == 1


# -- affine closures -------------------------------------------------------

def test_affine_one_extra():
    d = build_affine_closure([z], [z.scale(F(2, 3))], G)
    assert d.multipliers == (3,) and d.coeff_rows == ((2,),)


def test_affine_two_extras():
    d = build_affine_closure([z], [z.scale(F(2, 3)), z.scale(F(1, 6))], G)
    assert d.multipliers == (6,) and d.coeff_rows == ((4,), (1,))


def test_affine_translation_orbit():
    d = build_affine_closure([z], [z.shift((F(1, 2), 0))], G)
    assert d.multipliers == (1,) and d.coeff_rows == ((1,),)
    assert {h[0] for h in d.translations} == {(F(1, 2), 0), (0, F(1, 2)), (F(1, 2), F(1, 2))}


def test_affine_rejects_rational_extra():
    with pytest.raises(ValueError, match="rational"):
        build_affine_closure([z], [rational_point((F(1, 2), 0), 2)], G)


def test_affine_rejects_extra_outside_span():
    with pytest.raises(ValueError, match="span"):
        build_affine_closure([zz(0, 2)], [zz(1, 2)], G)


def test_affine_dimension_is_n_r():
    d = build_affine_closure([zz(0, 2), zz(1, 2)], [zz(0, 2) + zz(1, 2).scale(F(1, 2))], G)
    assert d.dimension == 4


# -- membership ------------------------------------------------------------

def test_membership_own_closure():
    b = z.scale(F(2, 3))
    d = build_affine_closure([z], [b], G)
    assert closure_membership([z, b], d)


def test_membership_independent_against_diagonal():
    d = classify_pair(zz(0, 2), zz(0, 2), G)
    assert not closure_membership([zz(0, 2), zz(1, 2)], d)


def test_membership_translate_lookup():
    d = build_affine_closure([z], [z.shift((F(1, 2), 0))], G)
    assert closure_membership([z, z.shift((F(1, 2), 0))], d)
    assert closure_membership([z, z.shift((0, F(1, 2)))], d)
    assert not closure_membership([z, z.shift((F(1, 3), 0))], d)
    assert not closure_membership([z, z], d)


def test_membership_arity_mismatch():
    with pytest.raises(ValueError):
        closure_membership([z], FullProduct(2))


# -- tuples ----------------------------------------------------------------

def test_tuple_independent_is_full():
    assert isinstance(classify_tuple([zz(0, 3), zz(1, 3), zz(2, 3)], G), FullProduct)


def test_tuple_all_rational_is_finite():
    d = classify_tuple([rational_point((F(1, 2), 0)), rational_point((F(1, 3), F(2, 3)))], G)
    assert isinstance(d, Finite)


def test_tuple_lcm_closure():
    d = classify_tuple([z, z.scale(F(2, 3)), z.scale(F(1, 6))], G)
    assert isinstance(d, AffineUnion)
    assert d.multipliers == (6,) and d.coeff_rows == ((4,), (1,))
    assert d.dimension == 2


def test_tuple_mixed_rational_and_dependent():
    pts = [z, rational_point((F(1, 2), 0), 2), z.scale(2)]
    d = classify_tuple(pts, G)
    assert isinstance(d, AffineUnion)
    assert closure_membership(pts, d)


def tuples_for_properties():
    m = 2
    a, b = zz(0, m), zz(1, m)
    half = rational_point((F(1, 2), 0), 2 * m)
    return [
        [z.scale(2), z.scale(3)],
        [z, z.shift((F(1, 2), F(1, 3)))],
        [z, z.scale(F(2, 3)), z.scale(F(1, 6)).shift((0, F(1, 4)))],
        [a, b, a.scale(F(1, 2)) + b.scale(F(-1, 3)).shift((F(1, 5), 0))],
        [half, a, b],
        [half, rational_point((0, F(1, 3)), 2 * m)],
        [a, b],
        [a, half, a.scale(-1)],
    ]


@pytest.mark.parametrize("tup", tuples_for_properties())
def test_descriptor_contains_orbit(tup):
    d = classify_tuple(tup, G)
    assert closure_membership(tup, d)
    assert descriptor_from_json(d.to_json()) == d
    rng = np.random.default_rng(11)
    for _ in range(1000):
        g = evaluate_word(random_word(G, int(rng.integers(0, 9)), rng), G)
        assert closure_membership([apply_automorphism(g, p) for p in tup], d)


def test_graph_invariant_for_dependent_pair():
    x, y = z.scale(F(3, 2)).shift((F(1, 4), 0)), z.scale(F(-5, 4))
    d = classify_pair(x, y, G)
    a, b = d.pair_multipliers
    const = (x.scale(b) - y.scale(a)).q
    assert (x.scale(b) - y.scale(a)).is_rational
    rng = np.random.default_rng(3)
    for _ in range(500):
        g = evaluate_word(random_word(G, int(rng.integers(0, 10)), rng), G)
        u, v = apply_automorphism(g, x), apply_automorphism(g, y)
        diff = u.scale(b) - v.scale(a)
        assert diff.is_rational
        assert diff.q == apply_automorphism(g, rational_point(const, 1)).q


# -- sample analysis -------------------------------------------------------

def test_hyperplane_rank_one():
    coords = [(F(1, 2),), (F(1, 2),), (F(1, 3),), (F(1, 2),)]
    assert hyperplane_subfamily(coords) == [0, 1, 3]
    assert hyperplane_subfamily(coords, threshold=0.8) is None


def test_hyperplane_rank_two():
    line = [(F(k), F(2 * k + 1)) for k in range(6)]
    off = [(F(1, 3), F(0)), (F(5), F(-2))]
    assert sorted(hyperplane_subfamily(line + off)) == list(range(6))


def test_analyse_sample_cases():
    assert analyse_sample([rational_point((F(1, 2), 0), 2)]).case == "rational"
    assert analyse_sample([zz(0, 2), zz(1, 2)]).case == "independent"
    sc = analyse_sample([z, z.scale(2), z.scale(3)])
    assert sc.case == "affine" and sc.profile.r == 1


def test_analyse_sample_fallback():
    a, b = zz(0, 2), zz(1, 2)
    extras = [a.scale(k) + b for k in range(1, 6)] + [a.scale(F(1, 7)) + b.scale(3)]
    sc = analyse_sample([a, b] + extras)
    assert sc.fallback_triggered
    assert set(sc.reduced) == set(range(2, 7))
