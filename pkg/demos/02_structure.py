"""Orbit-closure classification for pairs and tuples.

Run with ``python3 demos/02_structure.py``.
"""
# %%
from fractions import Fraction as F

from glasner_lab import (block_diag, build_affine_closure, centralizer_basis, classify_pair,
                         classify_tuple, closure_membership, rational_point, sl2z, vector_symbol)
from glasner_lab import GroupPresentation, HypothesisError

G = sl2z()
z = vector_symbol(0, 2, 1)

# %% The commutant of SL(2, Z) is the scalars; a block-diagonal copy is not irreducible
print("dim C(SL2Z) =", centralizer_basis(G).dimension)
T, U = G.generators
red = GroupPresentation((block_diag(T, T), block_diag(U, U)))
print("dim C(block diag) =", centralizer_basis(red).dimension)
try:
    classify_pair(vector_symbol(0, 4, 1), vector_symbol(0, 4, 1, 2), red)
except HypothesisError as e:
    print("refused:", e)

# %% Four kinds of pair closures
pairs = {
    "two rational points": (rational_point((F(1, 2), 0)), rational_point((0, F(1, 3)))),
    "one rational point": (rational_point((F(1, 2), 0), 2), z),
    "dependent": (z.scale(2), z.scale(3).shift((F(1, 2), 0))),
    "independent": (vector_symbol(0, 2, 2), vector_symbol(1, 2, 2)),
}
for name, (x, y) in pairs.items():
    d = classify_pair(x, y, G)
    print("%-20s -> %s" % (name, d.case))

d = classify_pair(*pairs["dependent"], G)
print("(2z, 3z + (1/2, 0)): multipliers", d.pair_multipliers,
      "with", len(d.translations), "translates")

# %% The lcm rule for several dependent points
d = build_affine_closure([z], [z.scale(F(2, 3)), z.scale(F(1, 6))], G)
print("t =", d.multipliers[0], " sbar =", [r[0] for r in d.coeff_rows])
tup = [z, z.scale(F(2, 3)), z.scale(F(1, 6))]
print("tuple in its closure:", closure_membership(tup, classify_tuple(tup, G)))
