"""Covering radii, dilations and translate searches.

Run with ``python3 demos/03_density.py`` (about ten seconds).
"""
# %%
from decimal import Decimal, localcontext
from fractions import Fraction as F

import numpy as np

from glasner_lab import (Realization, covering_radius_torus, dilation_search, orbit_density_probe,
                         sl2z, translate_search, vector_symbol)
from glasner_lab.density import orbit_discrepancy
from glasner_lab.structure import random_independent_points

G = sl2z()

# %% Circle dilations: the first n making n X eps-dense
with localcontext() as ctx:
    ctx.prec = 60
    X = [(j * Decimal(2).sqrt()) % 1 for j in range(1, 51)]
print(dilation_search(X, F(3, 250)))
print(dilation_search([F(0), F(1, 2)], F(1, 20)))

# %% Two-sided covering bounds on the torus
S = np.random.default_rng(1).random((40, 2))
print(covering_radius_torus(S, 0.02))

# %% An orbit of z fills the torus; a rational orbit stays finite
z = vector_symbol(0, 2, 1)
print(orbit_density_probe(z, G, Realization(2), 0.1))
print("rational orbit size:", orbit_density_probe(z.scale(0).shift((F(1, 5), 0)), G,
                                                  Realization(2), 0.1).size)

# %% Box-count discrepancy of the finite orbits of (1/q, 0)
for q in (101, 401):
    size, disc, _ = orbit_discrepancy(G, (1, 0), q, 4)
    print("q = %d: %d points, discrepancy %.5f" % (q, size, disc))

# %% One group element spreading 25 independent points eps-densely
A = random_independent_points(25, 2, 26, np.random.default_rng(0))
cert = translate_search(A, G, Realization(26), 0.2, L_max=12, delta=0.04)
print("word", cert.word, "at index", cert.word_index, "covering", cert.covering)
