"""Exact points of the torus and words in SL(2, Z).

Run with ``python3 demos/01_exact_core.py``.
"""
# %% A symbolic point: rational part plus a coefficient over z
from fractions import Fraction as F

from glasner_lab import (IntMatrix, apply_automorphism, enumerate_words, evaluate_word,
                         orbit_mod_q, rational_kernel, sl2z, vector_symbol)
from glasner_lab.exact_core import Word

G = sl2z()
z = vector_symbol(0, 2, 1)
p = z.scale(3).shift((F(1, 2), F(2, 3)))
print("p       =", p)
g = IntMatrix(((2, 1), (1, 1)))
print("cat map =", apply_automorphism(g, p))

# %% Words are evaluated exactly; entries outgrow 64-bit integers quickly
w = Word(((0, 1), (1, 1)) * 50)
M = evaluate_word(w, G)
print("length-100 word: max entry has %d digits, det = %d" % (len(str(M.max_abs())), M.det()))

# %% Breadth-first enumeration skips words with a repeated matrix
count = sum(1 for _ in enumerate_words(G, 6))
print("distinct group elements from words of length <= 6:", count)

# %% Rational kernels and finite orbits
print("kernel of [[1, 2, 3]] :", rational_kernel([[1, 2, 3]]))
print("orbit of (1, 0) mod 12:", len(orbit_mod_q(G, (1, 0), 12)), "residues")
