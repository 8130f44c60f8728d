"""
Writing a doubly stochastic matrix as a mix of permutations
===========================================================
"""

from fractions import Fraction

import numpy as np

from npoint_flows import birkhoff_decompose, permutation_matrix

rng = np.random.default_rng(1)
m = 5
B = np.full((m, m), Fraction(0), dtype=object)
for w in (Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)):
    B[np.arange(m), rng.permutation(m)] += w
B = (B + B.T) / 2
print(B)

parts = birkhoff_decompose(B.tolist())
for f, w in parts:
    print(f"{str(w):>6s}  {f}")

rebuilt = sum(w * permutation_matrix(f).astype(object) for f, w in parts)
print("exact reconstruction:", np.array_equal(rebuilt, B), "| atoms used:", len(parts),
      "| bound:", (m - 1) ** 2 + 1)
