"""
How much of a map distribution do k-point statistics pin down?
===============================================================

A law on the m^m self-maps of {1..m} has m^m weights. Fixing the k-point
transition probabilities imposes linear restrictions on them. Their count
follows a short recursion, and exact elimination on the actual systems
agrees with it.
"""

import numpy as np

from npoint_flows import (MapDistribution, build_constraints, characteristics_of, dof_table, exact_rank,
                          nullspace_basis, validate_distribution)
from npoint_flows.constraints import PERMUTATIONS, format_nullspace

for m in (3, 4, 5):
    table = dof_table(m)
    print(f"m={m}: restrictions by k =", table.row(m))

rng = np.random.default_rng(0)
images = [tuple(int(x) for x in rng.integers(1, 4, size=3)) for _ in range(4)]
nu = validate_distribution(MapDistribution(3, [(t, "1/4") for t in images]))
for k in range(4):
    sys_ = build_constraints(3, k, characteristics_of(nu))
    print(f"m=3 k={k}: {sys_.n_rows} rows, rank {exact_rank(sys_)}, "
          f"free directions {sys_.n_unknowns - exact_rank(sys_)}")

# directions that keep all 2-point statistics fixed
sys_ = build_constraints(3, 2)
print(format_nullspace(sys_, nullspace_basis(sys_)))

# flows of permutations: the 1-point matrix is doubly stochastic
for m in (3, 4, 5):
    print(f"permutations m={m}, k=1: rank", exact_rank(build_constraints(m, 1, mode=PERMUTATIONS)))
