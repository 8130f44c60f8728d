"""
A flow whose low-order statistics hide a change
================================================

Six states in three blocks. Maps that flip an even number of blocks form
a subgroup H of the flip group G. Mixing in the odd flips with weight eps
leaves every 1- and 2-point transition probability alone, yet the
6-point motion now wanders over twice as many tuples.
"""

from fractions import Fraction

from npoint_flows import example_distribution, flip_group, lift_transition_matrix, seeded_invariant_measure

spec = flip_group(6)
print("G:", ", ".join(str(f) for f in spec.G))
print("H:", ", ".join(str(f) for f in spec.H))

unperturbed = example_distribution(6, 0)
perturbed = example_distribution(6, Fraction(1, 2))

# levels 1 and 2 are identical, level 3 is not
for n in (1, 2, 3):
    same = lift_transition_matrix(unperturbed, n) == lift_transition_matrix(perturbed, n)
    print(f"{n}-point transition matrices equal: {same}")

cell = lift_transition_matrix(perturbed, 3).first_difference(lift_transition_matrix(unperturbed, 3))
print("first differing 3-point cell (row, col, eps=1/2, eps=0):", cell)

seed = (1, 2, 3, 4, 5, 6)
for name, nu in [("eps = 0  ", unperturbed), ("eps = 1/2", perturbed)]:
    mu = seeded_invariant_measure(nu, seed)
    print(name, "invariant support size", len(mu.support), mu.tuples())
