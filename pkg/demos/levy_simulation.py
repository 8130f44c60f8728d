"""
Running the flow in continuous time
===================================

Jumps arrive at Poisson times; at each jump the current map is composed on
the left with a fresh draw. Each map acts linearly on R^m by permuting (or
merging) basis vectors.
"""

from fractions import Fraction

import numpy as np

from npoint_flows import example_distribution, lift_transition_matrix, simulate_flow
from npoint_flows.simulate import empirical_transition_estimate, is_orthogonal

nu = example_distribution(6, Fraction(1, 2))
sample = simulate_flow(nu, rate=1.0, horizon=50.0, seed=2024, embed=True)
print("jumps:", len(sample.maps))
for t, f in list(zip(sample.jump_times, sample.maps))[:5]:
    print(f"  t={t:7.3f}  {f}")
print("all linear maps orthogonal:", all(is_orthogonal(K) for K in sample.embedded))
print("value at t=10:", sample.map_at(10.0))

long_run = simulate_flow(nu, 1.0, 1e4, seed=7)
print("6-point tuples visited from 123456:", len(long_run.visited((1, 2, 3, 4, 5, 6))))

est = empirical_transition_estimate(example_distribution(6, 0), 1, 10**5, seed=3)
print("largest error of the Monte Carlo 1-point matrix:",
      round(est.max_error(lift_transition_matrix(example_distribution(6, 0), 1)), 5))
counts = [len(simulate_flow(nu, 1.0, 1000.0, seed=s).maps) for s in range(20)]
print("mean number of jumps on [0, 1000]:", np.mean(counts))
