"""Exact analysis of flows of i.i.d. random maps on a finite set.

Lift a map distribution to its n-point transition matrices, find where two
flows start to differ in their invariant measures, count the degrees of
freedom left once k-point characteristics are fixed, and simulate the flow in
continuous time.
"""

from .chain import (
    ConsistencyReport,
    ProjectionPair,
    TransitionMatrix,
    check_consistency,
    first_characteristic_divergence,
    kpoint_probability,
    kpoint_row,
    lift_transition_matrix,
    project_matrix,
    projection_matrices,
)
from .constraints import (
    ConstraintSystem,
    DofTable,
    birkhoff_decompose,
    build_constraints,
    characteristics_of,
    dof_recursion,
    dof_table,
    exact_rank,
    mpoint_row,
    nullspace_basis,
    onepoint_bistochastic_check,
    permutation_dof_k1,
    permutation_matrix,
    reconstruct_from_mpoint_row,
    verify_complementarity,
    verify_reference_basis_m3,
)
from .core import (
    ALL_MAPS,
    BIJECTIONS,
    MapDistribution,
    MapTable,
    apply_map,
    compose,
    decode_tuple,
    dirac,
    encode_tuple,
    format_rational,
    iter_maps,
    parse_rational,
    validate_distribution,
)
from .errors import (
    AmbiguityError,
    DomainError,
    InputError,
    ModeError,
    NormalizationError,
    NPointError,
    ResourceError,
)
from .flipgroup import example_distribution, flip_group, verify_example
from .invariant import (
    BifurcationReport,
    InvariantMeasure,
    detect_bifurcation_level,
    project_measure,
    projection_cascade,
    recurrent_classes,
    seeded_invariant_measure,
    stationary_distribution,
)
from .simulate import (
    EmpiricalEstimate,
    TrajectorySample,
    embed_linear,
    empirical_transition_estimate,
    poisson_subordinate,
    sample_discrete_walk,
    simulate_flow,
)

__version__ = "0.1.0"
