import json
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npoint_flows import (
    AmbiguityError,
    DomainError,
    MapDistribution,
    MapTable,
    TransitionMatrix,
    detect_bifurcation_level,
    dirac,
    encode_tuple,
    example_distribution,
    flip_group,
    lift_transition_matrix,
    project_measure,
    projection_cascade,
    recurrent_classes,
    seeded_invariant_measure,
    stationary_distribution,
    validate_distribution,
)
from npoint_flows.core import BIJECTIONS
from npoint_flows.invariant import (
    InvariantMeasure,
    SupportProfile,
    check_projection_invariance,
    is_stationary,
    reachable_chain,
    supports_homeomorphic,
)
from npoint_flows.linalg import SingularSystemError

from conftest import distributions


def tuples_of(*words):
    return {tuple(int(c) for c in w) for w in words}


def test_identity_classes_are_singletons():
    classes = recurrent_classes(TransitionMatrix.identity(2, 3))
    assert classes == [[i] for i in range(8)]


@pytest.mark.parametrize("eps, size", [(Fraction(0), 4), (Fraction(1, 2), 8), (Fraction(1, 3), 8)])
def test_reachable_class_sizes(eps, size):
    A = reachable_chain(example_distribution(6, eps), (1, 2, 3, 4, 5, 6))
    classes = recurrent_classes(A, states=A.stored_indices())
    assert len(classes) == 1 and len(classes[0]) == size


def test_transient_states_are_not_classes():
    # 1 -> 2 -> 2: only {2} is closed
    nu = dirac(MapTable((2, 2)))
    assert recurrent_classes(lift_transition_matrix(nu, 1)) == [[1]]


def test_stationary_uniform_on_group_orbit():
    G = flip_group(4).G
    nu = validate_distribution(MapDistribution(4, {f: Fraction(1, len(G)) for f in G}, BIJECTIONS))
    mu = seeded_invariant_measure(nu, (1, 3))
    assert set(mu.tuples()) == {(1, 3), (1, 4), (2, 3), (2, 4)}
    assert set(mu.masses.values()) == {Fraction(1, 4)}


def test_stationary_point_mass_and_symmetric_chain():
    A = TransitionMatrix.identity(3, 2)
    assert stationary_distribution(A, [4]).masses == {4: Fraction(1)}
    half = Fraction(1, 2)
    B = TransitionMatrix(2, 1, rows={0: {0: half, 1: half}, 1: {0: half, 1: half}})
    assert stationary_distribution(B, [0, 1]).masses == {0: half, 1: half}


def test_stationary_nonuniform():
    # rows (1/2, 1/2) and (1, 0): pi = (2/3, 1/3) by hand
    nu = validate_distribution(MapDistribution(2, [((2, 1), "1/2"), ((1, 1), "1/2")]))
    A = lift_transition_matrix(nu, 1)
    mu = stationary_distribution(A, [0, 1])
    assert mu.masses == {0: Fraction(2, 3), 1: Fraction(1, 3)}
    assert is_stationary(mu, A)


def test_stationary_rejects_open_set():
    nu = dirac(MapTable((2, 2)))
    with pytest.raises(SingularSystemError):
        stationary_distribution(lift_transition_matrix(nu, 1), [0])


def test_seeded_measures_at_level_six(nu0, nu_half):
    v = seeded_invariant_measure(nu0, (1, 2, 3, 4, 5, 6))
    assert set(v.tuples()) == tuples_of("123456", "124365", "213465", "214356")
    assert set(v.masses.values()) == {Fraction(1, 4)}
    v = seeded_invariant_measure(nu_half, (1, 2, 3, 4, 5, 6))
    assert set(v.tuples()) == tuples_of("123456", "123465", "124356", "124365",
                                        "213456", "213465", "214356", "214365")
    v = seeded_invariant_measure(nu0, (1, 2, 1, 4, 1, 6))
    assert set(v.tuples()) == tuples_of("121416", "121315", "212425", "212326")


def test_ambiguity_lists_classes():
    # state 2 falls onto 1 or 3, both fixed by every atom
    nu = validate_distribution(MapDistribution(3, [((1, 1, 3), "1/2"), ((1, 3, 3), "1/2")]))
    with pytest.raises(AmbiguityError) as err:
        seeded_invariant_measure(nu, (2,))
    assert err.value.classes == [[0], [2]]


def test_project_measure_examples(nu0, nu_half):
    v = seeded_invariant_measure(nu0, (1, 2, 3, 4, 5, 6))
    assert set(project_measure(v).tuples()) == tuples_of("13465", "14356", "23456", "24365")
    ve5 = project_measure(seeded_invariant_measure(nu_half, (1, 2, 3, 4, 5, 6)))
    assert set(project_measure(ve5).tuples()) == tuples_of("3456", "3465", "4356", "4365")


def test_project_product_measure_last_coordinate():
    mu = {encode_tuple(3, (a,)): w for a, w in [(1, Fraction(1, 3)), (3, Fraction(2, 3))]}
    product = InvariantMeasure(3, 2, {encode_tuple(3, (a, 2)): w for a, w in
                                      [(1, Fraction(1, 3)), (3, Fraction(2, 3))]})
    assert project_measure(product, r=2).masses == mu


def test_project_measure_errors():
    v = InvariantMeasure.point_mass(3, (1, 2))
    with pytest.raises(DomainError):
        project_measure(v, 3)
    with pytest.raises(DomainError):
        project_measure(InvariantMeasure.point_mass(3, (1,)))


def test_cascade_examples(nu0, nu_half):
    cascade = projection_cascade(seeded_invariant_measure(nu0, (1, 2, 3, 4, 5, 6)))
    assert [c.n for c in cascade] == [6, 5, 4, 3, 2, 1]
    assert cascade[-1].masses == {4: Fraction(1, 2), 5: Fraction(1, 2)}
    assert all(c.total() == 1 for c in cascade)
    cascade = projection_cascade(seeded_invariant_measure(nu_half, (1, 2, 1, 4, 1, 6)))
    assert set(cascade[4].tuples()) == tuples_of("16", "15", "25", "26")
    diag = projection_cascade(InvariantMeasure.point_mass(4, (3, 3, 3, 3)))
    assert [c.masses for c in diag] == [{encode_tuple(4, (3,) * k): 1} for k in (4, 3, 2, 1)]


def test_cascade_with_coordinate_list():
    v = InvariantMeasure.point_mass(4, (1, 2, 3))
    assert [c.tuples() for c in projection_cascade(v, [3, 2])] == [[(1, 2, 3)], [(1, 2)], [(1,)]]
    with pytest.raises(DomainError):
        projection_cascade(v, [1])


@pytest.mark.parametrize("eps", [Fraction(0), Fraction(1, 2)])
@pytest.mark.parametrize("seed", [(1, 2, 3, 4, 5, 6), (1, 2, 1, 4, 1, 6)])
def test_example_projection_invariance(eps, seed):
    nu = example_distribution(6, eps)
    mu = seeded_invariant_measure(nu, seed)
    assert all(check_projection_invariance(mu, nu, r) for r in range(1, 7))


@settings(max_examples=25, deadline=None)
@given(distributions(m_values=(3,)), st.lists(st.integers(1, 3), min_size=3, max_size=3))
def test_random_projection_invariance(nu, seed):
    A = reachable_chain(nu, seed)
    for cls in recurrent_classes(A, states=A.stored_indices()):
        mu = stationary_distribution(A, cls)
        assert mu.total() == 1 and all(v > 0 for v in mu.masses.values())
        assert is_stationary(mu, lift_transition_matrix(nu, 3))
        assert all(check_projection_invariance(mu, nu, r) for r in (1, 2, 3))


def test_identity_flow_point_mass_invariance():
    nu = dirac(MapTable.identity(3))
    mu = InvariantMeasure.point_mass(3, (2, 1, 3))
    assert all(check_projection_invariance(mu, nu, r) for r in (1, 2, 3))


def test_detect_self_is_none(nu0):
    report = detect_bifurcation_level(nu0, nu0, (1, 2, 3, 4, 5, 6))
    assert report.detected_level is None and report.characteristic_level is None
    assert all(c.equal and c.homeomorphic for c in report.levels)


def test_detect_perturbed_pair_agrees_everywhere():
    a, b = example_distribution(6, Fraction(1, 4)), example_distribution(6, Fraction(3, 4))
    for seed in [(1, 2, 3, 4, 5, 6), (1, 2, 1, 4, 1, 6)]:
        assert detect_bifurcation_level(a, b, seed).detected_level is None


def test_detect_report_shape(nu0, nu_half):
    report = detect_bifurcation_level(nu0, nu_half, (1, 2, 3, 4, 5, 6), max_workers=2)
    assert report.detected_level == 5 and report.characteristic_level == 3
    eq = [c.equal for c in report.levels]
    # once supports agree, they agree all the way down
    assert eq == [False, False, True, True, True, True]
    data = json.loads(report.to_json())
    assert list(data) == ["seed", "detected_level", "characteristic_level", "levels"]
    assert data["levels"][0]["support_a"][0] == [1, 2, 3, 4, 5, 6]
    assert data["levels"][0]["homeomorphic"] is False
    with pytest.raises(DomainError):
        detect_bifurcation_level(nu0, dirac(MapTable.identity(2)), (1, 2))


def test_supports_homeomorphic():
    four = SupportProfile(2, ((1, 1), (1, 2), (2, 1), (2, 2)))
    eight = SupportProfile(2, tuple((a, b) for a in (1, 2) for b in (1, 2, 3, 4)))
    other_four = SupportProfile(2, ((3, 3), (1, 2), (2, 1), (2, 2)))
    assert not supports_homeomorphic(four, eight)
    assert supports_homeomorphic(four, four)
    assert supports_homeomorphic(four, other_four)
    with pytest.raises(DomainError):
        supports_homeomorphic(four, SupportProfile(1, ((1,),)))


@pytest.mark.parametrize("seed", [(1, 3, 5, 2, 4, 6), (6, 5, 4, 3, 2, 1), (1, 2, 1, 4, 1, 6)])
def test_orbit_sizes(nu0, nu_half, seed):
    assert len(seeded_invariant_measure(nu0, seed).support) == 4
    assert len(seeded_invariant_measure(nu_half, seed).support) == 8
