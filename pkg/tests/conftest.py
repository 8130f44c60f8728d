import re
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from npoint_flows import MapDistribution, MapTable, example_distribution, validate_distribution
from npoint_flows.core import BIJECTIONS


def random_distribution(rng: np.random.Generator, m: int, max_atoms: int = 6,
                        bijections: bool = False) -> MapDistribution:
    """Random law with integer weights normalized to one."""
    n_atoms = int(rng.integers(1, max_atoms + 1))
    atoms = {}
    for _ in range(n_atoms):
        images = rng.permutation(m) + 1 if bijections else rng.integers(1, m + 1, size=m)
        f = MapTable(tuple(int(x) for x in images))
        atoms[f] = atoms.get(f, 0) + int(rng.integers(1, 10))
    total = sum(atoms.values())
    mode = BIJECTIONS if bijections else "all-maps"
    return validate_distribution(MapDistribution(m, {f: Fraction(w, total) for f, w in atoms.items()}, mode))


@st.composite
def distributions(draw, m_values=(2, 3, 4), max_atoms=5, bijections=False):
    m = draw(st.sampled_from(m_values))
    if bijections:
        map_st = st.permutations(list(range(1, m + 1))).map(tuple)
    else:
        map_st = st.tuples(*[st.integers(1, m)] * m)
    pairs = draw(st.lists(st.tuples(map_st, st.integers(1, 9)), min_size=1, max_size=max_atoms))
    total = sum(w for _, w in pairs)
    atoms = {}
    for images, w in pairs:
        f = MapTable(images)
        atoms[f] = atoms.get(f, Fraction(0)) + Fraction(w, total)
    return validate_distribution(MapDistribution(m, atoms, BIJECTIONS if bijections else "all-maps"))


@pytest.fixture(scope="session")
def nu0():
    return example_distribution(6, 0)


@pytest.fixture(scope="session")
def nu_half():
    return example_distribution(6, Fraction(1, 2))


# one summary line per acceptance criterion

_AC_RESULTS: dict = {}
_AC_NAME = re.compile(r"test_acceptance\.py::test_ac(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    match = _AC_NAME.search(report.nodeid)
    if not match:
        return
    key = int(match.group(1))
    failed = report.failed or (report.when == "call" and report.outcome == "skipped")
    prev = _AC_RESULTS.get(key, (match.group(2), True))
    ok = prev[1] and not failed
    if report.when == "call" or failed:
        _AC_RESULTS[key] = (match.group(2), ok)


def pytest_terminal_summary(terminalreporter):
    if not _AC_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_AC_RESULTS):
        name, ok = _AC_RESULTS[key]
        terminalreporter.write_line(f"AC{key:02d} {'PASS' if ok else 'FAIL'}  {name.replace('_', ' ')}")
