"""Invariant measures of n-point chains and detection of the bifurcation level.

A flow is seeded at a tuple; the invariant measure "containing" the seed is
the stationary law of the unique recurrent class reachable from it. Measures
are pushed down one coordinate at a time (by default the first), and the
supports of two flows are compared level by level.
"""

from __future__ import annotations

import json
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .chain import TransitionMatrix, first_characteristic_divergence, lift_transition_matrix
from .core import MapDistribution, apply_map, decode_tuple, encode_tuple, format_rational
from .errors import AmbiguityError, DomainError
from .linalg import SingularSystemError, solve_unique


@dataclass(frozen=True)
class InvariantMeasure:
    m: int
    n: int
    masses: dict  # tuple index -> positive Fraction
    class_id: Optional[int] = None

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(i for i, v in self.masses.items() if v != 0))

    def tuples(self) -> list[tuple[int, ...]]:
        return [decode_tuple(self.m, self.n, i) for i in self.support]

    def total(self) -> Fraction:
        return sum(self.masses.values(), Fraction(0))

    def mass(self, t: Sequence[int]) -> Fraction:
        return self.masses.get(encode_tuple(self.m, t), Fraction(0))

    def profile(self) -> "SupportProfile":
        return SupportProfile(self.n, tuple(self.tuples()))

    @classmethod
    def point_mass(cls, m: int, t: Sequence[int]) -> "InvariantMeasure":
        i = encode_tuple(m, t)
        return cls(m, len(t), {i: Fraction(1)}, i)


def recurrent_classes(A: TransitionMatrix, states: Optional[Iterable[int]] = None) -> list[list[int]]:
    """Closed communicating classes of ``A`` (restricted to ``states`` if given).

    Classes are sorted internally and ordered by their smallest member.
    Transitions leaving ``states`` count as exits, so a restriction should be
    closed under the chain (e.g. a reachable set).
    """
    states = list(range(A.size)) if states is None else sorted(set(states))
    pos = {s: k for k, s in enumerate(states)}
    src, dst = [], []
    leaks = np.zeros(len(states), dtype=bool)
    for k, s in enumerate(states):
        for j, v in A.row(s).items():
            if v == 0:
                continue
            if j in pos:
                src.append(k)
                dst.append(pos[j])
            else:
                leaks[k] = True
    graph = csr_matrix((np.ones(len(src)), (src, dst)), shape=(len(states), len(states)))
    ncomp, labels = connected_components(graph, directed=True, connection="strong")
    closed = np.ones(ncomp, dtype=bool)
    src_a, dst_a = np.asarray(src, dtype=np.int64), np.asarray(dst, dtype=np.int64)
    if len(src_a):
        crossing = labels[src_a] != labels[dst_a]
        closed[labels[src_a[crossing]]] = False
    closed[labels[leaks]] = False
    classes = [[] for _ in range(ncomp)]
    for k, lab in enumerate(labels):
        if closed[lab]:
            classes[lab].append(states[k])
    return sorted((c for c in classes if c), key=lambda c: c[0])


def stationary_distribution(A: TransitionMatrix, cls: Sequence[int]) -> InvariantMeasure:
    """Exact stationary law of ``A`` on the recurrent class ``cls``."""
    cls = sorted(cls)
    members = set(cls)
    rows = {i: A.row(i) for i in cls}
    for i, r in rows.items():
        if any(v != 0 and j not in members for j, v in r.items()):
            raise SingularSystemError(f"state {i} leaves the proposed class; not a recurrent class")
    # doubly stochastic on the class: the uniform law is stationary
    col = {j: Fraction(0) for j in cls}
    for r in rows.values():
        for j, v in r.items():
            col[j] += v
    if all(v == 1 for v in col.values()):
        u = Fraction(1, len(cls))
        return InvariantMeasure(A.m, A.n, {i: u for i in cls}, cls[0])
    pos = {s: k for k, s in enumerate(cls)}
    size = len(cls)
    eqs = [[Fraction(0)] * size for _ in range(size)]
    for i, r in rows.items():
        for j, v in r.items():
            eqs[pos[j]][pos[i]] += v
    for k in range(size):
        eqs[k][k] -= 1
    eqs.append([Fraction(1)] * size)
    rhs = [Fraction(0)] * size + [Fraction(1)]
    mu = solve_unique(eqs, rhs)
    return InvariantMeasure(A.m, A.n, {cls[k]: mu[k] for k in range(size) if mu[k] != 0}, cls[0])


def reachable_chain(dist: MapDistribution, seed: Sequence[int]) -> TransitionMatrix:
    """Level-n chain (n = len(seed)) with rows filled only on the orbit closure of ``seed``."""
    m, n = dist.m, len(seed)
    start = tuple(seed)
    encode_tuple(m, start)
    seen = {start: encode_tuple(m, start)}
    rows = {}
    queue = deque([start])
    while queue:
        x = queue.popleft()
        row = {}
        for f, w in dist.atoms:
            y = apply_map(f, x)
            j = seen.get(y)
            if j is None:
                j = seen[y] = encode_tuple(m, y)
                queue.append(y)
            row[j] = row.get(j, Fraction(0)) + w
        rows[seen[x]] = row
    return TransitionMatrix(m, n, rows=rows)


def seeded_invariant_measure(dist: MapDistribution, seed: Sequence[int]) -> InvariantMeasure:
    """Stationary law of the recurrent class reachable from ``seed``.

    Raises :class:`AmbiguityError` (with ``.classes``) if several recurrent
    classes are reachable.
    """
    A = reachable_chain(dist, seed)
    classes = recurrent_classes(A, states=A.stored_indices())
    if len(classes) != 1:
        decoded = [[decode_tuple(A.m, A.n, i) for i in c] for c in classes]
        raise AmbiguityError(f"{len(classes)} recurrent classes reachable from {tuple(seed)}: {decoded}",
                             classes)
    return stationary_distribution(A, classes[0])


def project_measure(v: InvariantMeasure, r: int = 1) -> InvariantMeasure:
    """Marginal of ``v`` after deleting coordinate ``r``."""
    if v.n < 2:
        raise DomainError(f"cannot project a level-{v.n} measure")
    if not 1 <= r <= v.n:
        raise DomainError(f"coordinate r={r} outside 1..{v.n}")
    out: dict[int, Fraction] = {}
    for i, mass in v.masses.items():
        t = decode_tuple(v.m, v.n, i)
        j = encode_tuple(v.m, t[: r - 1] + t[r:])
        out[j] = out.get(j, Fraction(0)) + mass
    return InvariantMeasure(v.m, v.n - 1, out)


def projection_cascade(v: InvariantMeasure, r=1) -> list[InvariantMeasure]:
    """``[v_n, v_{n-1}, ..., v_1]``; ``r`` is one coordinate or one per step."""
    steps = [r] * (v.n - 1) if isinstance(r, int) else list(r)
    if len(steps) != v.n - 1:
        raise DomainError(f"need {v.n - 1} projection coordinates, got {len(steps)}")
    out = [v]
    for coord in steps:
        out.append(project_measure(out[-1], coord))
    return out


def is_stationary(mu: InvariantMeasure, A: TransitionMatrix) -> bool:
    if (mu.m, mu.n) != (A.m, A.n):
        raise DomainError("measure and matrix live on different spaces")
    acc: dict[int, Fraction] = {}
    for i, mass in mu.masses.items():
        for j, p in A.row(i).items():
            acc[j] = acc.get(j, Fraction(0)) + mass * p
    lhs = {j: v for j, v in acc.items() if v != 0}
    rhs = {j: v for j, v in mu.masses.items() if v != 0}
    return lhs == rhs


def check_projection_invariance(mu: InvariantMeasure, dist: MapDistribution, r: int) -> bool:
    """Is the marginal of ``mu`` along ``r`` stationary for the (n-1)-point chain of ``dist``?"""
    lower = project_measure(mu, r)
    return is_stationary(lower, lift_transition_matrix(dist, lower.n, lazy=True))


@dataclass(frozen=True)
class SupportProfile:
    level: int
    tuples: tuple

    @property
    def cardinality(self) -> int:
        return len(self.tuples)


def supports_homeomorphic(a: SupportProfile, b: SupportProfile) -> bool:
    """Finite discrete supports are homeomorphic exactly when they have equal size."""
    if a.level != b.level:
        raise DomainError(f"profiles at levels {a.level} and {b.level}")
    return a.cardinality == b.cardinality


@dataclass
class LevelComparison:
    level: int
    profile_a: SupportProfile
    profile_b: SupportProfile
    measure_a: InvariantMeasure
    measure_b: InvariantMeasure

    @property
    def equal(self) -> bool:
        return set(self.profile_a.tuples) == set(self.profile_b.tuples)

    @property
    def homeomorphic(self) -> bool:
        return supports_homeomorphic(self.profile_a, self.profile_b)


@dataclass
class BifurcationReport:
    seed: tuple
    levels: list = field(default_factory=list)  # LevelComparison, top level first
    detected_level: Optional[int] = None
    characteristic_level: Optional[int] = None

    def comparison(self, level: int) -> LevelComparison:
        for c in self.levels:
            if c.level == level:
                return c
        raise KeyError(level)

    def to_dict(self) -> dict:
        def tup(t):
            return list(t)

        return {
            "seed": list(self.seed),
            "detected_level": self.detected_level,
            "characteristic_level": self.characteristic_level,
            "levels": [
                {
                    "level": c.level,
                    "support_a": [tup(t) for t in c.profile_a.tuples],
                    "support_b": [tup(t) for t in c.profile_b.tuples],
                    "mass_a": [format_rational(c.measure_a.masses[i]) for i in c.measure_a.support],
                    "mass_b": [format_rational(c.measure_b.masses[i]) for i in c.measure_b.support],
                    "equal": c.equal,
                    "homeomorphic": c.homeomorphic,
                }
                for c in self.levels
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def detect_bifurcation_level(a: MapDistribution, b: MapDistribution, seed: Sequence[int],
                             r=1, max_workers: int = 1) -> BifurcationReport:
    """Compare the projection cascades of two flows seeded at the same tuple.

    The detected level is the lowest level whose supports differ; every level
    below it agrees. ``None`` means the supports agree everywhere.
    """
    if a.m != b.m:
        raise DomainError(f"distributions act on {a.m} and {b.m} states")
    seed = tuple(seed)
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=2) as pool:
            fa = pool.submit(seeded_invariant_measure, a, seed)
            fb = pool.submit(seeded_invariant_measure, b, seed)
            va, vb = fa.result(), fb.result()
    else:
        va, vb = seeded_invariant_measure(a, seed), seeded_invariant_measure(b, seed)
    cascade_a, cascade_b = projection_cascade(va, r), projection_cascade(vb, r)
    levels = [LevelComparison(x.n, x.profile(), y.profile(), x, y) for x, y in zip(cascade_a, cascade_b)]
    detected = None
    for c in reversed(levels):
        if not c.equal:
            detected = c.level
            break
    return BifurcationReport(seed, levels, detected,
                             first_characteristic_divergence(a, b, len(seed)))
