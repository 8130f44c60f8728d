"""The flip-group family of flows on an even number of states.

The states ``1..m`` are grouped into the blocks ``(1,2), (3,4), ...``. A flip
map swaps the two states of every block in a chosen subset. ``G`` is the
group of all ``2**(m/2)`` flip maps, ``H`` the index-2 subgroup flipping an
even number of blocks. The family

    nu_eps = (1 - eps) * uniform(H) + eps * uniform(G \\ H)

has k-point motions independent of ``eps`` for every ``k < m/2``: fewer
points than blocks cannot see the parity of the flipped set. The
``m/2``-point law already depends on ``eps``, and the supports of invariant
measures of the full motion grow from ``|H|`` to ``|G|`` elements once
``eps > 0``. For ``m = 6`` this is the 4-versus-8
example; other even ``m`` are a generalization of it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .chain import lift_transition_matrix
from .core import BIJECTIONS, MapDistribution, MapTable, as_fraction, decode_tuple, validate_distribution
from .errors import DomainError
from .invariant import detect_bifurcation_level, seeded_invariant_measure


def flip_map(m: int, blocks: Iterable[int]) -> MapTable:
    """Flip map swapping the 0-based blocks listed in ``blocks``."""
    images = list(range(1, m + 1))
    for b in blocks:
        images[2 * b], images[2 * b + 1] = images[2 * b + 1], images[2 * b]
    return MapTable(tuple(images))


@dataclass(frozen=True)
class FlipGroups:
    m: int
    pairs: tuple
    G: tuple
    H: tuple

    @property
    def coset(self) -> tuple:
        """``G \\ H``: maps flipping an odd number of blocks."""
        h = set(self.H)
        return tuple(f for f in self.G if f not in h)

    @property
    def generalized(self) -> bool:
        return self.m != 6


def flip_group(m: int) -> FlipGroups:
    if m < 4 or m % 2:
        raise DomainError(f"flip groups need an even m >= 4, got {m}")
    nblocks = m // 2
    pairs = tuple((2 * b + 1, 2 * b + 2) for b in range(nblocks))
    G, H = [], []
    for size in range(nblocks + 1):
        for blocks in itertools.combinations(range(nblocks), size):
            f = flip_map(m, blocks)
            G.append(f)
            if size % 2 == 0:
                H.append(f)
    return FlipGroups(m, pairs, tuple(sorted(G)), tuple(sorted(H)))


def example_distribution(m: int, eps) -> MapDistribution:
    eps = as_fraction(eps)
    if not 0 <= eps <= 1:
        raise DomainError(f"epsilon must lie in [0, 1], got {eps}")
    spec = flip_group(m)
    atoms = [(f, (1 - eps) / len(spec.H)) for f in spec.H]
    atoms += [(f, eps / len(spec.coset)) for f in spec.coset]
    return validate_distribution(MapDistribution(m, atoms, BIJECTIONS))


def literal_perturbed_distribution(eps) -> MapDistribution:
    """The m = 6 perturbed law written as the signed sum of Dirac masses.

    1/4 [d_abc + d_AB c + d_A b C + d_a B C]
      + eps/4 [d_Abc + d_aBc + d_abC + d_ABC - d_abc - d_ABc - d_AbC - d_aBC]

    (capital letter = flipped block).
    """
    eps = as_fraction(eps)
    f = {name: flip_map(6, [i for i, ch in enumerate(name) if ch.isupper()])
         for name in ("abc", "ABc", "AbC", "aBC", "Abc", "aBc", "abC", "ABC")}
    terms = [(f[k], Fraction(1, 4)) for k in ("abc", "ABc", "AbC", "aBC")]
    terms += [(f[k], eps / 4) for k in ("Abc", "aBc", "abC", "ABC")]
    terms += [(f[k], -eps / 4) for k in ("abc", "ABc", "AbC", "aBC")]
    return validate_distribution(MapDistribution(6, terms, BIJECTIONS))


def is_affine_family(family: Sequence[tuple]) -> bool:
    """Do the weights of ``[(eps, dist), ...]`` depend affinely on ``eps``?"""
    family = [(as_fraction(e), d) for e, d in family]
    if len(family) < 3:
        return True
    (e0, d0), (e1, d1) = family[0], family[1]
    if e0 == e1:
        raise DomainError("the first two parameter values must differ")
    maps = set()
    for _, d in family:
        maps.update(d.maps)
    for e, d in family[2:]:
        t = (e - e0) / (e1 - e0)
        for f in maps:
            if d.weight(f) != d0.weight(f) + t * (d1.weight(f) - d0.weight(f)):
                return False
    return True


@dataclass
class ExampleReport:
    m: int
    grid: list
    lower_levels_constant: dict = field(default_factory=dict)   # level -> bool
    split_differs: dict = field(default_factory=dict)           # eps -> first differing cell or None
    support_sizes: dict = field(default_factory=dict)           # eps -> cardinality
    expected_sizes: dict = field(default_factory=dict)
    detections: dict = field(default_factory=dict)              # seed -> detected level

    @property
    def constant_ok(self) -> bool:
        return all(self.lower_levels_constant.values())

    @property
    def split_ok(self) -> bool:
        return all(cell is not None for cell in self.split_differs.values())

    @property
    def split_level(self) -> int:
        """Lowest level whose law depends on ``eps``: one point per block."""
        return self.m // 2

    @property
    def supports_ok(self) -> bool:
        return self.support_sizes == self.expected_sizes

    @property
    def passed(self) -> bool:
        return self.constant_ok and self.split_ok and self.supports_ok

    def to_dict(self) -> dict:
        def cell(c):
            if c is None:
                return None
            i, j, x, y = c
            n = self.split_level
            return {"row": list(decode_tuple(self.m, n, i)), "col": list(decode_tuple(self.m, n, j)),
                    "eps_value": str(x), "zero_value": str(y)}

        return {
            "m": self.m,
            "generalized": self.m != 6,
            "grid": [str(e) for e in self.grid],
            "lower_levels_constant": {str(k): v for k, v in sorted(self.lower_levels_constant.items())},
            "split_level": self.split_level,
            "split_differs": {str(e): cell(c) for e, c in self.split_differs.items()},
            "support_sizes": {str(e): v for e, v in self.support_sizes.items()},
            "expected_sizes": {str(e): v for e, v in self.expected_sizes.items()},
            "detections": {",".join(map(str, s)): v for s, v in self.detections.items()},
            "passed": self.passed,
        }


def verify_example(grid: Sequence = (Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)),
                   m: int = 6, detection_seeds: Optional[Sequence[Sequence[int]]] = None) -> ExampleReport:
    """Check the flip-group claims against ``eps = 0`` for every grid value.

    (i) the k-point matrices for ``k < m/2`` do not depend on ``eps``; (ii) the
    ``m/2``-point matrix differs from the unperturbed one for every ``eps > 0``
    (for ``m = 6``: levels 1, 2 constant, level 3 split); (iii) the
    invariant measure seeded at ``(1..m)`` has ``|H|`` atoms at ``eps = 0`` and
    ``|G|`` atoms for ``eps > 0``. Optional detection seeds run the full
    cascade comparison against ``eps = 1/2``.
    """
    grid = [as_fraction(e) for e in grid]
    spec = flip_group(m)
    base = example_distribution(m, 0)
    report = ExampleReport(m, grid)
    split = report.split_level
    lifted0 = {k: lift_transition_matrix(base, k) for k in range(1, split + 1)}
    seed = tuple(range(1, m + 1))
    report.support_sizes[Fraction(0)] = len(seeded_invariant_measure(base, seed).support)
    report.expected_sizes[Fraction(0)] = len(spec.H)
    for k in range(1, split):
        report.lower_levels_constant[k] = True
    for eps in grid:
        dist = example_distribution(m, eps)
        for k in range(1, split):
            if lift_transition_matrix(dist, k) != lifted0[k]:
                report.lower_levels_constant[k] = False
        if eps > 0:
            report.split_differs[eps] = lift_transition_matrix(dist, split).first_difference(lifted0[split])
            report.support_sizes[eps] = len(seeded_invariant_measure(dist, seed).support)
            report.expected_sizes[eps] = len(spec.G)
    for s in detection_seeds or ():
        rep = detect_bifurcation_level(base, example_distribution(m, Fraction(1, 2)), s)
        report.detections[tuple(s)] = rep.detected_level
    return report
