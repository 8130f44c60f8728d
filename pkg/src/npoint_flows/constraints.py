"""Linear restrictions that prescribed k-point characteristics put on map weights.

Unknowns are the weights ``alpha_f`` of all ``m**m`` self-maps (or of the
``m!`` permutations), in lexicographic order of their image tuples. For a
position set ``u`` (strictly increasing, 1-based) and values ``v`` the
restriction reads

    sum { alpha_f : f(u_j) = v_j for all j } = p_{u, v}.

Row 0 of every system is the normalization ``sum alpha_f = 1``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import comb
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from . import linalg
from .chain import kpoint_probability, lift_transition_matrix
from .core import (
    BIJECTIONS,
    MapDistribution,
    MapTable,
    apply_map,
    as_fraction,
    check_space,
    format_rational,
    iter_maps,
    validate_distribution,
)
from .errors import DomainError, InputError, ModeError, ResourceError

ALL_MAPS = "all-maps"
PERMUTATIONS = "permutations"
SYSTEM_FORMAT = "dof-system-v1"


def _system_mode(mode: str) -> str:
    if mode in (PERMUTATIONS, BIJECTIONS):
        return PERMUTATIONS
    if mode == ALL_MAPS:
        return ALL_MAPS
    raise DomainError(f"unknown mode {mode!r}")


# -- the recursion ----------------------------------------------------------

@lru_cache(maxsize=None)
def _R(m: int, n: int, k: int) -> int:
    if k == 0:
        return 1
    return _R(m, n, k - 1) + comb(n, k) * (m**k - _R(m, k, k - 1))


def dof_recursion(m: int, n: int, k: int) -> int:
    """``R^n_k``: independent restrictions at level n given k-point characteristics."""
    check_space(m)
    if not 0 <= k <= n <= m:
        raise DomainError(f"need 0 <= k <= n <= m, got k={k}, n={n}, m={m}")
    return _R(m, n, k)


@dataclass(frozen=True)
class DofTable:
    m: int
    R: dict  # (n, k) -> int

    def row(self, n: int) -> list[int]:
        return [self.R[n, k] for k in range(n + 1)]

    def remaining(self, k: int) -> int:
        """Degrees of freedom left on the ``m**m`` weights."""
        return self.m**self.m - self.R[self.m, k]


def dof_table(m: int) -> DofTable:
    check_space(m)
    return DofTable(m, {(n, k): _R(m, n, k) for n in range(m + 1) for k in range(n + 1)})


# -- systems ----------------------------------------------------------------

@lru_cache(maxsize=16)
def _unknown_images(m: int, mode: str) -> np.ndarray:
    maps = iter_maps(m, BIJECTIONS if mode == PERMUTATIONS else ALL_MAPS)
    arr = np.array([f.images for f in maps], dtype=np.int64)
    arr.setflags(write=False)
    return arr


def unknown_maps(m: int, mode: str = ALL_MAPS) -> list[MapTable]:
    return [MapTable(tuple(r)) for r in _unknown_images(m, _system_mode(mode)).tolist()]


@dataclass
class ConstraintSystem:
    m: int
    mode: str
    k: int
    columns: list = field(default_factory=list)     # per row: sorted unknown indices with coefficient 1
    rhs: list = field(default_factory=list)         # per row: Fraction or None
    provenance: list = field(default_factory=list)  # per row: "normalization" or (u, v)

    @property
    def n_unknowns(self) -> int:
        return len(_unknown_images(self.m, self.mode))

    @property
    def n_rows(self) -> int:
        return len(self.columns)

    def matrix(self) -> np.ndarray:
        A = np.zeros((self.n_rows, self.n_unknowns), dtype=np.int64)
        for i, cols in enumerate(self.columns):
            A[i, cols] = 1
        return A

    def unknown_maps(self) -> list[MapTable]:
        return unknown_maps(self.m, self.mode)

    def residual(self, alpha: Sequence) -> list[Fraction]:
        """``A alpha - rhs`` row by row."""
        out = []
        for cols, b in zip(self.columns, self.rhs):
            out.append(sum((alpha[c] for c in cols), Fraction(0)) - (b or 0))
        return out

    def is_feasible(self) -> bool:
        """Whether the right-hand sides are consistent with the coefficient matrix."""
        if any(b is None for b in self.rhs):
            raise InputError("system was built without characteristics")
        aug = [list(map(int, row)) + [b] for row, b in zip(self.matrix(), self.rhs)]
        return linalg.rank(aug) == exact_rank(self)

    def to_text(self) -> str:
        lines = [f"# m={self.m} mode={self.mode} k={self.k} unknowns={self.n_unknowns} format={SYSTEM_FORMAT}"]
        for cols, b, prov in zip(self.columns, self.rhs, self.provenance):
            u, v = ((), ()) if prov == "normalization" else prov
            rhs = "?" if b is None else format_rational(b)
            lines.append(f"u={','.join(map(str, u))} v={','.join(map(str, v))} rhs={rhs} "
                         f"cols={','.join(map(str, cols))}")
        return "\n".join(lines) + "\n"


Characteristics = Union[Callable[[tuple, tuple], object], Mapping, None]


def characteristics_of(dist: MapDistribution) -> Callable[[tuple, tuple], Fraction]:
    """The k-point characteristics ``p_{u,v}`` of a distribution, as a callable."""
    return lambda u, v: kpoint_probability(dist, u, v)


def _lookup(characteristics: Characteristics, u: tuple, v: tuple) -> Optional[Fraction]:
    if characteristics is None:
        return None
    try:
        value = characteristics(u, v) if callable(characteristics) else characteristics[(u, v)]
    except (KeyError, IndexError):
        value = None
    if value is None:
        raise InputError(f"no characteristic value for positions {u}, values {v}")
    return as_fraction(value)


def build_constraints(m: int, k: int, characteristics: Characteristics = None,
                      mode: str = ALL_MAPS, allow_large: bool = False) -> ConstraintSystem:
    """Normalization plus one row per (position subset, value tuple) for levels 1..k.

    ``characteristics`` maps ``(u, v)`` (1-based tuples) to ``p_{u,v}`` either as
    a callable or a mapping; ``None`` leaves the right-hand sides unset, which
    is enough for rank and null-space questions.
    """
    check_space(m)
    mode = _system_mode(mode)
    if not 0 <= k <= m:
        raise DomainError(f"level k={k} outside 0..{m}")
    if mode == ALL_MAPS and m >= 6 and k >= 2 and not allow_large:
        raise ResourceError(f"all-maps system for m={m}, k={k} has {m**m} unknowns; pass allow_large=True")
    images = _unknown_images(m, mode)
    sys = ConstraintSystem(m, mode, k)
    sys.columns.append(np.arange(len(images)))
    sys.rhs.append(Fraction(1))
    sys.provenance.append("normalization")
    for j in range(1, k + 1):
        values = (itertools.permutations(range(1, m + 1), j) if mode == PERMUTATIONS
                  else itertools.product(range(1, m + 1), repeat=j))
        values = list(values)
        for u in itertools.combinations(range(1, m + 1), j):
            sub = images[:, [x - 1 for x in u]]
            for v in values:
                cols = np.flatnonzero((sub == np.array(v)).all(axis=1))
                sys.columns.append(cols)
                sys.rhs.append(_lookup(characteristics, u, v))
                sys.provenance.append((u, v))
    return sys


def exact_rank(sys: ConstraintSystem) -> int:
    return linalg.rank(sys.matrix())


def nullspace_basis(sys: ConstraintSystem) -> list[list[Fraction]]:
    """Directions in weight space that leave every prescribed characteristic unchanged."""
    return linalg.nullspace(sys.matrix(), ncols=sys.n_unknowns)


def format_nullspace(sys: ConstraintSystem, basis: Sequence[Sequence[Fraction]]) -> str:
    """One vector per line as ``map_index:coeff`` pairs (nonzero entries)."""
    keys = [f.index for f in sys.unknown_maps()]
    lines = [" ".join(f"{keys[c]}:{format_rational(x)}" for c, x in enumerate(vec) if x != 0) for vec in basis]
    return "\n".join(lines) + ("\n" if lines else "")


# -- two hand-derived families of m = 3 null vectors ------------------------

def _vector(terms, m: int = 3) -> list[int]:
    x = [0] * m**m
    for sign, images in terms:
        x[MapTable(images).index] += sign
    return x


def first_type_vector(i: int, j: int, k: int, signs: tuple = (-1, 1)) -> list[int]:
    """f_ijk - f_jjk - f_ikk - f_jki + f_jji + f_jkk - f_iji + f_iki.

    ``signs`` are the signs of the last two terms (``f_iji``, ``f_iki``).
    """
    return _vector([(1, (i, j, k)), (-1, (j, j, k)), (-1, (i, k, k)), (-1, (j, k, i)),
                    (1, (j, j, i)), (1, (j, k, k)), (signs[0], (i, j, i)), (signs[1], (i, k, i))])


def second_type_vector(i: int, j: int) -> list[int]:
    """f_iii - f_iij + f_ijj - f_iji + f_jij - f_jii + f_jji - f_jjj."""
    return _vector([(1, (i, i, i)), (-1, (i, i, j)), (1, (i, j, j)), (-1, (i, j, i)),
                    (1, (j, i, j)), (-1, (j, i, i)), (1, (j, j, i)), (-1, (j, j, j))])


@dataclass
class BasisReport:
    nullspace_dim: int
    first_members: dict          # (i, j, k) -> bool
    second_members: dict         # (i, j) -> bool
    first_sum_zero: bool
    any_five_independent: bool
    first_rank: int
    second_rank: int
    combined_rank: int
    sign_variants: list          # sign pairs for the last two terms under which all six pass

    @property
    def listed_vectors_pass(self) -> bool:
        return all(self.first_members.values()) and all(self.second_members.values())

    @property
    def spans_nullspace(self) -> bool:
        return self.combined_rank == self.nullspace_dim

    def to_dict(self) -> dict:
        def key(t):
            return "".join(map(str, t))

        return {
            "nullspace_dim": self.nullspace_dim,
            "first_type_members": {key(t): v for t, v in self.first_members.items()},
            "second_type_members": {key(t): v for t, v in self.second_members.items()},
            "first_type_sum_zero": self.first_sum_zero,
            "any_five_first_type_independent": self.any_five_independent,
            "first_type_rank": self.first_rank,
            "second_type_rank": self.second_rank,
            "combined_rank": self.combined_rank,
            "listed_vectors_pass": self.listed_vectors_pass,
            "spans_nullspace": self.spans_nullspace,
            "passing_sign_variants": [list(s) for s in self.sign_variants],
        }


def _in_nullspace(A: np.ndarray, x) -> bool:
    return not np.any(A @ np.asarray(x, dtype=np.int64))


def verify_reference_basis_m3() -> BasisReport:
    """Membership and independence checks for two known families of m = 3, k = 2 null vectors.

    The vectors are tested exactly as written. Sign variants of the last two
    terms of the first family are searched as well and every variant whose six
    vectors all lie in the null space is listed.
    """
    sys = build_constraints(3, 2)
    A = sys.matrix()
    dim = sys.n_unknowns - exact_rank(sys)
    triples = list(itertools.permutations((1, 2, 3)))
    pairs = list(itertools.permutations((1, 2, 3), 2))
    first = {t: first_type_vector(*t) for t in triples}
    second = {p: second_type_vector(*p) for p in pairs}
    first_members = {t: _in_nullspace(A, x) for t, x in first.items()}
    second_members = {p: _in_nullspace(A, x) for p, x in second.items()}
    first_sum_zero = not np.any(np.sum(list(first.values()), axis=0))
    five = all(linalg.rank([first[t] for t in subset]) == 5 for subset in itertools.combinations(triples, 5))
    variants = [s for s in itertools.product((-1, 1), repeat=2)
                if all(_in_nullspace(A, first_type_vector(*t, signs=s)) for t in triples)]
    return BasisReport(
        nullspace_dim=dim,
        first_members=first_members,
        second_members=second_members,
        first_sum_zero=first_sum_zero,
        any_five_independent=five,
        first_rank=linalg.rank(list(first.values())),
        second_rank=linalg.rank(list(second.values())),
        combined_rank=linalg.rank(list(first.values()) + list(second.values())),
        sign_variants=variants,
    )


# -- reconstruction, permutations, Birkhoff ----------------------------------

def reconstruct_from_mpoint_row(m: int, source: Sequence[int], row: Mapping) -> MapDistribution:
    """Recover the map law from the m-point transition row at an off-diagonal source.

    ``row`` maps target tuples to probabilities. Since the entries of
    ``source`` are pairwise distinct, each target fixes exactly one map.
    """
    check_space(m)
    source = tuple(source)
    if len(source) != m or sorted(source) != list(range(1, m + 1)):
        raise DomainError(f"source {source} must list {m} pairwise distinct states")
    total = sum((as_fraction(p) for p in row.values()), Fraction(0))
    if total != 1:
        raise InputError(f"row sums to {total}, not 1")
    atoms = []
    for target, p in row.items():
        target = tuple(target)
        if len(target) != m:
            raise InputError(f"target {target} is not an m-tuple")
        images = [0] * m
        for s, t in zip(source, target):
            images[s - 1] = t
        atoms.append((MapTable(tuple(images)), as_fraction(p)))
    return validate_distribution(MapDistribution(m, atoms))


def mpoint_row(dist: MapDistribution, source: Sequence[int]) -> dict:
    row: dict = {}
    for f, w in dist.atoms:
        t = apply_map(f, source)
        row[t] = row.get(t, Fraction(0)) + w
    return row


def permutation_dof_k1(m: int) -> int:
    check_space(m)
    return (m - 1) ** 2 + 1


@dataclass
class ComplementarityReport:
    u: tuple
    v: tuple
    lhs: Fraction
    rhs: Fraction

    @property
    def passed(self) -> bool:
        return self.lhs == self.rhs

    def to_dict(self) -> dict:
        return {"u": list(self.u), "v": list(self.v), "lhs": format_rational(self.lhs),
                "rhs": format_rational(self.rhs), "passed": self.passed}


def _set_transfer(dist: MapDistribution, u: tuple, v: tuple) -> Fraction:
    """Sum of ``p_{u, sigma(v)}`` over all orderings ``sigma`` of ``v``."""
    return sum((kpoint_probability(dist, u, w) for w in set(itertools.permutations(v))), Fraction(0))


def verify_complementarity(dist: MapDistribution, u: Sequence[int], v: Sequence[int]) -> ComplementarityReport:
    """For a flow of bijections, ``u`` is sent onto ``v`` exactly when the complements correspond."""
    if any(not f.is_bijection for f in dist.maps):
        raise ModeError("complementarity holds only for flows of bijections")
    m = dist.m
    u, v = tuple(sorted(set(u))), tuple(sorted(set(v)))
    if len(u) != len(v):
        raise DomainError(f"|u| = {len(u)} differs from |v| = {len(v)}")
    if not set(u) | set(v) <= set(range(1, m + 1)):
        raise DomainError(f"u and v must be subsets of 1..{m}")
    uc = tuple(x for x in range(1, m + 1) if x not in u)
    vc = tuple(x for x in range(1, m + 1) if x not in v)
    return ComplementarityReport(u, v, _set_transfer(dist, u, v), _set_transfer(dist, uc, vc))


@dataclass
class BistochasticReport:
    column_sums: list

    @property
    def passed(self) -> bool:
        return all(s == 1 for s in self.column_sums)

    def to_dict(self) -> dict:
        return {"column_sums": [format_rational(s) for s in self.column_sums], "passed": self.passed}


def onepoint_bistochastic_check(dist: MapDistribution) -> BistochasticReport:
    A = lift_transition_matrix(dist, 1)
    sums = [Fraction(0)] * dist.m
    for _, row in A.rows():
        for j, p in row.items():
            sums[j] += p
    return BistochasticReport(sums)


def permutation_matrix(f: MapTable) -> np.ndarray:
    """0/1 matrix with a 1 at ``(x, f(x))``, the 1-point matrix of the Dirac law at ``f``."""
    P = np.zeros((f.m, f.m), dtype=np.int64)
    P[np.arange(f.m), np.array(f.images) - 1] = 1
    return P


def birkhoff_decompose(B) -> list[tuple[MapTable, Fraction]]:
    """Write a doubly stochastic rational matrix as a convex combination of permutations.

    Greedy: find a perfect matching on the positive entries, subtract the
    smallest matched entry times that permutation matrix, repeat.
    """
    B = [[as_fraction(x) for x in row] for row in B]
    m = len(B)
    if m == 0 or any(len(row) != m for row in B):
        raise InputError("matrix must be square and nonempty")
    for i, row in enumerate(B):
        for j, x in enumerate(row):
            if x < 0:
                raise InputError(f"negative entry {x} at ({i + 1}, {j + 1})")
        if sum(row) != 1:
            raise InputError(f"row {i + 1} sums to {sum(row)}")
    for j in range(m):
        s = sum(B[i][j] for i in range(m))
        if s != 1:
            raise InputError(f"column {j + 1} sums to {s}")
    out = []
    remaining = Fraction(1)
    while remaining > 0:
        pattern = csr_matrix(np.array([[1 if x > 0 else 0 for x in row] for row in B], dtype=np.int8))
        match = maximum_bipartite_matching(pattern, perm_type="column")
        if np.any(match < 0):
            raise ArithmeticError("no perfect matching on a doubly stochastic pattern")
        sigma = [int(c) for c in match]
        w = min(B[i][sigma[i]] for i in range(m))
        for i in range(m):
            B[i][sigma[i]] -= w
        remaining -= w
        out.append((MapTable(tuple(c + 1 for c in sigma)), w))
    return out
