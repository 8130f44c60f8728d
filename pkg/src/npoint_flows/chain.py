"""n-point transition matrices of a flow of i.i.d. random maps.

``A^(n)[x, y]`` is the total weight of the maps sending the tuple ``x`` to the
tuple ``y`` coordinatewise. Matrices are stored row-sparse with exact
Fraction entries; the projection pair ``(P, Q)`` that deletes one coordinate
is kept as two index maps instead of dense 0/1 arrays.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Optional, Sequence

import numpy as np

from .core import (
    MapDistribution,
    apply_map,
    decode_tuple,
    digits_to_index,
    format_rational,
    parse_rational,
    tuple_digits,
)
from .errors import DomainError, InputError, ResourceError

SIZE_GUARD = 10**7
SPARSE_FORMAT = "npoint-sparse-v1"

Row = dict  # column index -> Fraction


class TransitionMatrix:
    """Row-sparse ``m^n x m^n`` matrix with exact rational entries.

    Either ``rows`` (a dict of row dicts; absent rows are zero) or ``row_fn``
    (computes a row on demand, results are cached) must be supplied.
    """

    def __init__(self, m: int, n: int, rows: Optional[dict] = None,
                 row_fn: Optional[Callable[[int], Row]] = None):
        if (rows is None) == (row_fn is None):
            raise ValueError("give exactly one of rows / row_fn")
        self.m = int(m)
        self.n = int(n)
        self._rows = {} if rows is None else rows
        self._row_fn = row_fn

    @property
    def size(self) -> int:
        return self.m**self.n

    @property
    def lazy(self) -> bool:
        return self._row_fn is not None

    def row(self, i: int) -> Row:
        if not 0 <= i < self.size:
            raise DomainError(f"row {i} outside [0, {self.size})")
        r = self._rows.get(i)
        if r is None:
            if self._row_fn is None:
                return {}
            r = self._row_fn(i)
            self._rows[i] = r
        return r

    def __getitem__(self, key) -> Fraction:
        i, j = key
        return self.row(i).get(j, Fraction(0))

    def stored_indices(self) -> list[int]:
        """Indices of rows that are materialized (all nonzero rows unless lazy)."""
        return sorted(self._rows)

    def rows(self) -> Iterator[tuple[int, Row]]:
        for i in range(self.size):
            yield i, self.row(i)

    def nnz(self) -> int:
        return sum(len(r) for _, r in self.rows())

    def row_sums(self) -> dict[int, Fraction]:
        return {i: sum(r.values(), Fraction(0)) for i, r in self.rows()}

    def is_right_stochastic(self) -> bool:
        return all(s == 1 for s in self.row_sums().values())

    def first_difference(self, other: "TransitionMatrix"):
        """First ``(row, col, self_value, other_value)`` where the two differ, else None."""
        if (self.m, self.n) != (other.m, other.n):
            raise DomainError(f"shapes differ: m={self.m} n={self.n} vs m={other.m} n={other.n}")
        for i in range(self.size):
            a, b = self.row(i), other.row(i)
            if a == b:
                continue
            for j in sorted(set(a) | set(b)):
                x, y = a.get(j, Fraction(0)), b.get(j, Fraction(0))
                if x != y:
                    return i, j, x, y
        return None

    def __eq__(self, other) -> bool:
        if not isinstance(other, TransitionMatrix):
            return NotImplemented
        if (self.m, self.n) != (other.m, other.n):
            return False
        return self.first_difference(other) is None

    __hash__ = None

    def __repr__(self) -> str:
        kind = "lazy" if self.lazy else "materialized"
        return f"TransitionMatrix(m={self.m}, n={self.n}, {kind})"

    def to_dense(self) -> np.ndarray:
        """Dense object array of Fractions (small matrices only)."""
        out = np.full((self.size, self.size), Fraction(0), dtype=object)
        for i, r in self.rows():
            for j, v in r.items():
                out[i, j] = v
        return out

    def to_float(self) -> np.ndarray:
        return self.to_dense().astype(float)

    @classmethod
    def from_dense(cls, m: int, n: int, dense) -> "TransitionMatrix":
        dense = np.asarray(dense, dtype=object)
        if dense.shape != (m**n, m**n):
            raise DomainError(f"expected a {m**n}x{m**n} matrix, got {dense.shape}")
        rows = {}
        for i in range(m**n):
            r = {j: Fraction(dense[i, j]) for j in range(m**n) if dense[i, j] != 0}
            if r:
                rows[i] = r
        return cls(m, n, rows=rows)

    @classmethod
    def identity(cls, m: int, n: int) -> "TransitionMatrix":
        return cls(m, n, rows={i: {i: Fraction(1)} for i in range(m**n)})

    # -- text format ---------------------------------------------------
    def to_text(self) -> str:
        lines = [f"# m={self.m} n={self.n} format={SPARSE_FORMAT}"]
        for i, r in self.rows():
            for j in sorted(r):
                if r[j] != 0:
                    lines.append(f"{i}\t{j}\t{format_rational(r[j])}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TransitionMatrix":
        lines = text.splitlines()
        header = _parse_header(lines[0] if lines else "")
        if header.get("format") != SPARSE_FORMAT:
            raise InputError(f"missing or wrong format header: {lines[:1]!r}")
        try:
            m, n = int(header["m"]), int(header["n"])
        except (KeyError, ValueError):
            raise InputError("header must carry integer m= and n=") from None
        rows: dict[int, Row] = {}
        for lineno, line in enumerate(lines[1:], start=2):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise InputError(f"line {lineno}: expected 3 tab-separated fields")
            try:
                i, j = int(parts[0]), int(parts[1])
            except ValueError:
                raise InputError(f"line {lineno}: non-integer index") from None
            if not (0 <= i < m**n and 0 <= j < m**n):
                raise InputError(f"line {lineno}: index out of range for m={m} n={n}")
            rows.setdefault(i, {})[j] = parse_rational(parts[2])
        return cls(m, n, rows=rows)


def _parse_header(line: str) -> dict[str, str]:
    if not line.startswith("#"):
        return {}
    out = {}
    for token in line[1:].split():
        if "=" in token:
            k, v = token.split("=", 1)
            out[k] = v
    return out


def _image_indices(dist: MapDistribution, n: int, rows: np.ndarray) -> np.ndarray:
    """Targets of the given source rows under every atom, shape ``(atoms, len(rows))``."""
    digits = tuple_digits(dist.m, n)[rows]
    images = dist.image_array()
    return np.stack([digits_to_index(dist.m, f[digits]) for f in images]) if len(images) else \
        np.zeros((0, len(rows)), dtype=np.int64)


def _accumulate(targets, weights) -> Row:
    row: Row = {}
    for t, w in zip(targets, weights):
        t = int(t)
        row[t] = row.get(t, 0) + w
    return row


def lift_transition_matrix(dist: MapDistribution, n: int, lazy: bool = False) -> TransitionMatrix:
    """Transition matrix of the n-point motion of the flow generated by ``dist``.

    With ``lazy=True`` rows are computed when first requested; otherwise the
    whole matrix is built, which is refused above ``SIZE_GUARD`` rows.
    """
    if n < 1:
        raise DomainError(f"level must be >= 1, got {n}")
    m = dist.m
    size = m**n
    weights = dist.weights
    if lazy:
        images = dist.image_array()

        def row_fn(i: int) -> Row:
            digits = np.array(decode_tuple(m, n, i), dtype=np.int64) - 1
            return _accumulate(digits_to_index(m, images[:, digits]), weights)
        return TransitionMatrix(m, n, row_fn=row_fn)
    if size > SIZE_GUARD:
        raise ResourceError(f"m^n = {size} rows exceeds the guard {SIZE_GUARD}; use lazy=True")
    targets = _image_indices(dist, n, np.arange(size)).T
    rows = {i: _accumulate(t, weights) for i, t in enumerate(targets.tolist())}
    return TransitionMatrix(m, n, rows=rows)


@dataclass(frozen=True)
class ProjectionPair:
    """Deletion of coordinate ``r`` as index maps.

    ``p_rows[y]`` is the level-n source row selected for lower tuple ``y``
    (coordinate ``r`` set to ``fixed``); ``q_cols[x]`` is the lower column that
    upper column ``x`` is summed into.
    """

    m: int
    n: int
    r: int
    fixed: int
    p_rows: np.ndarray
    q_cols: np.ndarray

    def P(self) -> np.ndarray:
        out = np.zeros((self.m ** (self.n - 1), self.m**self.n), dtype=np.int64)
        out[np.arange(len(self.p_rows)), self.p_rows] = 1
        return out

    def Q(self) -> np.ndarray:
        out = np.zeros((self.m**self.n, self.m ** (self.n - 1)), dtype=np.int64)
        out[np.arange(len(self.q_cols)), self.q_cols] = 1
        return out


def projection_matrices(m: int, n: int, r: int, fixed: int) -> ProjectionPair:
    if n < 2:
        raise DomainError(f"projection needs level n >= 2, got {n}")
    if not 1 <= r <= n:
        raise DomainError(f"coordinate r={r} outside 1..{n}")
    if not 1 <= fixed <= m:
        raise DomainError(f"fixed value {fixed} outside 1..{m}")
    lower = tuple_digits(m, n - 1)
    upper_of_lower = np.insert(lower, r - 1, fixed - 1, axis=1)
    p_rows = digits_to_index(m, upper_of_lower)
    q_cols = digits_to_index(m, np.delete(tuple_digits(m, n), r - 1, axis=1))
    return ProjectionPair(m, n, r, fixed, p_rows, q_cols)


def project_matrix(A: TransitionMatrix, pair: ProjectionPair) -> TransitionMatrix:
    """``P A Q``: the level ``n-1`` matrix read off from ``A``."""
    if (A.m, A.n) != (pair.m, pair.n):
        raise DomainError(f"matrix (m={A.m}, n={A.n}) does not match pair (m={pair.m}, n={pair.n})")
    rows = {}
    q = pair.q_cols
    for y, src in enumerate(pair.p_rows.tolist()):
        out: Row = {}
        for j, v in A.row(src).items():
            c = int(q[j])
            out[c] = out.get(c, 0) + v
        rows[y] = {c: v for c, v in out.items() if v != 0}
    return TransitionMatrix(A.m, A.n - 1, rows=rows)


@dataclass
class ConsistencyReport:
    passed: bool
    pairs_checked: int
    # (r, fixed, lower_row_tuple, lower_col_tuple, projected_value, expected_value)
    counterexample: Optional[tuple] = None

    def to_dict(self) -> dict:
        cx = None
        if self.counterexample is not None:
            r, fixed, row, col, got, want = self.counterexample
            cx = {"r": r, "fixed": fixed, "row": list(row), "col": list(col),
                  "projected": format_rational(got), "expected": format_rational(want)}
        return {"passed": self.passed, "pairs_checked": self.pairs_checked, "counterexample": cx}


def check_consistency(source, n: Optional[int] = None,
                      lower: Optional[TransitionMatrix] = None) -> ConsistencyReport:
    """Check ``P A^(n) Q == A^(n-1)`` for every choice of deleted coordinate and fixed value.

    ``source`` is either a distribution (then ``n`` is required and both levels
    are lifted) or a level-n matrix. For a bare matrix without ``lower`` the
    projection with ``r = fixed = 1`` serves as reference, so the check asks
    whether all projections agree.
    """
    if isinstance(source, MapDistribution):
        if n is None or n < 2:
            raise DomainError("a level n >= 2 is required when checking a distribution")
        A = lift_transition_matrix(source, n)
        lower = lift_transition_matrix(source, n - 1)
    else:
        A = source
        if A.n < 2:
            raise DomainError("consistency needs a matrix of level >= 2")
        if lower is None:
            lower = project_matrix(A, projection_matrices(A.m, A.n, 1, 1))
    checked = 0
    for r in range(1, A.n + 1):
        for fixed in range(1, A.m + 1):
            checked += 1
            diff = project_matrix(A, projection_matrices(A.m, A.n, r, fixed)).first_difference(lower)
            if diff is not None:
                i, j, got, want = diff
                cx = (r, fixed, decode_tuple(A.m, A.n - 1, i), decode_tuple(A.m, A.n - 1, j), got, want)
                return ConsistencyReport(False, checked, cx)
    return ConsistencyReport(True, checked)


def kpoint_probability(dist: MapDistribution, source: Sequence[int], target: Sequence[int]) -> Fraction:
    """Probability that one step of the flow moves ``source`` to ``target``."""
    if len(source) != len(target):
        raise DomainError(f"source has level {len(source)}, target level {len(target)}")
    target = tuple(target)
    return sum((w for f, w in dist.atoms if apply_map(f, source) == target), Fraction(0))


def kpoint_row(dist: MapDistribution, source: Sequence[int]) -> dict[tuple, Fraction]:
    """Row of ``A^(k)`` at ``source`` keyed by target tuples."""
    row: dict[tuple, Fraction] = {}
    for f, w in dist.atoms:
        t = apply_map(f, source)
        row[t] = row.get(t, Fraction(0)) + w
    return row


def _canonical_atoms(dist: MapDistribution):
    return sorted((f.images, w) for f, w in dist.atoms if w != 0)


def first_characteristic_divergence(a: MapDistribution, b: MapDistribution,
                                    n_max: int) -> Optional[int]:
    """Smallest level ``n <= n_max`` whose n-point transition matrices differ, or None."""
    if a.m != b.m:
        raise DomainError(f"distributions act on {a.m} and {b.m} states")
    if _canonical_atoms(a) == _canonical_atoms(b):
        return None
    for n in range(1, n_max + 1):
        lazy = a.m**n > SIZE_GUARD
        if lift_transition_matrix(a, n, lazy) != lift_transition_matrix(b, n, lazy):
            return n
    return None
