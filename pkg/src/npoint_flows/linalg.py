"""Exact linear algebra over the rationals by fraction-free elimination.

Rows are scaled to integers up front; every elimination step replaces
``row_i`` by ``pivot * row_i - a_ic * pivot_row`` and divides the result by the
gcd of its entries. Work is done in int64 while a bound on the next step's
magnitudes stays below 2**62, then in Python integers (object arrays).
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Sequence

import numpy as np

_SAFE = 2**62


def _integer_rows(M) -> np.ndarray:
    rows = [list(r) for r in M]
    out = []
    for r in rows:
        if any(isinstance(x, Fraction) and x.denominator != 1 for x in r):
            den = lcm(*(Fraction(x).denominator for x in r))
            r = [int(Fraction(x) * den) for x in r]
        else:
            r = [int(x) for x in r]
        out.append(r)
    width = len(out[0]) if out else 0
    peak = max((abs(x) for r in out for x in r), default=0)
    dtype = np.int64 if peak < 2**31 else object
    return np.array(out, dtype=dtype).reshape(len(out), width)


def _maxabs(a: np.ndarray) -> int:
    return int(np.max(np.abs(a))) if a.size else 0


def _normalize(A: np.ndarray, idx: np.ndarray) -> None:
    g = np.gcd.reduce(A[idx], axis=1)
    g[g == 0] = 1
    A[idx] = A[idx] // g[:, None]


def row_reduce(M, reduced: bool = False) -> tuple[np.ndarray, list[int]]:
    """Integer row echelon form of ``M`` and its pivot columns.

    Pivots are chosen column by column, taking the first row at or below the
    current one with a nonzero entry. With ``reduced=True`` entries above each
    pivot are cleared too (a scaled reduced echelon form). Returned rows are the
    nonzero ones only.
    """
    A = _integer_rows(M)
    nrows, ncols = A.shape
    if nrows:
        _normalize(A, np.arange(nrows))
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        if r == nrows:
            break
        nz = np.flatnonzero(A[r:, c])
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            A[[r, p]] = A[[p, r]]
        piv = A[r, c]
        col = A[:, c]
        if reduced:
            targets = np.flatnonzero(col)
            targets = targets[targets != r]
        else:
            targets = r + 1 + np.flatnonzero(col[r + 1:])
        if targets.size:
            coeff = A[targets, c]
            if A.dtype != object:
                bound = abs(int(piv)) * _maxabs(A[targets]) + _maxabs(coeff) * _maxabs(A[r])
                if bound >= _SAFE:
                    A = A.astype(object)
                    coeff = A[targets, c]
                    piv = A[r, c]
            A[targets] = piv * A[targets] - coeff[:, None] * A[r]
            _normalize(A, targets)
        pivots.append(c)
        r += 1
    return A[:r], pivots


def rank(M) -> int:
    if len(M) == 0:
        return 0
    return len(row_reduce(M)[1])


def nullspace(M, ncols: int | None = None) -> list[list[Fraction]]:
    """Basis of ``{x : M x = 0}``; one vector per free column, with a 1 there."""
    if len(M) == 0:
        if ncols is None:
            raise ValueError("ncols is required for an empty matrix")
        return [[Fraction(int(i == j)) for j in range(ncols)] for i in range(ncols)]
    R, pivots = row_reduce(M, reduced=True)
    ncols = R.shape[1] if ncols is None else ncols
    pivot_set = set(pivots)
    basis = []
    for f in range(ncols):
        if f in pivot_set:
            continue
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for i, pc in enumerate(pivots):
            if R[i, f] != 0:
                v[pc] = -Fraction(int(R[i, f]), int(R[i, pc]))
        basis.append(v)
    return basis


class SingularSystemError(ArithmeticError):
    pass


def solve_unique(M, b: Sequence) -> list[Fraction]:
    """Unique exact solution of ``M x = b``; raises if none or not unique."""
    aug = [list(row) + [Fraction(v)] for row, v in zip(M, b)]
    ncols = len(aug[0]) - 1
    R, pivots = row_reduce(aug, reduced=True)
    if ncols in pivots:
        raise SingularSystemError("inconsistent system")
    if len(pivots) != ncols:
        raise SingularSystemError(f"solution not unique: rank {len(pivots)} < {ncols}")
    return [Fraction(int(R[i, ncols]), int(R[i, pc])) for i, pc in enumerate(pivots)]


def matvec(M, x: Sequence) -> list:
    return [sum((a * v for a, v in zip(row, x) if a), Fraction(0)) for row in M]
