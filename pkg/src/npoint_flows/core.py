"""Finite state spaces, point tuples, self-maps and distributions over maps.

States are 1-based at every public interface. A tuple ``(x_1, ..., x_n)`` over
``M = {1..m}`` is indexed lexicographically,

    index = sum_j (x_j - 1) * m**(n - j),

and a self-map is keyed by the index of its image tuple (the same codec with
``n = m``).
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DomainError, InputError, ModeError, NormalizationError

ALL_MAPS = "all-maps"
BIJECTIONS = "bijections-only"
MODES = (ALL_MAPS, BIJECTIONS)

_RATIONAL_RE = re.compile(r"^\s*[+-]?\d+(\s*/\s*\d+)?\s*$")


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"`` or ``"p"`` into a Fraction; decimals are rejected."""
    if isinstance(text, Fraction):
        return text
    if isinstance(text, int) and not isinstance(text, bool):
        return Fraction(text)
    if not isinstance(text, str) or not _RATIONAL_RE.match(text):
        raise InputError(f"not a rational string of the form 'p/q' or 'p': {text!r}")
    try:
        return Fraction(text.replace(" ", ""))
    except ZeroDivisionError:
        raise InputError(f"zero denominator in {text!r}") from None


def format_rational(q) -> str:
    return str(Fraction(q))


def as_fraction(q) -> Fraction:
    if isinstance(q, str):
        return parse_rational(q)
    if isinstance(q, float):
        raise InputError(f"floating point value {q!r} where an exact rational is required")
    return Fraction(q)


def check_space(m: int) -> int:
    if not isinstance(m, (int, np.integer)) or m < 2:
        raise DomainError(f"state space size must be an integer >= 2, got {m!r}")
    return int(m)


def encode_tuple(m: int, t: Sequence[int]) -> int:
    """Lexicographic index of the tuple ``t`` over ``{1..m}``."""
    idx = 0
    for pos, x in enumerate(t, start=1):
        if not 1 <= x <= m:
            raise DomainError(f"entry {x!r} at position {pos} is outside 1..{m}")
        idx = idx * m + (int(x) - 1)
    return idx


def decode_tuple(m: int, n: int, idx: int) -> tuple[int, ...]:
    if n < 0:
        raise DomainError(f"level must be nonnegative, got {n}")
    if not 0 <= idx < m**n:
        raise DomainError(f"index {idx} outside [0, {m}^{n})")
    out = [0] * n
    for j in range(n - 1, -1, -1):
        idx, d = divmod(idx, m)
        out[j] = d + 1
    return tuple(out)


@lru_cache(maxsize=32)
def tuple_digits(m: int, n: int) -> np.ndarray:
    """All tuples of ``M^n`` as 0-based digits, shape ``(m**n, n)``, lexicographic order.

    The returned array is shared; do not modify it.
    """
    if n == 0:
        arr = np.zeros((1, 0), dtype=np.int64)
    else:
        grids = np.indices((m,) * n).reshape(n, -1).T
        arr = np.ascontiguousarray(grids, dtype=np.int64)
    arr.setflags(write=False)
    return arr


def digits_to_index(m: int, digits: np.ndarray) -> np.ndarray:
    """Vectorized inverse of :func:`tuple_digits` along the last axis."""
    n = digits.shape[-1]
    weights = m ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return digits @ weights


@dataclass(frozen=True, order=True)
class MapTable:
    """A self-map of ``{1..m}`` given by its image tuple ``(f(1), ..., f(m))``."""

    images: tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(x) for x in self.images)
        object.__setattr__(self, "images", images)
        m = len(images)
        if m == 0:
            raise DomainError("a map needs at least one image")
        for j, x in enumerate(images, start=1):
            if not 1 <= x <= m:
                raise DomainError(f"image {x} of state {j} is outside 1..{m}")

    @property
    def m(self) -> int:
        return len(self.images)

    @property
    def index(self) -> int:
        return encode_tuple(self.m, self.images)

    @property
    def is_bijection(self) -> bool:
        return sorted(self.images) == list(range(1, self.m + 1))

    def __call__(self, x: int) -> int:
        return self.images[x - 1]

    def __str__(self) -> str:
        sep = "" if self.m < 10 else ","
        return "f_" + sep.join(str(x) for x in self.images)

    @classmethod
    def identity(cls, m: int) -> "MapTable":
        return cls(tuple(range(1, m + 1)))

    @classmethod
    def constant(cls, m: int, value: int) -> "MapTable":
        return cls((value,) * m)

    @classmethod
    def from_index(cls, m: int, idx: int) -> "MapTable":
        return cls(decode_tuple(m, m, idx))


def _as_map(f) -> MapTable:
    return f if isinstance(f, MapTable) else MapTable(tuple(f))


def apply_map(f: MapTable, t: Sequence[int]) -> tuple[int, ...]:
    """Diagonal action ``(x_1..x_n) -> (f(x_1)..f(x_n))``."""
    f = _as_map(f)
    m = f.m
    for pos, x in enumerate(t, start=1):
        if not 1 <= x <= m:
            raise DomainError(f"entry {x!r} at position {pos} is outside 1..{m}")
    return tuple(f.images[x - 1] for x in t)


def compose(f: MapTable, g: MapTable) -> MapTable:
    """Return ``f o g``, i.e. ``j -> f(g(j))``."""
    f, g = _as_map(f), _as_map(g)
    if f.m != g.m:
        raise DomainError(f"cannot compose maps on {f.m} and {g.m} states")
    return MapTable(tuple(f.images[x - 1] for x in g.images))


@dataclass(frozen=True)
class MapDistribution:
    """Finitely supported probability law on self-maps of ``{1..m}``.

    ``atoms`` may be given as a mapping or as ``(map, weight)`` pairs; maps may
    be :class:`MapTable` or image tuples, weights anything :class:`Fraction`
    accepts (strings in ``p/q`` form included). Repeated maps are merged.
    Construction does not check normalization; use :func:`validate_distribution`.
    """

    m: int
    atoms: tuple[tuple[MapTable, Fraction], ...]
    mode: str = ALL_MAPS

    def __post_init__(self):
        raw = self.atoms.items() if isinstance(self.atoms, Mapping) else self.atoms
        merged: dict[MapTable, Fraction] = {}
        for f, w in raw:
            f = _as_map(f)
            merged[f] = merged.get(f, Fraction(0)) + as_fraction(w)
        object.__setattr__(self, "atoms", tuple(merged.items()))
        object.__setattr__(self, "m", int(self.m))

    @property
    def maps(self) -> list[MapTable]:
        return [f for f, _ in self.atoms]

    @property
    def weights(self) -> list[Fraction]:
        return [w for _, w in self.atoms]

    def weight(self, f) -> Fraction:
        f = _as_map(f)
        for g, w in self.atoms:
            if g == f:
                return w
        return Fraction(0)

    def total(self) -> Fraction:
        return sum(self.weights, Fraction(0))

    def image_array(self) -> np.ndarray:
        """0-based image table, shape ``(len(atoms), m)``."""
        if not self.atoms:
            return np.zeros((0, self.m), dtype=np.int64)
        return np.array([f.images for f in self.maps], dtype=np.int64) - 1

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "mode": self.mode,
            "atoms": [{"map": list(f.images), "weight": format_rational(w)} for f, w in self.atoms],
        }

    def to_json(self) -> str:
        """Canonical JSON text (validated form, atoms in map-index order)."""
        return json.dumps(validate_distribution(self).to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: Mapping) -> "MapDistribution":
        try:
            m = data["m"]
            mode = data.get("mode", ALL_MAPS)
            atoms = [(tuple(a["map"]), parse_rational(a["weight"])) for a in data["atoms"]]
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed distribution document: {exc!r}") from None
        if not isinstance(m, int) or isinstance(m, bool):
            raise InputError(f"'m' must be an integer, got {m!r}")
        if mode not in MODES:
            raise InputError(f"unknown mode {mode!r}; expected one of {MODES}")
        for f, _ in atoms:
            if len(f) != m:
                raise InputError(f"map {list(f)} does not have {m} entries")
        return cls(m, atoms, mode)

    @classmethod
    def from_json(cls, text: str) -> "MapDistribution":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InputError(f"invalid JSON: {exc}") from None
        return cls.from_dict(data)


def dirac(f, mode: str = ALL_MAPS) -> MapDistribution:
    f = _as_map(f)
    return MapDistribution(f.m, [(f, Fraction(1))], mode)


def validate_distribution(dist: MapDistribution) -> MapDistribution:
    """Check a distribution and return its canonical form.

    The canonical form drops zero-weight atoms and sorts atoms by map index.
    Raises :class:`DomainError` on negative weights or wrong map sizes,
    :class:`ModeError` on a non-bijection in bijections-only mode, and
    :class:`NormalizationError` (carrying the exact defect) if the weights do
    not sum to one.
    """
    m = check_space(dist.m)
    if dist.mode not in MODES:
        raise DomainError(f"unknown mode {dist.mode!r}")
    for f, w in dist.atoms:
        if f.m != m:
            raise DomainError(f"map {f} acts on {f.m} states, expected {m}")
        if w < 0:
            raise DomainError(f"negative weight {w} on {f}")
        if dist.mode == BIJECTIONS and not f.is_bijection:
            raise ModeError(f"{f} is not a bijection but mode is {BIJECTIONS}")
    total = dist.total()
    if total != 1:
        defect = 1 - total
        raise NormalizationError(f"weights sum to {total}, defect {defect}", defect)
    atoms = sorted(((f, w) for f, w in dist.atoms if w != 0), key=lambda a: a[0].index)
    return MapDistribution(m, tuple(atoms), dist.mode)


def iter_maps(m: int, mode: str = ALL_MAPS) -> Iterable[MapTable]:
    """All self-maps (or bijections) of ``{1..m}`` in lexicographic order."""
    if mode == BIJECTIONS:
        for p in itertools.permutations(range(1, m + 1)):
            yield MapTable(p)
    else:
        for t in itertools.product(range(1, m + 1), repeat=m):
            yield MapTable(t)
