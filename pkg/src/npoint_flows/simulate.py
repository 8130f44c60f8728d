"""Monte Carlo simulation of random map compositions and their Poisson time change.

Randomness comes from numpy's counter-based Philox generator. A run is fixed by
an integer seed; independent substreams are derived with
``SeedSequence(seed, spawn_key=(stream,))`` so results do not depend on the
order in which trajectories or rows are simulated. Times and frequencies are
floats, maps stay exact integer tables.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .chain import TransitionMatrix
from .core import MapDistribution, MapTable, digits_to_index, encode_tuple, tuple_digits, validate_distribution
from .invariant import reachable_chain, recurrent_classes

TIMES_STREAM = 0
MAPS_STREAM = 1


def make_rng(seed: int, stream: int = 0) -> np.random.Generator:
    """Philox generator for substream ``stream`` of ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.Generator(np.random.Philox(ss))


def draw_atoms(dist: MapDistribution, size: int, rng: np.random.Generator) -> np.ndarray:
    """Indices into the canonical atom list of ``dist``, by inverse CDF."""
    cdf = np.cumsum([float(w) for w in dist.weights])
    u = rng.random(size) * cdf[-1]
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


def _compose_walk(images: np.ndarray, draws: np.ndarray, m: int) -> np.ndarray:
    """Running compositions ``R_n = xi_n o R_{n-1}`` as 0-based image rows."""
    out = np.empty((len(draws), m), dtype=np.int64)
    current = np.arange(m)
    for n, a in enumerate(draws):
        current = images[a][current]
        out[n] = current
    return out


def sample_discrete_walk(dist: MapDistribution, steps: int, seed: int,
                         stream: int = MAPS_STREAM) -> list[MapTable]:
    """``[R_1, ..., R_steps]`` for i.i.d. maps drawn from ``dist``."""
    dist = validate_distribution(dist)
    draws = draw_atoms(dist, steps, make_rng(seed, stream))
    walk = _compose_walk(dist.image_array(), draws, dist.m)
    return [MapTable(tuple(r)) for r in (walk + 1).tolist()]


def poisson_subordinate(rate: float, horizon: float, seed: int, stream: int = TIMES_STREAM) -> np.ndarray:
    """Jump times in ``[0, horizon]`` of a Poisson process with the given rate."""
    if rate <= 0:
        raise ValueError(f"rate must be positive, got {rate}")
    if horizon < 0:
        raise ValueError(f"horizon must be nonnegative, got {horizon}")
    rng = make_rng(seed, stream)
    times = []
    t = 0.0
    chunk = max(16, int(rate * horizon * 1.1) + 16)
    while True:
        gaps = rng.exponential(1.0 / rate, size=chunk)
        arrivals = t + np.cumsum(gaps)
        keep = arrivals[arrivals <= horizon]
        times.append(keep)
        if len(keep) < chunk:
            break
        t = float(arrivals[-1])
    return np.concatenate(times)


def embed_linear(f: MapTable) -> np.ndarray:
    """0/1 matrix sending ``e_j`` to ``e_{f(j)}``."""
    m = f.m
    K = np.zeros((m, m), dtype=np.int64)
    K[np.array(f.images) - 1, np.arange(m)] = 1
    return K


def is_orthogonal(K: np.ndarray) -> bool:
    return bool(np.array_equal(K.T @ K, np.eye(K.shape[0], dtype=K.dtype)))


@dataclass
class TrajectorySample:
    seed: int
    horizon: float
    rate: float
    m: int
    jump_times: np.ndarray
    maps: list                       # R_n after the n-th jump
    embedded: Optional[list] = None  # K(R_n) when requested

    def map_at(self, t: float) -> MapTable:
        """Right-continuous path value ``R_{pi_t}`` (identity before the first jump)."""
        n = int(np.searchsorted(self.jump_times, t, side="right"))
        if n == 0:
            return MapTable.identity(self.m)
        return self.maps[n - 1]

    def visited(self, start: Sequence[int]) -> set[tuple]:
        """Tuples visited by the n-point motion started at ``start``, including ``start``."""
        out = {tuple(start)}
        for f in self.maps:
            out.add(tuple(f.images[x - 1] for x in start))
        return out

    def to_jsonl(self) -> str:
        lines = []
        for k, (t, f) in enumerate(zip(self.jump_times.tolist(), self.maps)):
            rec = {"t": t, "map": list(f.images)}
            if self.embedded is not None:
                rec["K"] = self.embedded[k].tolist()
            lines.append(json.dumps(rec))
        return "".join(line + "\n" for line in lines)


def simulate_flow(dist: MapDistribution, rate: float, horizon: float, seed: int,
                  embed: bool = False) -> TrajectorySample:
    """Composition walk run at the jump times of an independent Poisson process."""
    dist = validate_distribution(dist)
    times = poisson_subordinate(rate, horizon, seed, TIMES_STREAM)
    maps = sample_discrete_walk(dist, len(times), seed, MAPS_STREAM)
    embedded = [embed_linear(f) for f in maps] if embed else None
    return TrajectorySample(int(seed), float(horizon), float(rate), dist.m, times, maps, embedded)


def occupation_counts(dist: MapDistribution, start: Sequence[int], steps: int, seed: int) -> dict:
    """Visit counts of the n-point motion over ``steps`` jumps (start excluded)."""
    walk = sample_discrete_walk(dist, steps, seed)
    counts: dict = {}
    for f in walk:
        t = tuple(f.images[x - 1] for x in start)
        counts[t] = counts.get(t, 0) + 1
    return counts


@dataclass
class EmpiricalEstimate:
    m: int
    n: int
    counts: dict = field(default_factory=dict)       # (source, target) index pair -> int
    sample_size: dict = field(default_factory=dict)  # source index -> int

    def estimate(self) -> dict:
        return {(i, j): c / self.sample_size[i] for (i, j), c in self.counts.items()}

    def merge(self, other: "EmpiricalEstimate") -> "EmpiricalEstimate":
        if (self.m, self.n) != (other.m, other.n):
            raise ValueError("estimates live on different spaces")
        counts = dict(self.counts)
        for key, c in other.counts.items():
            counts[key] = counts.get(key, 0) + c
        sizes = dict(self.sample_size)
        for key, c in other.sample_size.items():
            sizes[key] = sizes.get(key, 0) + c
        return EmpiricalEstimate(self.m, self.n, counts, sizes)

    def max_error(self, exact: TransitionMatrix) -> float:
        """Largest absolute deviation from ``exact`` over the sampled rows."""
        est = self.estimate()
        worst = 0.0
        for i in self.sample_size:
            row = exact.row(i)
            for j in set(row) | {j for (s, j) in est if s == i}:
                worst = max(worst, abs(est.get((i, j), 0.0) - float(row.get(j, 0))))
        return worst

    def to_text(self, steps: int, seed: int) -> str:
        lines = [f"# m={self.m} n={self.n} format=npoint-sparse-v1", f"# empirical steps={steps} seed={seed}"]
        for (i, j), v in sorted(self.estimate().items()):
            lines.append(f"{i}\t{j}\t{v!r}")
        return "\n".join(lines) + "\n"


def _default_sources(dist: MapDistribution, n: int, seed_tuple: Optional[Sequence[int]]) -> list[int]:
    if seed_tuple is None:
        return list(range(dist.m**n))
    A = reachable_chain(dist, seed_tuple)
    classes = recurrent_classes(A, states=A.stored_indices())
    return sorted(i for c in classes for i in c)


def empirical_transition_estimate(dist: MapDistribution, n: int, steps: int, seed: int,
                                  sources: Optional[Iterable] = None,
                                  seed_tuple: Optional[Sequence[int]] = None) -> EmpiricalEstimate:
    """Estimate rows of the n-point matrix from ``steps`` one-step samples per source.

    Sources are tuples or indices; by default the recurrent classes reachable
    from ``seed_tuple``, or every tuple when no seed is given. Each source uses
    its own substream (its tuple index), so the estimate does not depend on
    the order of ``sources``.
    """
    dist = validate_distribution(dist)
    m = dist.m
    if sources is None:
        src = _default_sources(dist, n, seed_tuple)
    else:
        src = sorted({s if isinstance(s, (int, np.integer)) else encode_tuple(m, s) for s in sources})
    images = dist.image_array()
    est = EmpiricalEstimate(m, n)
    for i in src:
        digits = tuple_digits(m, n)[i]
        targets = digits_to_index(m, images[:, digits])
        draws = draw_atoms(dist, steps, make_rng(seed, 2 + int(i)))
        per_atom = np.bincount(draws, minlength=len(images))
        for a, c in enumerate(per_atom.tolist()):
            if c:
                key = (int(i), int(targets[a]))
                est.counts[key] = est.counts.get(key, 0) + c
        est.sample_size[int(i)] = steps
    return est
