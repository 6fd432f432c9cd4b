"""Row-index sampling schemes for subsampled measurements.

Every scheme stores 1-based row indices. Random draws derive one
independent stream per level from the root seed, so a level's draw
never depends on how many numbers another level consumed.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import DivisionGuardError, InvalidBudgetError, InvalidInputError
from .levels import LevelStructure

SCHEME_KINDS = ("multilevel", "bernoulli", "half_half", "uniform", "lowest")


def level_rng(seed: int, k: int, stream: int = 0) -> np.random.Generator:
    """Generator for level `k` under root `seed`, independent across levels."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(k)))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class SamplingScheme:
    """A sampled row set Ω with its per-level partition.

    Attributes
    ----------
    levels : LevelStructure
        Boundaries and nominal counts ``m_k``.
    omega : ndarray
        Sorted 1-based indices.
    subsets : tuple of ndarray
        ``Ω_k`` for each level, 1-based.
    densities : ndarray
        Nominal ``q_k = m_k / (M_k - M_{k-1})``.
    kind : str
    seed : int or None
    realized_counts : tuple of int
        ``|Ω_k|``; differs from the nominal counts for Bernoulli draws.
    """

    levels: LevelStructure
    omega: np.ndarray
    subsets: Tuple[np.ndarray, ...]
    densities: np.ndarray
    kind: str
    seed: Optional[int] = None
    realized_counts: Tuple[int, ...] = field(default=())

    @property
    def ambient(self) -> int:
        return self.levels.total

    @property
    def positions(self) -> np.ndarray:
        """0-based row positions of Ω."""
        return self.omega - 1

    def mask(self, dim: Optional[int] = None) -> np.ndarray:
        m = np.zeros(dim or self.ambient, dtype=bool)
        m[self.positions] = True
        return m

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "boundaries": list(self.levels.boundaries),
            "counts": list(self.levels.counts or ()),
            "realized_counts": list(self.realized_counts),
            "densities": [float(q) for q in self.densities],
            "seed": self.seed,
            "indices": [int(i) for i in self.omega],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SamplingScheme":
        b = tuple(obj["boundaries"])
        omega = np.asarray(obj["indices"], dtype=np.int64)
        counts = tuple(obj.get("counts") or ())
        subsets = _split(omega, b)
        realized = tuple(len(s) for s in subsets)
        if not counts:
            counts = realized
        lev = LevelStructure(b, counts)
        dens = obj.get("densities")
        if dens is None:
            dens = [c / s for c, s in zip(lev.counts, lev.sizes)]
        return cls(lev, omega, subsets, np.asarray(dens, float), obj["kind"],
                   obj.get("seed"), realized)


def _split(omega: np.ndarray, boundaries: Sequence[int]) -> Tuple[np.ndarray, ...]:
    lo = 0
    out = []
    for hi in boundaries:
        out.append(omega[(omega > lo) & (omega <= hi)])
        lo = hi
    return tuple(out)


def _finish(levels: LevelStructure, subsets, kind: str, seed, densities=None) -> SamplingScheme:
    subsets = tuple(np.sort(np.asarray(s, dtype=np.int64)) for s in subsets)
    omega = np.concatenate(subsets) if subsets else np.zeros(0, np.int64)
    if densities is None:
        densities = np.array([c / s for c, s in zip(levels.counts, levels.sizes)])
    return SamplingScheme(levels, omega, subsets, np.asarray(densities, float), kind,
                          None if seed is None else int(seed),
                          tuple(len(s) for s in subsets))


def multilevel_scheme(levels: LevelStructure, seed: int) -> SamplingScheme:
    """Draw ``m_k`` indices uniformly without replacement from each stratum."""
    if levels.counts is None:
        raise InvalidInputError("multilevel scheme needs per-level counts")
    subsets = []
    lo = 0
    for k, (hi, mk) in enumerate(zip(levels.boundaries, levels.counts)):
        size = hi - lo
        if mk == size:
            pick = np.arange(size)
        else:
            pick = level_rng(seed, k).choice(size, size=mk, replace=False)
        subsets.append(lo + 1 + pick)
        lo = hi
    return _finish(levels, subsets, "multilevel", seed)


def bernoulli_scheme(levels: LevelStructure, seed: int,
                     densities: Optional[Sequence[float]] = None,
                     stream: int = 0) -> SamplingScheme:
    """Include each index of stratum k independently with probability ``q_k``.

    ``q_k`` defaults to ``m_k / (M_k - M_{k-1})`` from the nominal counts;
    pass `densities` to set it directly. The nominal counts stay in
    ``levels`` and the realized ones in ``realized_counts``.
    """
    sizes = levels.sizes
    if densities is None:
        if levels.counts is None:
            raise InvalidInputError("bernoulli scheme needs counts or densities")
        q = np.array([c / s for c, s in zip(levels.counts, sizes)])
    else:
        q = np.asarray(densities, dtype=float)
        if q.shape != (levels.r,) or np.any(q < 0) or np.any(q > 1):
            raise InvalidInputError("densities must lie in [0, 1], one per level")
        if levels.counts is None:
            levels = LevelStructure(levels.boundaries,
                                    tuple(int(round(qk * s)) for qk, s in zip(q, sizes)))
    subsets = []
    lo = 0
    for k, (hi, qk) in enumerate(zip(levels.boundaries, q)):
        size = hi - lo
        if qk >= 1:
            keep = np.ones(size, dtype=bool)
        elif qk <= 0:
            keep = np.zeros(size, dtype=bool)
        else:
            keep = level_rng(seed, k, stream).random(size) < qk
        subsets.append(lo + 1 + np.flatnonzero(keep))
        lo = hi
    return _finish(levels, subsets, "bernoulli", seed, q)


def named_scheme(kind: str, total_budget: int, ambient: int, seed: Optional[int] = None,
                 n_low: Optional[int] = None) -> SamplingScheme:
    """Fixed-budget schemes over ``1..ambient``.

    ``half_half``: the prefix ``1..n_low`` plus ``budget - n_low`` uniform
    draws from the rest. ``uniform``: ``budget`` uniform draws from all
    rows. ``lowest``: the prefix ``1..budget``.
    """
    if total_budget < 0 or total_budget > ambient:
        raise InvalidBudgetError(f"budget {total_budget} not in 0..{ambient}")
    seed = 0 if seed is None else int(seed)
    if kind == "half_half":
        if n_low is None or n_low < 0 or n_low > total_budget:
            raise InvalidInputError("half_half needs 0 <= n_low <= budget")
        if n_low == ambient:
            lev = LevelStructure((ambient,), (ambient,))
            return _finish(lev, [np.arange(1, ambient + 1)], kind, seed)
        if n_low == 0:
            lev = LevelStructure((ambient,), (total_budget,))
            pick = level_rng(seed, 1).choice(ambient, size=total_budget, replace=False)
            return _finish(lev, [1 + pick], kind, seed)
        lev = LevelStructure((n_low, ambient), (n_low, total_budget - n_low))
        rest = level_rng(seed, 1).choice(ambient - n_low, size=total_budget - n_low,
                                         replace=False)
        return _finish(lev, [np.arange(1, n_low + 1), n_low + 1 + rest], kind, seed)
    if kind == "uniform":
        lev = LevelStructure((ambient,), (total_budget,))
        pick = level_rng(seed, 1).choice(ambient, size=total_budget, replace=False)
        return _finish(lev, [1 + pick], kind, seed)
    if kind == "lowest":
        if total_budget in (0, ambient):
            lev = LevelStructure((ambient,), (total_budget,))
            return _finish(lev, [np.arange(1, total_budget + 1)], kind, seed)
        lev = LevelStructure((total_budget, ambient), (total_budget, 0))
        return _finish(lev, [np.arange(1, total_budget + 1), np.zeros(0, np.int64)],
                       kind, seed)
    raise InvalidInputError(f"unknown scheme kind {kind!r}")


def density_summary(scheme: SamplingScheme):
    """Per-level densities with their minimum and the inverse-density maximum.

    Returns
    -------
    q : ndarray
        ``q_k = m_k / (M_k - M_{k-1})`` from the nominal counts.
    q_min : float
    q_inv : float
        ``max_k (M_k - M_{k-1}) / m_k``.
    """
    counts = scheme.levels.counts
    sizes = scheme.levels.sizes
    if any(c == 0 for c in counts):
        raise DivisionGuardError("a level has no samples; its density is zero")
    q = np.array([c / s for c, s in zip(counts, sizes)], dtype=float)
    q_inv = max(s / c for c, s in zip(counts, sizes))
    return q, float(q.min()), float(q_inv)


def full_scheme(ambient: int, boundaries: Optional[Sequence[int]] = None) -> SamplingScheme:
    """Every row sampled, optionally split into the given levels."""
    b = tuple(boundaries) if boundaries is not None else (ambient,)
    lev = LevelStructure(b, LevelStructure(b).sizes)
    return multilevel_scheme(lev, 0)
