"""Level structures: strictly increasing boundaries with per-level counts.

The same type describes sampling levels ``(M, m)`` and sparsity levels
``(N, s)``. Level ``k`` (1-based) is the stratum ``(M_{k-1}, M_k]`` with
``M_0 = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidCountsError, InvalidInputError


def check_boundaries(boundaries: Sequence[int]) -> Tuple[int, ...]:
    b = tuple(int(v) for v in boundaries)
    if not b:
        raise InvalidInputError("at least one level boundary is required")
    if b[0] < 1 or any(y <= x for x, y in zip(b, b[1:])):
        raise InvalidInputError("level boundaries must be positive and strictly increasing")
    return b


@dataclass(frozen=True)
class LevelStructure:
    """Boundaries ``M_1 < ... < M_r`` and counts ``m_1, ..., m_r``."""

    boundaries: Tuple[int, ...]
    counts: Optional[Tuple[int, ...]] = None

    def __post_init__(self):
        b = check_boundaries(self.boundaries)
        object.__setattr__(self, "boundaries", b)
        if self.counts is not None:
            c = tuple(int(v) for v in self.counts)
            if len(c) != len(b):
                raise InvalidInputError("counts and boundaries differ in length")
            sizes = self.sizes
            for k, (mk, sk) in enumerate(zip(c, sizes)):
                if mk < 0 or mk > sk:
                    raise InvalidCountsError(
                        f"level {k + 1}: count {mk} does not fit stratum of size {sk}")
            object.__setattr__(self, "counts", c)

    @property
    def r(self) -> int:
        return len(self.boundaries)

    @property
    def sizes(self) -> Tuple[int, ...]:
        """Stratum sizes ``M_k - M_{k-1}``."""
        lo = (0,) + self.boundaries[:-1]
        return tuple(h - l for l, h in zip(lo, self.boundaries))

    @property
    def total(self) -> int:
        return self.boundaries[-1]

    def slices(self):
        """0-based slices of each stratum."""
        lo = (0,) + self.boundaries[:-1]
        return [slice(l, h) for l, h in zip(lo, self.boundaries)]

    def indices(self, k: int) -> np.ndarray:
        """1-based indices of level ``k`` (1-based)."""
        lo = 0 if k == 1 else self.boundaries[k - 2]
        return np.arange(lo + 1, self.boundaries[k - 1] + 1)

    def labels(self) -> np.ndarray:
        """0-based level label for every 0-based position up to ``M_r``."""
        return np.repeat(np.arange(self.r), self.sizes)

    def extended_to(self, dim: int) -> "LevelStructure":
        """Stretch the last level so the structure covers ``1..dim``."""
        if dim < self.boundaries[-1]:
            raise InvalidInputError("cannot shrink a level structure")
        if dim == self.boundaries[-1]:
            return self
        b = self.boundaries[:-1] + (dim,)
        return LevelStructure(b, self.counts)


def as_levels(obj, dim: Optional[int] = None) -> LevelStructure:
    """Accept a LevelStructure, a WaveletLevelMap or a boundary sequence.

    If `dim` is given, the last level is extended to end at `dim`.
    """
    if isinstance(obj, LevelStructure):
        lev = obj
    elif hasattr(obj, "boundaries"):
        lev = LevelStructure(tuple(obj.boundaries))
    else:
        lev = LevelStructure(tuple(obj))
    if dim is not None:
        lev = lev.extended_to(dim)
    return lev
