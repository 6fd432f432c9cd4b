"""Sampling and sparsifying operators.

All constructors return dense analysis matrices: the DFT with rows in
order of increasing absolute frequency, the orthonormal discrete Haar
basis, and the redundancy-two Haar frame built from the Haar basis and
its one-sample cyclic shift.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .errors import InvalidInputError
from .levels import LevelStructure

KINDS = ("dft", "haar_orthonormal", "haar_frame2")
_ALIASES = {
    "dft": "dft",
    "haar": "haar_orthonormal",
    "haar_orthonormal": "haar_orthonormal",
    "haar-orthonormal": "haar_orthonormal",
    "haar_frame2": "haar_frame2",
    "haar-frame2": "haar_frame2",
}


def dft_frequencies(n: int) -> np.ndarray:
    """Frequencies 0, 1, -1, 2, -2, ... until ``n`` distinct residues."""
    if n < 1:
        raise InvalidInputError("n must be positive")
    f = np.zeros(n, dtype=np.int64)
    k = np.arange(1, n)
    f[1:] = np.where(k % 2 == 1, (k + 1) // 2, -(k // 2))
    return f


def dft_matrix(n: int) -> np.ndarray:
    """Unitary DFT, ``V[j, t] = exp(-2 pi i f_j t / n) / sqrt(n)``.

    Row ``j`` carries frequency ``f_j`` from :func:`dft_frequencies`, so
    the lowest frequencies form an index prefix.
    """
    f = dft_frequencies(n)
    t = np.arange(n)
    # reduce f*t mod n before scaling to keep the phases exact
    phase = np.mod(np.outer(f, t), n) / n
    return np.exp(-2j * np.pi * phase) / np.sqrt(n)


def _check_p(p: int) -> int:
    p = int(p)
    if p < 1:
        raise InvalidInputError("p must be at least 1")
    return p


def haar_rows(p: int) -> np.ndarray:
    """Detail functions ``h_{l,k}`` stacked in order (l, k), shape (2^p - 1, 2^p)."""
    p = _check_p(p)
    N = 2 ** p
    rows = np.zeros((N - 1, N))
    i = 0
    for l in range(p):
        width = 2 ** (p - l)
        amp = 2.0 ** ((l - p) / 2)
        for k in range(2 ** l):
            start = k * width
            rows[i, start:start + width // 2] = amp
            rows[i, start + width // 2:start + width] = -amp
            i += 1
    return rows


def haar_orthobasis(p: int) -> np.ndarray:
    """Orthonormal discrete Haar analysis matrix of size 2^p.

    Row 0 is the scaling vector ``2^{-p/2}(1, ..., 1)``; the remaining rows
    are the details ``h_{l,k}`` ordered by scale ``l`` then shift ``k``.
    """
    p = _check_p(p)
    N = 2 ** p
    return np.vstack([np.full((1, N), 2.0 ** (-p / 2)), haar_rows(p)])


def haar_frame_redundant(p: int) -> np.ndarray:
    """Redundancy-two Haar frame, a (2^{p+1}, 2^p) Parseval analysis matrix.

    Each basis row ``b`` is followed by its cyclic shift ``roll(b, 1)``
    (so the shift of ``b`` at position 1 equals ``b`` at position N), and
    every row is scaled by ``2^{-1/2}``.
    """
    H = haar_orthobasis(p)
    N = H.shape[1]
    D = np.empty((2 * N, N))
    D[0::2] = H
    D[1::2] = np.roll(H, 1, axis=1)
    return D / np.sqrt(2.0)


@dataclass(frozen=True)
class WaveletLevelMap:
    """Level boundaries over wavelet coefficient indices.

    In basis mode level 1 holds the scaling coefficient and the coarsest
    detail, and level ``l + 1`` holds scale ``l``. In frame mode every
    index is doubled because coefficients come in interleaved pairs.
    """

    p: int
    frame: bool
    boundaries: Tuple[int, ...]

    @property
    def levels(self) -> LevelStructure:
        return LevelStructure(self.boundaries)

    @property
    def r(self) -> int:
        return len(self.boundaries)


def wavelet_levels(p: int, frame: bool = False, separate_scaling: bool = False) -> WaveletLevelMap:
    """Dyadic level map for Haar coefficients.

    Parameters
    ----------
    p : int
        Log-dimension, ``N = 2^p``.
    frame : bool
        Use the 2N-row frame indexing (all boundaries doubled).
    separate_scaling : bool
        Put the scaling coefficient(s) in their own first level, giving
        ``p + 1`` levels instead of ``p``.
    """
    p = _check_p(p)
    b = [2 ** k for k in range(1, p + 1)]
    if separate_scaling:
        b = [1] + b
    if frame:
        b = [2 * v for v in b]
    return WaveletLevelMap(p=p, frame=bool(frame), boundaries=tuple(b))


@dataclass(frozen=True)
class FrameSpec:
    """Names one of the supported operators at size ``2^p``."""

    kind: str
    p: int
    ordering: str = "default"

    def __post_init__(self):
        object.__setattr__(self, "kind", canonical_kind(self.kind))
        object.__setattr__(self, "p", _check_p(self.p))

    @property
    def n(self) -> int:
        return 2 ** self.p

    @property
    def rows(self) -> int:
        return 2 * self.n if self.kind == "haar_frame2" else self.n

    def matrix(self) -> np.ndarray:
        return build_transform(self.kind, self.p)


def canonical_kind(kind: str) -> str:
    try:
        return _ALIASES[kind.lower()]
    except KeyError:
        raise InvalidInputError(f"unknown transform kind {kind!r}") from None


def build_transform(kind: str, p: int) -> np.ndarray:
    """Build the operator named by `kind` at size ``2^p``."""
    kind = canonical_kind(kind)
    if kind == "dft":
        return dft_matrix(2 ** _check_p(p))
    if kind == "haar_orthonormal":
        return haar_orthobasis(p)
    return haar_frame_redundant(p)


def frame_levels_for(kind: str, p: int, separate_scaling: bool = False) -> WaveletLevelMap:
    """Wavelet level map matching the row layout of `kind`."""
    return wavelet_levels(p, frame=canonical_kind(kind) == "haar_frame2",
                          separate_scaling=separate_scaling)
