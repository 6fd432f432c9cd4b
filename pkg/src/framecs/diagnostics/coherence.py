"""Coherence, local coherence and block norms of ``U = V D*``."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ..errors import InvalidInputError
from ..levels import LevelStructure, as_levels
from ..linop import as_operator


def coherence(U, check: bool = True) -> float:
    """Largest entry modulus ``max |U_kj|``.

    The definition assumes unit-norm columns; a warning is issued when
    that premise fails by more than 1e-8.
    """
    U = as_operator(U, "U")
    if check:
        norms = np.linalg.norm(U, axis=0)
        if np.any(np.abs(norms - 1) > 1e-8):
            warnings.warn("coherence: columns of U are not unit-normalized", stacklevel=2)
    return float(np.abs(U).max())


@dataclass(frozen=True)
class LocalCoherenceMatrix:
    """Local coherences ``mu[k, l]`` for sampling level k and sparsity level l.

    ``truncated`` records that the last sparsity level was cut at the
    column count of ``V D*``.
    """

    mu: np.ndarray
    sampling_levels: LevelStructure
    sparsity_levels: LevelStructure
    row_coherence: np.ndarray
    truncated: bool = True


def _check_levels(V, D, Mlevels, Nlevels):
    V = as_operator(V, "V")
    D = as_operator(D, "D")
    if V.shape[1] != D.shape[1]:
        raise InvalidInputError("V and D must share the input dimension")
    M = as_levels(Mlevels)
    if M.total > V.shape[0]:
        raise InvalidInputError("sampling levels exceed the rows of V")
    N = as_levels(Nlevels)
    if N.r > 1 and N.boundaries[-2] >= D.shape[0]:
        raise InvalidInputError("sparsity levels exceed the rows of D")
    N = LevelStructure(N.boundaries[:-1] + (D.shape[0],)) if N.total != D.shape[0] else N
    return V, D, M, N


def local_coherence(V, D, Mlevels, Nlevels) -> LocalCoherenceMatrix:
    """``mu(k, l) = sqrt(max|P_Γk V D* P_Λl| * max|P_Γk V D*|)`` by dense block scan.

    The last sparsity level always runs to the last row of `D`.
    """
    V, D, M, N = _check_levels(V, D, Mlevels, Nlevels)
    U = np.abs(V[:M.total] @ D.conj().T)
    blocks = np.zeros((M.r, N.r))
    for k, rs in enumerate(M.slices()):
        for l, cs in enumerate(N.slices()):
            blocks[k, l] = U[rs, cs].max()
    rowmax = blocks.max(axis=1)
    return LocalCoherenceMatrix(np.sqrt(blocks * rowmax[:, None]), M, N, rowmax)


@dataclass(frozen=True)
class BlockNorms:
    """Spectral norms ``omega[k, l] = ‖P_Γk V D* P_Λl‖`` and their sums.

    ``C`` is the larger of the maximal row sum and maximal column sum.
    """

    omega: np.ndarray
    row_sums: np.ndarray
    col_sums: np.ndarray
    C: float


def block_norms(V, D, Mlevels, Nlevels) -> BlockNorms:
    V, D, M, N = _check_levels(V, D, Mlevels, Nlevels)
    U = V[:M.total] @ D.conj().T
    om = np.zeros((M.r, N.r))
    for k, rs in enumerate(M.slices()):
        for l, cs in enumerate(N.slices()):
            om[k, l] = np.linalg.norm(U[rs, cs], 2)
    rows = om.sum(axis=1)
    cols = om.sum(axis=0)
    return BlockNorms(om, rows, cols, float(max(rows.max(), cols.max())))
