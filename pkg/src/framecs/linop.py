"""Dense complex linear algebra kernel.

Vectors are 1-D numpy arrays and operators are 2-D numpy arrays. Index
sets exchanged with callers are 1-based, sorted and unique; they are
converted to 0-based positions internally.
"""
from __future__ import annotations

import math
from typing import Optional, Sequence, Union

import numpy as np

from .errors import (InvalidIndexError, InvalidInputError, UnsupportedNormError,
                     ZeroRangeError)

IndexLike = Union[Sequence[int], np.ndarray]

_NORM_TAGS = {1: 1, 2: 2, np.inf: np.inf, "1": 1, "2": 2, "inf": np.inf, "∞": np.inf}


def as_signal(x, name: str = "x") -> np.ndarray:
    """Return `x` as a 1-D array after checking it is nonempty and finite."""
    x = np.asarray(x)
    if x.ndim != 1 or x.size == 0:
        raise InvalidInputError(f"{name} must be a nonempty 1-D vector")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return x


def as_operator(A, name: str = "A") -> np.ndarray:
    """Return `A` as a 2-D array after checking it is nonempty and finite."""
    A = np.asarray(A)
    if A.ndim != 2 or A.size == 0:
        raise InvalidInputError(f"{name} must be a nonempty 2-D matrix")
    if not np.all(np.isfinite(A)):
        raise InvalidInputError(f"{name} has non-finite entries")
    return A


def index_set(idx: IndexLike, dim: int) -> np.ndarray:
    """Validate a 1-based index set and return it as a sorted int array.

    Parameters
    ----------
    idx : sequence of int
        1-based indices. Duplicates and unsorted input are rejected.
    dim : int
        Ambient dimension; every index must lie in ``1..dim``.
    """
    arr = np.asarray(idx, dtype=np.int64).ravel()
    if arr.size and (arr.min() < 1 or arr.max() > dim):
        raise InvalidIndexError(f"indices must lie in 1..{dim}")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise InvalidIndexError("index set must be strictly increasing")
    return arr


def zero_based(idx: Optional[IndexLike], dim: int) -> np.ndarray:
    """Convert a 1-based index set (or None for all) to 0-based positions."""
    if idx is None:
        return np.arange(dim)
    return index_set(idx, dim) - 1


def one_based(pos) -> np.ndarray:
    """Convert 0-based positions to a sorted 1-based index set."""
    return np.unique(np.asarray(pos, dtype=np.int64)) + 1


def lp_norm(x, p: float) -> float:
    """ℓp norm, or quasi-norm when ``p < 1``, of a vector.

    ``p = np.inf`` gives the max modulus.
    """
    x = as_signal(x)
    p = _NORM_TAGS.get(p, p)
    if not (p == np.inf or p > 0):
        raise InvalidInputError("p must be positive or inf")
    a = np.abs(x)
    if p == np.inf:
        return float(a.max())
    if p == 1:
        return float(a.sum())
    if p == 2:
        return float(np.linalg.norm(a))
    m = a.max()
    if m == 0:
        return 0.0
    # scale out the max to keep a**p in range for small p
    return float(m * np.sum((a / m) ** p) ** (1.0 / p))


def op_norm(A, p_from=2, p_to=2) -> float:
    """Operator norm of `A` between ℓp spaces.

    Supported pairs are ∞→∞ (max row ℓ1 sum), 1→1 (max column ℓ1 sum),
    2→2 (largest singular value) and 2→∞ (max row ℓ2 norm).
    """
    A = as_operator(A)
    try:
        pair = (_NORM_TAGS[p_from], _NORM_TAGS[p_to])
    except (KeyError, TypeError):
        raise UnsupportedNormError(f"unsupported norm pair {p_from}->{p_to}") from None
    if pair == (np.inf, np.inf):
        return float(np.abs(A).sum(axis=1).max())
    if pair == (1, 1):
        return float(np.abs(A).sum(axis=0).max())
    if pair == (2, 2):
        return float(np.linalg.norm(A, 2))
    if pair == (2, np.inf):
        return float(np.sqrt((np.abs(A) ** 2).sum(axis=1).max()))
    raise UnsupportedNormError(f"unsupported norm pair {p_from}->{p_to}")


def restrict(A, rows: Optional[IndexLike] = None, cols: Optional[IndexLike] = None,
             embed: bool = True) -> np.ndarray:
    """Compute ``P_rows A P_cols``.

    Parameters
    ----------
    A : (m, n) array
    rows, cols : 1-based index sets, or None to keep everything.
    embed : bool
        If True the result keeps the shape of `A` with zeros outside the
        selection; otherwise the selected submatrix is returned.
    """
    A = as_operator(A)
    r = zero_based(rows, A.shape[0])
    c = zero_based(cols, A.shape[1])
    if not embed:
        return A[np.ix_(r, c)].copy()
    out = np.zeros_like(A)
    out[np.ix_(r, c)] = A[np.ix_(r, c)]
    return out


def range_basis(B, tol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (as columns) of the column space of `B`.

    Singular values at or below ``tol * sigma_max`` are treated as zero.
    """
    B = np.asarray(B)
    if B.ndim == 1:
        B = B[:, None]
    if B.size == 0 or not np.any(B):
        raise ZeroRangeError("operator has zero range")
    U, sv, _ = np.linalg.svd(B, full_matrices=False)
    rank = int(np.sum(sv > tol * sv[0]))
    return U[:, :rank]


def range_projector(B, tol: float = 1e-10) -> np.ndarray:
    """Orthogonal projector onto the column space of `B`."""
    U = range_basis(B, tol)
    Q = U @ U.conj().T
    # symmetrize away rounding so Q == Q* to machine precision
    return 0.5 * (Q + Q.conj().T)


def sign_vector(z) -> np.ndarray:
    """Entrywise ``z_j / |z_j|``, with 0 where ``z_j = 0``."""
    z = np.asarray(z)
    a = np.abs(z)
    out = np.zeros(z.shape, dtype=np.result_type(z.dtype, np.float64))
    nz = a > 0
    out[nz] = z[nz] / a[nz]
    return out


def pinv_norm(A, tol: float = 1e-10) -> float:
    """Spectral norm of the pseudoinverse of `A` (inf for the zero map)."""
    sv = np.linalg.svd(np.asarray(A), compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return math.inf
    keep = sv[sv > tol * sv[0]]
    return float(1.0 / keep[-1])


def is_real(A, tol: float = 0.0) -> bool:
    """True if `A` has no imaginary part above `tol`."""
    A = np.asarray(A)
    return not np.iscomplexobj(A) or float(np.abs(A.imag).max(initial=0.0)) <= tol
