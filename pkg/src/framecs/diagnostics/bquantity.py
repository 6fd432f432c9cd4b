"""The quantity B̃(Δ), its sampled maximum B(s,N), and the E(p) experiment."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
import scipy.sparse as sp
from scipy.linalg import lapack, solve_triangular

from ..errors import InvalidInputError
from ..levels import LevelStructure
from ..linop import as_operator, zero_based
from ..signals import random_piecewise_constant, support
from ..transforms import haar_frame_redundant, wavelet_levels
from .sparsity import _levels_for


class _FrameCache:
    """Quantities of `D` reused across many supports."""

    def __init__(self, D: np.ndarray, levels, tol: float, cholesky_tol: float = 1e-12):
        self.D = D
        self.cholesky_tol = cholesky_tol
        self.R, self.n = D.shape
        self.lev = _levels_for(levels, self.R)
        self.tol = tol
        self.G = D @ D.conj().T
        self.Dsp = sp.csr_matrix(D) if np.count_nonzero(D) < 0.25 * D.size else None
        self.ind = np.zeros((self.R, self.lev.r))
        for t, sl in enumerate(self.lev.slices()):
            self.ind[sl, t] = 1.0
        self._full = None

    def level_inf_sum(self, G: np.ndarray) -> float:
        """``max_l Σ_t ‖P_Λl G P_Λt‖∞→∞``."""
        S = np.abs(G) @ self.ind
        return max(float(S[sl].max(axis=0).sum()) for sl in self.lev.slices())

    def full_value(self):
        if self._full is None:
            inf = float(np.abs(self.G).sum(axis=1).max())
            self._full = (0.0, float(np.sqrt(inf * self.level_inf_sum(self.G))))
        return self._full


@dataclass(frozen=True)
class BValue:
    value: float
    branch_perp: float
    branch_range: float
    rank: int


def _sandwich(cache: _FrameCache, Q: np.ndarray) -> np.ndarray:
    """``D Q D*`` using the sparse copy of `D` when there is one."""
    if cache.Dsp is None:
        return cache.D @ Q @ cache.D.conj().T
    DQ = cache.Dsp @ Q
    return (cache.Dsp.conj() @ DQ.conj().T).conj().T


def _range_gram(cache: _FrameCache, pos: np.ndarray, method: str):
    """Return ``(D Q_W D*, k)`` with ``Q_W`` the projector onto ``R(D* P_Δ)``.

    ``"svd"`` uses the singular values of ``P_Δ D`` with the relative
    cutoff `tol`. ``"cholesky"`` runs a pivoted Cholesky factorization of
    the Gram block ``(DD*)[Δ, Δ]``, stopping at pivots below
    ``cholesky_tol`` times the largest diagonal entry; it is cheaper and
    agrees with ``"svd"`` whenever the nonzero singular values are well
    separated from zero.
    """
    D = cache.D
    if method == "svd":
        _, sv, Vh = np.linalg.svd(D[pos], full_matrices=False)
        if sv[0] == 0:
            raise InvalidInputError("D vanishes on Δ")
        k = int(np.sum(sv > cache.tol * sv[0]))
        B = Vh[:k].conj().T
    elif method == "cholesky":
        M = cache.G[np.ix_(pos, pos)]
        dmax = float(np.real(np.diag(M)).max())
        if dmax <= 0:
            raise InvalidInputError("D vanishes on Δ")
        fn = lapack.zpstrf if np.iscomplexobj(M) else lapack.dpstrf
        c, piv, k, info = fn(M, tol=cache.cholesky_tol * dmax, lower=1)
        if info < 0:
            raise RuntimeError("pivoted Cholesky failed")
        k = int(k)
        sel = pos[piv[:k] - 1]
        L = np.tril(c[:k, :k])
        # B = D_sel* L^{-*} is an orthonormal basis of W
        B = solve_triangular(L, D[sel], lower=True, check_finite=False).conj().T
    else:
        raise InvalidInputError(f"unknown method {method!r}")
    if k == cache.n:
        return None, k
    return _sandwich(cache, B @ B.conj().T), k


def _b_tilde(cache: _FrameCache, pos: np.ndarray, method: str = "svd") -> BValue:
    if pos.size == 0:
        raise InvalidInputError("Δ must be nonempty")
    G, k = _range_gram(cache, pos, method)
    if G is None:
        b1, b2 = cache.full_value()
        return BValue(max(b1, b2), b1, b2, k)
    Gp = cache.G - G
    b1 = float(np.abs(Gp).sum(axis=1).max())
    inf = float(np.abs(G).sum(axis=1).max())
    b2 = float(np.sqrt(inf * cache.level_inf_sum(G)))
    return BValue(max(b1, b2), b1, b2, k)


def b_tilde(D, delta: Sequence[int], levels, tol: float = 1e-10) -> BValue:
    """Evaluate B̃(Δ) exactly.

    ``B̃(Δ) = max{‖D Q⊥ D*‖∞→∞, sqrt(‖D Q D*‖∞→∞ · max_l Σ_t ‖P_Λl D Q D* P_Λt‖∞→∞)}``
    where ``Q`` projects onto ``W = R(D* P_Δ)``.

    Parameters
    ----------
    D : (R, n) analysis operator.
    delta : 1-based row indices of `D`.
    levels : sparsity level boundaries over the rows of `D`.
    """
    D = as_operator(D, "D")
    return _b_tilde(_FrameCache(D, levels, tol), zero_based(delta, D.shape[0]))


@dataclass(frozen=True)
class BSample:
    value: float
    values: np.ndarray
    worst_support: np.ndarray
    trials: int
    seed: Optional[int]
    exhaustive: bool


def b_quantity(D, levels, delta: Union[Sequence[int], None] = None,
               s: Optional[Sequence[int]] = None, trials: int = 100, seed: int = 0,
               exhaustive: bool = False, tol: float = 1e-10):
    """B̃(Δ) for a given Δ, or B(s,N) as a max over (s,N)-sparse supports.

    With `delta` given, returns a :class:`BValue`. Otherwise supports with
    ``s_k`` indices in level ``k`` are drawn uniformly (or, with
    `exhaustive`, all are enumerated; allowed when ``Σ s_k ≤ 8``) and a
    :class:`BSample` is returned.
    """
    D = as_operator(D, "D")
    cache = _FrameCache(D, levels, tol)
    if delta is not None:
        return _b_tilde(cache, zero_based(delta, D.shape[0]))
    if s is None or len(s) != cache.lev.r:
        raise InvalidInputError("need one sparsity per level")
    slices = cache.lev.slices()
    if exhaustive:
        if sum(s) > 8:
            raise InvalidInputError("exhaustive mode is limited to Σ s_k ≤ 8")
        per_level = [list(itertools.combinations(range(sl.start, sl.stop), sk))
                     for sl, sk in zip(slices, s)]
        supports = (np.array(sorted(itertools.chain(*combo)), dtype=int)
                    for combo in itertools.product(*per_level))
    else:
        rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
        supports = (np.sort(np.concatenate([
            sl.start + rng.choice(sl.stop - sl.start, size=sk, replace=False)
            for sl, sk in zip(slices, s)])).astype(int) for _ in range(trials))
    vals, worst, best = [], None, -np.inf
    for pos in supports:
        if pos.size == 0:
            continue
        v = _b_tilde(cache, pos).value
        vals.append(v)
        if v > best:
            best, worst = v, pos
    vals = np.asarray(vals)
    return BSample(float(best), vals, worst + 1, len(vals), None if exhaustive else int(seed),
                   exhaustive)


def random_pc_signal(p: int, rng: np.random.Generator) -> np.ndarray:
    """Piecewise-constant vector of length 2^p with 1..max(1, 2^{p-2}) breakpoints."""
    n = 2 ** p
    k = int(rng.integers(1, max(1, 2 ** (p - 2)) + 1))
    return random_piecewise_constant(n, min(k, n - 1), rng)


def e_value(p: int, trials: int, seed: int, tol: float = 1e-10,
            D: Optional[np.ndarray] = None, return_all: bool = False,
            method: str = "cholesky"):
    """E(p): max of B̃(supp(Dx)) over random piecewise-constant `x`.

    Every trial uses its own stream derived from ``(seed, p, trial)``, so
    results do not depend on evaluation order.
    """
    if trials < 1:
        raise InvalidInputError("trials must be positive")
    D = haar_frame_redundant(p) if D is None else D
    cache = _FrameCache(D, wavelet_levels(p, frame=True).boundaries, tol)
    vals = np.empty(trials)
    for t in range(trials):
        rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(p), t)))
        x = random_pc_signal(p, rng)
        pos = support(D @ x) - 1
        vals[t] = _b_tilde(cache, pos, method).value
    return (float(vals.max()), vals) if return_all else float(vals.max())


def e_experiment(p_range: Sequence[int], trials: int, seed: int,
                 workers: int = 1) -> dict:
    """E(p) for each `p` in `p_range`; returns ``{p: E}`` in order."""
    ps = [int(p) for p in p_range]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(max_workers=workers) as ex:
            res = list(ex.map(e_value, ps, [trials] * len(ps), [seed] * len(ps)))
    else:
        res = [e_value(p, trials, seed) for p in ps]
    return dict(zip(ps, res))
