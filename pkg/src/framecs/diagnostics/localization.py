"""Intrinsic localization: ``I_p`` sums and the localized-sparsity bounds built on them."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import InvalidInputError
from ..linop import as_operator, zero_based
from .sparsity import _floor, _levels_for, _random_values


def i_p(G: np.ndarray, delta: np.ndarray, lam: np.ndarray, p: float) -> float:
    """``I_p(Δ, Λ) = max_{j∈Δ} Σ_{k∈Λ} |G[k, j]|^p`` for 0-based positions; 0 if Δ is empty."""
    if delta.size == 0 or lam.size == 0:
        return 0.0
    return float((np.abs(G[np.ix_(lam, delta)]) ** p).sum(axis=0).max())


def localization_constant(D, L: float) -> float:
    """Smallest ``c`` with ``|⟨ψ_j, ψ_k⟩| ≤ c (1 + |j-k|)^{-L}`` for the rows of `D`."""
    D = as_operator(D, "D")
    G = np.abs(D @ D.conj().T)
    idx = np.arange(G.shape[0])
    return float((G * (1.0 + np.abs(idx[:, None] - idx[None, :])) ** L).max())


@dataclass
class LocalizationReport:
    """``I_p`` values, the four bounds and their Monte Carlo check.

    ``bound_i``/``bound_ii`` bound ``‖Dg‖_p^p`` for ``g ∈ R(D*P_Δ)``
    normalized by ``‖Dg‖₂ = 1`` and ``‖Dg‖∞ = 1``; ``bound_iii``/``bound_iv``
    are the per-level analogues. ``observed_*`` hold the largest sampled
    left-hand sides. Bound (ii) is reported but not treated as a
    requirement (``required`` lists the asserted ones).
    """

    p: float
    s: int
    s_levels: np.ndarray
    I_total: float
    I_matrix: np.ndarray
    pinv_norm: float
    gram_pinv_inf: float
    bound_i: float
    bound_ii: float
    bound_iii: np.ndarray
    bound_iv: np.ndarray
    observed_i: float
    observed_ii: float
    observed_iii: np.ndarray
    observed_iv: np.ndarray
    samples: int
    seed: int
    required: tuple = ("i", "iii", "iv")

    def holds(self, which: str, rtol: float = 1e-9) -> bool:
        b = np.atleast_1d(getattr(self, f"bound_{which}"))
        o = np.atleast_1d(getattr(self, f"observed_{which}"))
        return bool(np.all(o <= b * (1 + rtol) + rtol))

    @property
    def checks(self) -> dict:
        return {w: self.holds(w) for w in ("i", "ii", "iii", "iv")}


def intrinsic_localization(D, delta: Sequence[int], levels, p: float = 1.0,
                           samples: int = 500, seed: int = 0,
                           tol: float = 1e-10) -> LocalizationReport:
    """Evaluate ``I_p`` and the localized-sparsity bounds for support `delta`.

    Parameters
    ----------
    D : (R, n) analysis operator; frame elements are its rows.
    delta : 1-based row indices Δ.
    levels : sparsity level boundaries over the rows (last level stretched).
    p : exponent in ``(0, 1]``.
    samples : random ``x`` on Δ used to check the bounds on ``g = D* P_Δ x``.

    When the rows indexed by Δ are linearly dependent both
    pseudoinverse-norm factors are infinite and every bound is vacuous.
    """
    D = as_operator(D, "D")
    if not 0 < p <= 1:
        raise InvalidInputError("p must lie in (0, 1]")
    R = D.shape[0]
    lev = _levels_for(levels, R)
    pos = zero_based(delta, R)
    if pos.size == 0:
        raise InvalidInputError("Δ must be nonempty")
    G = D @ D.conj().T
    s = pos.size
    lab = lev.labels()
    s_lev = np.array([int(np.sum(lab[pos] == m)) for m in range(lev.r)])
    allr = np.arange(R)
    I_tot = i_p(G, pos, allr, p)
    Imat = np.zeros((lev.r, lev.r))      # [m, n] = I_p(Δ_m, Λ_n)
    for mm in range(lev.r):
        dm = pos[lab[pos] == mm]
        for nn, sl in enumerate(lev.slices()):
            Imat[mm, nn] = i_p(G, dm, allr[sl], p)
    sv = np.linalg.svd(D[pos], compute_uv=False)
    independent = sv.size == s and sv[-1] > tol * sv[0]
    A = float(1.0 / sv[-1]) if independent else np.inf
    Bp = float(np.abs(np.linalg.inv(G[np.ix_(pos, pos)])).sum(axis=1).max()) if independent else np.inf
    if independent:
        b1 = A ** p * I_tot * s ** (1 - p / 2)
        b2 = A ** p * I_tot * s
        b3 = A ** p * (s_lev ** (1 - p / 2) @ Imat)
        b4 = Bp ** p * (s_lev @ Imat)
    else:
        b1 = b2 = np.inf
        b3 = np.full(lev.r, np.inf)
        b4 = np.full(lev.r, np.inf)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    complex_ = np.iscomplexobj(D)
    o1 = o2 = 0.0
    o3 = np.zeros(lev.r)
    o4 = np.zeros(lev.r)
    slices = lev.slices()
    for _ in range(samples):
        x = _random_values(rng, s, complex_)
        z = np.abs(_floor(G[:, pos] @ x))
        n2, ninf = np.linalg.norm(z), z.max()
        if ninf == 0:
            continue
        zp = z ** p
        per = np.array([zp[sl].sum() for sl in slices])
        o1 = max(o1, float(zp.sum() / n2 ** p))
        o2 = max(o2, float(zp.sum() / ninf ** p))
        o3 = np.maximum(o3, per / n2 ** p)
        o4 = np.maximum(o4, per / ninf ** p)
    return LocalizationReport(float(p), int(s), s_lev, I_tot, Imat, A, Bp, float(b1), float(b2),
                              b3, b4, o1, o2, o3, o4, int(samples), int(seed))
