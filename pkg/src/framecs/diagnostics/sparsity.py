"""Sparsity in levels, (s,N)-term approximation and localized sparsities.

Localized sparsities are suprema over continua. The estimators here
return Monte Carlo lower bounds; :func:`relative_sparsity` pairs its
lower bound with an analytic upper bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from ..errors import InvalidCountsError, InvalidInputError
from ..levels import LevelStructure, as_levels
from ..linop import as_operator, zero_based
from .coherence import block_norms


def _levels_for(levels, dim: int) -> LevelStructure:
    lev = as_levels(levels)
    if lev.r > 1 and lev.boundaries[-2] >= dim:
        raise InvalidInputError("level boundaries exceed the vector length")
    return LevelStructure(lev.boundaries[:-1] + (dim,))


@dataclass(frozen=True)
class LevelSparsity:
    counts: tuple
    support: np.ndarray
    is_sparse: Optional[bool]


def level_sparsity(x, levels, s: Optional[Sequence[int]] = None, tol: float = 0.0) -> LevelSparsity:
    """Per-level nonzero counts of `x`.

    Entries with modulus ``<= tol`` count as zero. The last level is
    stretched to the end of `x`. If `s` is given, ``is_sparse`` reports
    whether every count is within its budget.
    """
    x = np.asarray(x).ravel()
    lev = _levels_for(levels, x.size)
    nz = np.abs(x) > tol
    counts = tuple(int(np.count_nonzero(nz[sl])) for sl in lev.slices())
    verdict = None
    if s is not None:
        if len(s) != lev.r:
            raise InvalidInputError("s and levels differ in length")
        verdict = all(c <= sk for c, sk in zip(counts, s))
    return LevelSparsity(counts, np.flatnonzero(nz) + 1, verdict)


def sN_term_approx(x, s: Sequence[int], levels) -> float:
    """ℓ1 mass left after keeping the ``s_k`` largest entries of each level.

    Ties in magnitude keep the lowest index.
    """
    x = np.asarray(x).ravel()
    lev = _levels_for(levels, x.size)
    if len(s) != lev.r:
        raise InvalidInputError("s and levels differ in length")
    a = np.abs(x)
    dropped = []
    for sl, sk, size in zip(lev.slices(), s, lev.sizes):
        if sk < 0 or sk > size:
            raise InvalidCountsError("s_k exceeds its stratum")
        block = a[sl]
        # stable sort on -|x| keeps lower indices first among ties
        order = np.argsort(-block, kind="stable")
        dropped.append(block[order[sk:]])
    # correctly rounded, so the value depends only on the discarded multiset
    return math.fsum(np.concatenate(dropped)) if dropped else 0.0


ROUNDOFF = 1e-12


def _floor(z: np.ndarray) -> np.ndarray:
    """Zero entries below ``ROUNDOFF * max|z|``; rounding in ``DD*`` would otherwise
    inflate ``Σ|z|^p`` for ``p < 1``."""
    z = np.array(z)
    z[np.abs(z) <= ROUNDOFF * np.abs(z).max(initial=0.0)] = 0
    return z


def kappa_ratios(z, p: float):
    """Per-vector sparsity constants of Definition-style ℓp ratios.

    Returns ``(k_inf, k_2)`` where ``k_inf = ‖z‖_p^p / ‖z‖_∞^p`` and
    ``k_2 = (‖z‖_p^p / ‖z‖_2^p)^{1/(1-p/2)}``; both are 0 for ``z = 0``.
    """
    a = np.abs(np.asarray(z)).ravel()
    m = a.max(initial=0.0)
    if m == 0:
        return 0.0, 0.0
    b = a / m
    mass = float(np.sum(b ** p)) if p != 1 else float(b.sum())
    k_inf = mass
    n2 = float(np.linalg.norm(b))
    k_2 = (mass / n2 ** p) ** (1.0 / (1.0 - p / 2.0))
    return k_inf, k_2


@dataclass
class KappaEstimate:
    """Monte Carlo lower bounds for localized (level) sparsities.

    ``per_level_inf`` and ``per_level_2`` keep the two normalizations;
    ``kappa_levels`` is their elementwise max. ``eta`` is the
    localization factor ``sqrt(kappa / s)`` when ``p = 1``.
    """

    p: float
    kappa_levels: np.ndarray
    kappa: float
    trials: int
    seed: Optional[int]
    per_level_inf: np.ndarray = field(repr=False, default=None)
    per_level_2: np.ndarray = field(repr=False, default=None)
    eta: Optional[float] = None
    lower_bound: bool = True


def _check_p(p: float) -> float:
    J = -np.log2(p)
    if p <= 0 or p > 1 or abs(J - round(J)) > 1e-12:
        raise InvalidInputError("p must be 2^-J for an integer J >= 0")
    return float(p)


def _random_values(rng, size, complex_):
    v = rng.standard_normal(size)
    if complex_:
        v = v + 1j * rng.standard_normal(size)
    return v


def kappa_localized(D, levels, s: Sequence[int], p: float = 1.0, trials: int = 1000,
                    seed: int = 0, support: Optional[Sequence[int]] = None,
                    flat_trials: bool = True) -> KappaEstimate:
    """Lower-bound the localized level sparsities ``κ_j`` of `D`.

    Each trial draws an (s,N)-sparse coefficient vector ``x`` (uniform
    support per level, Gaussian values), forms ``z = D D* x`` and records,
    for every level ``j``, both normalizations of ``P_Λj z`` (see
    :func:`kappa_ratios`) and the same for ``z`` as a whole. Running maxima
    are returned.

    Parameters
    ----------
    D : (R, n) array
        Analysis operator.
    levels : level boundaries over the R rows (last level stretched).
    s : per-level sparsities.
    p : 2^-J exponent.
    support : 1-based indices, optional
        Fix the support instead of drawing it (the counts `s` are then
        ignored).
    flat_trials : bool
        Add trials whose values are unimodular; for orthonormal `D` these
        attain ``κ_j = s_j`` exactly.
    """
    D = as_operator(D, "D")
    p = _check_p(p)
    R = D.shape[0]
    lev = _levels_for(levels, R)
    if support is None:
        if len(s) != lev.r:
            raise InvalidInputError("s and levels differ in length")
        for sk, size in zip(s, lev.sizes):
            if sk < 0 or sk > size:
                raise InvalidCountsError("s_k exceeds its stratum")
    fixed = None if support is None else zero_based(support, R)
    G = D @ D.conj().T
    complex_ = np.iscomplexobj(D)
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    kin = np.zeros(lev.r)
    k2 = np.zeros(lev.r)
    kglob = 0.0
    starts = [sl.start for sl in lev.slices()]

    def draw_support():
        if fixed is not None:
            return fixed
        parts = [st + rng.choice(size, size=sk, replace=False)
                 for st, size, sk in zip(starts, lev.sizes, s)]
        return np.concatenate(parts) if parts else np.zeros(0, int)

    n_flat = 1 if flat_trials else 0
    for t in range(trials + n_flat):
        supp = draw_support()
        if supp.size == 0:
            continue
        if t < n_flat:
            vals = np.ones(supp.size)
        else:
            vals = _random_values(rng, supp.size, complex_)
        z = _floor(G[:, supp] @ vals)
        for j, sl in enumerate(lev.slices()):
            a, b = kappa_ratios(z[sl], p)
            kin[j] = max(kin[j], a)
            k2[j] = max(k2[j], b)
        a, b = kappa_ratios(z, p)
        kglob = max(kglob, a, b)
    kap = np.maximum(kin, k2)
    stot = int(np.sum(s)) if fixed is None else int(fixed.size)
    eta = float(np.sqrt(kglob / stot)) if (p == 1 and stot > 0) else None
    return KappaEstimate(p, kap, float(kglob), int(trials), int(seed), kin, k2, eta)


def kappa_tilde(D, support: Sequence[int], levels, trials: int = 1000, seed: int = 0,
                complex_values: bool = False) -> np.ndarray:
    """Approximate localized level sparsities from vectors on a fixed support.

    For random ``x`` supported on `support`, ``η∞ = DD*x / ‖DD*x‖∞`` and
    ``η2 = DD*x / ‖DD*x‖2``; level ``j`` records the running max of
    ``‖P_Λj η∞‖₁`` and ``‖P_Λj η2‖₁²``. Normalization is global, not per
    level.
    """
    D = as_operator(D, "D")
    R = D.shape[0]
    lev = _levels_for(levels, R)
    supp = zero_based(support, R)
    out = np.zeros(lev.r)
    if supp.size == 0:
        return out
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    Gs = D @ (D.conj().T[:, supp])
    X = _random_values(rng, (supp.size, trials), complex_values)
    Z = np.abs(Gs @ X)
    Z[Z <= ROUNDOFF * Z.max(axis=0, initial=0.0)] = 0.0
    ninf = Z.max(axis=0)
    n2 = np.linalg.norm(Z, axis=0)
    ok = ninf > 0
    Z = Z[:, ok]
    ninf, n2 = ninf[ok], n2[ok]
    for j, sl in enumerate(lev.slices()):
        m1 = Z[sl].sum(axis=0)
        if m1.size:
            out[j] = max(float((m1 / ninf).max()), float(((m1 / n2) ** 2).max()))
    return out


@dataclass
class RelativeSparsity:
    """Brackets for the relative sparsities ``κ̂_k``.

    ``estimate`` is attained by a feasible witness, hence a lower bound.
    ``dual_bound`` is a certified upper bound from the multiplier
    relaxation. ``bound`` is the block-norm estimate ``C Σ_l ω(k,l) κ_l``
    and ``bound_sharp`` the intermediate ``(Σ_l ω(k,l) √κ_l)²`` from the
    same argument.
    """

    estimate: np.ndarray
    bound: np.ndarray
    bound_sharp: np.ndarray
    C: float
    converged: np.ndarray
    dual_bound: np.ndarray = None
    multipliers: np.ndarray = field(repr=False, default=None)
    witnesses: list = field(repr=False, default_factory=list)


class _Cylinder:
    """The constraint ``‖B g‖² ≤ c``."""

    def __init__(self, B: np.ndarray, c: float):
        self.G = B.conj().T @ B
        self.c = float(c)
        self.scale = max(float(np.abs(self.G).max(initial=0.0)), 1e-300)

    def value(self, g):
        return float(np.real(np.vdot(g, self.G @ g)))


def _make_feasible(cyls, g, zero_tol: float = 1e-20):
    """Scale `g` down until every constraint holds.

    A zero budget counts as met when ``g* G g`` is below `zero_tol`
    relative to ``‖G‖ ‖g‖²`` (round-off of an exact null-space vector).
    """
    gg = float(np.real(np.vdot(g, g)))
    worst = 0.0
    for cyl in cyls:
        v = cyl.value(g)
        if cyl.c > 0:
            worst = max(worst, v / cyl.c)
        elif v > zero_tol * cyl.scale * gg:
            return np.zeros_like(g)
    return g / np.sqrt(worst) if worst > 1 else g


def _real_form(H: np.ndarray) -> np.ndarray:
    """Real symmetric matrix of the form ``g ↦ g* H g`` on ``[Re g; Im g]``."""
    if not np.iscomplexobj(H):
        return np.real(H)
    return np.block([[H.real, -H.imag], [H.imag, H.real]])


def _local_max(Hr, Gr, x0, iters):
    """SLSQP local maximum of ``x'Hr x`` subject to ``x'G x <= 1`` for every G in `Gr`."""
    cons = [{"type": "ineq", "fun": (lambda x, G=G: 1.0 - x @ G @ x),
             "jac": (lambda x, G=G: -2.0 * (G @ x))} for G in Gr]
    res = minimize(lambda x: -(x @ Hr @ x), x0, jac=lambda x: -2.0 * (Hr @ x),
                   constraints=cons, method="SLSQP",
                   options={"maxiter": iters, "ftol": 1e-12})
    return res.x, bool(res.success)


def _pencil_top(Hk, grams, lam, tol=1e-13):
    """Top eigenpair of ``Hk g = t (Σ_l lam_l grams_l) g``; ``None`` if singular."""
    H = sum(l * G for l, G in zip(lam, grams))
    H = (H + H.conj().T) / 2
    e, Q = np.linalg.eigh(H)
    if e.min() <= tol * max(e.max(), 1e-300):
        return None
    Wh = Q / np.sqrt(e)
    A = Wh.conj().T @ Hk @ Wh
    t, X = np.linalg.eigh((A + A.conj().T) / 2)
    v = Wh @ X[:, -1]
    return float(max(t[-1], 0.0)), v


def _dual_bound(Hk, grams, iters: int = 200):
    """Minimize ``λmax(Hk, Σ λ_l grams_l)`` over the probability simplex.

    For any λ in the simplex and feasible ``g``, ``Σ λ_l g* grams_l g <= 1``,
    so the pencil eigenvalue bounds ``g* Hk g``. The function is convex in
    λ; exponentiated-gradient steps track the best value seen, which is an
    upper bound whatever the iteration count.
    """
    r = len(grams)
    lam = np.full(r, 1.0 / r)
    best, best_lam, vecs = np.inf, lam.copy(), []
    step = 1.0
    for it in range(iters):
        top = _pencil_top(Hk, grams, lam)
        if top is None:
            break
        t, v = top
        vecs.append(v)
        if t < best:
            best, best_lam = t, lam.copy()
        if t <= 0:
            break
        # d t / d λ_l = -t * (v* G_l v) / (v* H v), with v* H v = 1
        grad = -t * np.array([float(np.real(np.vdot(v, G @ v))) for G in grams])
        z = -step * grad / max(np.abs(grad).max(), 1e-300) / np.sqrt(it + 1)
        lam = lam * np.exp(z - z.max())
        lam = np.clip(lam / lam.sum(), 1e-15, None)
        lam /= lam.sum()
    return best, best_lam, vecs


def relative_sparsity(V, D, Mlevels, Nlevels, kappa: Sequence[float], restarts: int = 3,
                      seed: int = 0, iters: int = 500, dual_iters: int = 200) -> RelativeSparsity:
    """Bracket ``κ̂_k = max ‖P_Γk V g‖²`` over ``{g : ‖P_Λl D g‖² ≤ κ_l}``.

    Lower bound: SLSQP local maxima started from the top pencil
    eigenvectors of the multiplier relaxation and from `restarts` random
    vectors; the best feasible value is kept. Upper bounds: the
    multiplier relaxation (``dual_bound``) and the block-norm estimate
    ``C Σ_l ω(k,l) κ_l``. Levels with ``κ_l = 0`` are handled by
    restricting to the null space of ``P_Λl D``.
    """
    V = as_operator(V, "V")
    D = as_operator(D, "D")
    M = as_levels(Mlevels)
    N = _levels_for(Nlevels, D.shape[0])
    kappa = np.asarray(kappa, dtype=float)
    if kappa.shape != (N.r,) or np.any(kappa < 0):
        raise InvalidInputError("need one nonnegative budget per sparsity level")
    bn = block_norms(V, D, M, N)
    bound = bn.C * (bn.omega @ kappa)
    sharp = (bn.omega @ np.sqrt(kappa)) ** 2
    cyls = [_Cylinder(D[sl], c) for sl, c in zip(N.slices(), kappa)]
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    n = V.shape[1]
    complex_ = np.iscomplexobj(V) or np.iscomplexobj(D)
    dtype = complex if complex_ else float
    # basis of the subspace left free by zero budgets
    Z = np.eye(n, dtype=dtype)
    for sl, c in zip(N.slices(), kappa):
        if c == 0 and Z.shape[1]:
            _, sv, Vh = np.linalg.svd(D[sl] @ Z)
            rank = int(np.sum(sv > 1e-10 * max(sv.max(initial=0), 1e-300)))
            Z = Z @ Vh[rank:].conj().T
    m = Z.shape[1]
    grams = [Z.conj().T @ cyl.G @ Z / cyl.c for cyl in cyls if cyl.c > 0]
    Gr = [_real_form(G) for G in grams]
    est = np.zeros(M.r)
    dual = np.zeros(M.r)
    lams = np.zeros((M.r, len(grams)))
    conv = np.zeros(M.r, dtype=bool)
    wit = []
    for k, rs in enumerate(M.slices()):
        if m == 0 or not grams:
            conv[k] = True
            wit.append(np.zeros(n, dtype=dtype))
            continue
        Hk = V[rs].conj().T @ V[rs]
        Hz = Z.conj().T @ Hk @ Z
        dual[k], lams[k], vecs = _dual_bound(Hz, grams, dual_iters)
        starts = vecs[-3:] + [_random_values(rng, m, complex_) for _ in range(restarts)]
        Hr = _real_form(Hz)
        best, best_g, ok = -1.0, np.zeros(n, dtype=dtype), False
        for w in starts:
            w = w.astype(dtype)
            w = w / np.sqrt(max(max(np.real(np.vdot(w, G @ w)) for G in grams), 1e-300))
            x0 = np.concatenate([w.real, w.imag]) if complex_ else w
            x, success = _local_max(Hr, Gr, x0, iters)
            w = x[:m] + 1j * x[m:] if complex_ else x
            g = _make_feasible(cyls, Z @ w)
            f = float(np.real(np.vdot(g, Hk @ g)))
            if f > best:
                best, best_g = f, g
            ok = ok or success
        est[k], conv[k] = max(best, 0.0), ok
        wit.append(best_g)
    return RelativeSparsity(est, bound, sharp, bn.C, conv, dual, lams, wit)
