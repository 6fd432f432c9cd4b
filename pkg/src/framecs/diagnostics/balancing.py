"""Balancing-property residuals and the truncation index M̃."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional, Sequence, Union

import numpy as np

from ..errors import DivisionGuardError, InvalidInputError
from ..levels import as_levels
from ..linop import as_operator, op_norm, range_basis, zero_based


@dataclass(frozen=True)
class BalancingReport:
    """Worst-case balancing residuals over a family of supports.

    ``lhs1`` is ``‖D Q_W V* P_[M]^⊥ V Q_W D*‖₂→₂`` and ``lhs2`` is
    ``‖D Q_W^⊥ V* P_[M] V Q_W D*‖₂→∞``, each maximized over the supports
    in ``supports``. ``per_support`` holds one ``(lhs1, lhs2)`` row per
    support.
    """

    M: int
    lhs1: float
    lhs2: float
    threshold1: float
    threshold2: float
    supports: List[np.ndarray] = field(repr=False)
    per_support: np.ndarray = field(repr=False)

    @property
    def pass1(self) -> bool:
        return self.lhs1 <= self.threshold1

    @property
    def pass2(self) -> bool:
        return self.lhs2 <= self.threshold2

    @property
    def passed(self) -> bool:
        return self.pass1 and self.pass2


def balancing_thresholds(kappa1: float, kappa2: float, K: float, M: int):
    """``(√(κ1/κ2)/8)·log₂^{-1/2}(4√κ2·K·M)`` and ``1/(8√κ2)``."""
    if not (kappa2 >= kappa1 > 0):
        raise InvalidInputError("need kappa2 >= kappa1 > 0")
    if K < 1:
        raise InvalidInputError("K must be at least 1")
    arg = np.log2(4.0 * np.sqrt(kappa2) * K * M)
    if arg <= 0:
        raise DivisionGuardError("log2(4 sqrt(kappa2) K M) must be positive")
    t1 = np.sqrt(kappa1 / kappa2) / 8.0 / np.sqrt(arg)
    return float(t1), float(1.0 / (8.0 * np.sqrt(kappa2)))


def draw_supports(N: int, s: int, trials: int, seed: int) -> List[np.ndarray]:
    """`trials` uniform s-subsets of ``{1..N}`` (1-based, sorted)."""
    if not 1 <= s <= N:
        raise InvalidInputError("need 1 <= s <= N")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    return [np.sort(rng.choice(N, size=s, replace=False)) + 1 for _ in range(trials)]


def draw_level_supports(levels, s: Sequence[int], trials: int, seed: int) -> List[np.ndarray]:
    """`trials` supports with ``s_k`` uniform indices in each level (1-based, sorted)."""
    lev = as_levels(levels)
    if len(s) != lev.r:
        raise InvalidInputError("need one sparsity per level")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed)))
    out = []
    for _ in range(trials):
        parts = [sl.start + rng.choice(sl.stop - sl.start, size=int(sk), replace=False)
                 for sl, sk in zip(lev.slices(), s)]
        out.append(np.sort(np.concatenate(parts)).astype(int) + 1)
    return out


def _supports(delta_sampler, N, s, R) -> List[np.ndarray]:
    if delta_sampler is None:
        delta_sampler = {}
    if isinstance(delta_sampler, dict):
        out = draw_supports(N, s, delta_sampler.get("trials", 20), delta_sampler.get("seed", 0))
    elif callable(delta_sampler):
        out = [np.asarray(d) for d in delta_sampler()]
    else:
        out = [np.asarray(d) for d in delta_sampler]
    for d in out:
        zero_based(d, R)
        if d.size and d.max() > N:
            raise InvalidInputError("supports must lie in {1..N}")
    return out


class _Residuals:
    """Per-support factors reused while sweeping `M`."""

    def __init__(self, V, D, pos, tol):
        self.B = range_basis(D[pos].conj().T, tol)
        self.X = D @ self.B                      # D Q_W = X B*
        self.H = self.X.conj().T @ self.X        # X* X
        self.VB = V @ self.B                     # V Q_W = VB B*
        self.V = V
        self.D = D

    def lhs1(self, M: int) -> float:
        C = self.VB[M:]
        if C.size == 0:
            return 0.0
        # ‖X (C*C) X*‖ = λmax(H^{1/2} C*C H^{1/2})
        w, U = np.linalg.eigh(self.H)
        Hh = (U * np.sqrt(np.clip(w, 0, None))) @ U.conj().T
        A = Hh @ (C.conj().T @ C) @ Hh
        return float(max(np.linalg.eigvalsh((A + A.conj().T) / 2).max(), 0.0))

    def lhs2(self, M: int) -> float:
        u = self.V[:M].conj().T @ self.VB[:M]    # V* P_[M] V B
        u = u - self.B @ (self.B.conj().T @ u)   # Q_W^⊥ applied
        Y = self.D @ u
        rows = np.real(np.einsum("ik,kl,il->i", Y, self.H, Y.conj()))
        return float(np.sqrt(max(rows.max(), 0.0)))


def balancing_residuals(V, D, M: int, N: int, s: int, kappa1: float, kappa2: float,
                        K: float = 1.0,
                        delta_sampler: Union[None, dict, Callable, Iterable] = None,
                        tol: float = 1e-10) -> BalancingReport:
    """Evaluate both balancing-property inequalities at truncation `M`.

    Parameters
    ----------
    V : (rows, n) sampling operator; ``P_[M]`` keeps its first `M` rows.
    D : (R, n) analysis operator.
    M, N : sampling and sparsity truncations.
    s : support size.
    kappa1, kappa2 : localized sparsity parameters with ``kappa2 >= kappa1``.
    K : the factor inside the logarithm (``q^{-1}`` in the recovery theorem).
    delta_sampler : supports Δ ⊂ {1..N}
        ``None`` or ``{"trials": T, "seed": S}`` draws uniform subsets;
        a callable returning supports or an iterable of supports is used
        as is.
    """
    V = as_operator(V, "V")
    D = as_operator(D, "D")
    if V.shape[1] != D.shape[1]:
        raise InvalidInputError("V and D must share the input dimension")
    if not 1 <= M <= V.shape[0]:
        raise InvalidInputError("M must lie in 1..rows(V)")
    if not 1 <= N <= D.shape[0]:
        raise InvalidInputError("N must lie in 1..rows(D)")
    t1, t2 = balancing_thresholds(kappa1, kappa2, K, M)
    sup = _supports(delta_sampler, N, s, D.shape[0])
    rows = np.zeros((len(sup), 2))
    for i, d in enumerate(sup):
        res = _Residuals(V, D, zero_based(d, D.shape[0]), tol)
        rows[i] = res.lhs1(M), res.lhs2(M)
    worst = rows.max(axis=0) if len(sup) else np.zeros(2)
    return BalancingReport(int(M), float(worst[0]), float(worst[1]), t1, t2, sup, rows)


@dataclass(frozen=True)
class BalancingSweep:
    """Smallest passing `M` in a sweep, with the reports at ``M - 1`` and ``M``."""

    M: Optional[int]
    below: Optional[BalancingReport]
    at: Optional[BalancingReport]
    lhs1: np.ndarray = field(repr=False)
    lhs2: np.ndarray = field(repr=False)
    Ms: np.ndarray = field(repr=False)


def minimal_balancing_m(V, D, N: int, s: int, kappa1: float, kappa2: float, K: float = 1.0,
                        delta_sampler=None, M_range: Optional[Sequence[int]] = None,
                        tol: float = 1e-10) -> BalancingSweep:
    """Sweep `M` upward and return the first value where both inequalities hold.

    The supports are fixed once (from `delta_sampler`) so the sweep is
    deterministic. ``M = None`` means no value in the range passes.
    """
    V = as_operator(V, "V")
    D = as_operator(D, "D")
    Ms = np.arange(1, V.shape[0] + 1) if M_range is None else np.asarray(list(M_range), int)
    sup = _supports(delta_sampler, N, s, D.shape[0])
    res = [_Residuals(V, D, zero_based(d, D.shape[0]), tol) for d in sup]
    l1 = np.array([max(r.lhs1(M) for r in res) for M in Ms])
    l2 = np.array([max(r.lhs2(M) for r in res) for M in Ms])
    found = None
    for M, a, b in zip(Ms, l1, l2):
        t1, t2 = balancing_thresholds(kappa1, kappa2, K, int(M))
        if a <= t1 and b <= t2:
            found = int(M)
            break
    if found is None:
        return BalancingSweep(None, None, None, l1, l2, Ms)
    at = balancing_residuals(V, D, found, N, s, kappa1, kappa2, K, sup, tol)
    below = (balancing_residuals(V, D, found - 1, N, s, kappa1, kappa2, K, sup, tol)
             if found > 1 else None)
    return BalancingSweep(found, below, at, l1, l2, Ms)


@dataclass(frozen=True)
class TildeM:
    """``value = ‖DD*‖∞→∞ · index``; ``index`` is None when no column qualifies."""

    index: Optional[int]
    value: Optional[float]
    dd_norm: float
    embedded: bool
    col_sampled: np.ndarray = field(repr=False)
    col_range: np.ndarray = field(repr=False)
    threshold_sampled: float = 0.0
    threshold_range: float = 0.0


def tilde_m(V, D, M: int, N: int, kappa_max: float, q: float, tol: float = 1e-10,
            embed: bool = False) -> TildeM:
    """Smallest ``i`` with both column tails below their thresholds, times ``‖DD*‖∞→∞``.

    For every ``j >= i`` (1-based, up to the row count of `D`) it requires
    ``‖P_[M] V D* e_j‖₂ ≤ q/(8√κmax)`` and
    ``‖Q_{R(D* P_[N])} D* e_j‖₂ ≤ √(5q)/4``.

    If the last column fails, no index exists in the finite range and
    ``index`` is None, unless `embed` is set: `D` is then read as an
    operator into ℓ² whose rows beyond ``R`` vanish, which makes
    ``i = R + 1`` admissible (``embedded`` records this).
    """
    V = as_operator(V, "V")
    D = as_operator(D, "D")
    if not 0 < q <= 1:
        raise InvalidInputError("q must lie in (0, 1]")
    if kappa_max <= 0:
        raise InvalidInputError("kappa_max must be positive")
    if not 1 <= N <= D.shape[0]:
        raise InvalidInputError("N must lie in 1..rows(D)")
    a = np.linalg.norm(V[:M] @ D.conj().T, axis=0)
    B = range_basis(D[:N].conj().T, tol)
    b = np.linalg.norm(B.conj().T @ D.conj().T, axis=0)
    ta = q / (8.0 * np.sqrt(kappa_max))
    tb = np.sqrt(5.0 * q) / 4.0
    dd = op_norm(D @ D.conj().T, np.inf, np.inf)
    bad = np.flatnonzero((a > ta) | (b > tb))
    if bad.size == 0:
        idx = 1
    elif bad[-1] == D.shape[0] - 1 and not embed:
        return TildeM(None, None, dd, False, a, b, ta, tb)
    else:
        idx = int(bad[-1]) + 2
    return TildeM(idx, dd * idx, dd, idx > D.shape[0], a, b, ta, tb)
