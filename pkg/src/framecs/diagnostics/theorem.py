"""Checkable form of the recovery theorem's hypotheses.

Every ``A ≳ B`` of the theorem is read as ``A >= C_user * B``; the
absolute constants are unknown, so the report lists slacks rather than
a verdict about recovery.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import DivisionGuardError, InvalidInputError
from ..levels import LevelStructure, as_levels
from ..linop import as_operator
from .balancing import BalancingReport, TildeM, balancing_residuals, draw_level_supports, tilde_m
from .bquantity import b_quantity
from .coherence import block_norms, local_coherence
from .sparsity import _levels_for, kappa_localized, relative_sparsity


def theorem_L(epsilon: float, q: float, M: int, kappa_max: float) -> float:
    """``1 + √log₂(6/ε) / log₂(4 q^{-1} M √κmax)`` from the recovery theorem."""
    den = np.log2(4.0 / q * M * np.sqrt(kappa_max))
    if den <= 0:
        raise DivisionGuardError("log2(4 M sqrt(kappa_max)/q) must be positive")
    return float(1.0 + np.sqrt(np.log2(6.0 / epsilon)) / den)


def golfing_L(epsilon: float, q: float, kappa_max: float, Mtilde: float, K: float) -> float:
    """Factor ``L`` with ``‖w‖ ≲ L √κmax`` from the golfing estimate.

    ``L = √(K (log(8 q^{-1} √κmax M̃) + log(6/ε)) / log(4 q^{-1} √κmax M̃))``
    where `Mtilde` already carries the ``‖DD*‖∞→∞`` factor and ``K = max q_k^{-1}``.
    """
    a = 8.0 / q * np.sqrt(kappa_max) * Mtilde
    b = 4.0 / q * np.sqrt(kappa_max) * Mtilde
    if np.log(b) <= 0:
        raise DivisionGuardError("log(4 sqrt(kappa_max) Mtilde/q) must be positive")
    return float(np.sqrt(K * (np.log(a) + np.log(6.0 / epsilon)) / np.log(b)))


def _barrier_min(A: np.ndarray, rhs: np.ndarray, lo: np.ndarray, tol: float = 1e-11):
    """Minimize ``Σ 1/u`` over ``A.T u <= rhs``, ``lo <= u <= 1`` by a log-barrier method.

    Coordinates with ``lo = 1`` are fixed at 1. Assumes ``A.T lo < rhs``.
    """
    u = np.ones_like(lo)
    free = lo < 1.0
    if not np.any(free):
        return u
    Af, lof = A[free], lo[free]
    rf = rhs - A[~free].sum(axis=0)
    span = 1.0 - lof
    # strictly feasible start between lo and 1
    push = float((Af.T @ span).max(initial=0.0))
    room = float((rf - Af.T @ lof).min())
    theta = 0.5 if push <= 0 else min(0.5, 0.5 * room / push)
    x = lof + theta * span
    m = Af.shape[1] + 2 * x.size
    t = 1.0
    while m / t > tol:
        for _ in range(100):
            c = rf - Af.T @ x
            g = -t / x ** 2 + Af @ (1.0 / c) - 1.0 / (x - lof) + 1.0 / (1.0 - x)
            H = (np.diag(2.0 * t / x ** 3 + 1.0 / (x - lof) ** 2 + 1.0 / (1.0 - x) ** 2)
                 + (Af / c ** 2) @ Af.T)
            step = -np.linalg.solve(H, g)
            dec = float(-g @ step)
            if dec / 2 <= 1e-12:
                break

            def phi(y):
                cy = rf - Af.T @ y
                if np.any(cy <= 0) or np.any(y <= lof) or np.any(y >= 1.0):
                    return np.inf
                return (t * np.sum(1.0 / y) - np.sum(np.log(cy)) - np.sum(np.log(y - lof))
                        - np.sum(np.log(1.0 - y)))

            f0, h = phi(x), 1.0
            while phi(x + h * step) > f0 - 0.25 * h * dec and h > 1e-14:
                h *= 0.5
            x = x + h * step
        t *= 20.0
    u[free] = x
    return u


def solve_m_hat(sizes: Sequence[int], a: np.ndarray, C: float = 1.0):
    """Smallest ``Σ m̂_k`` subject to ``C Σ_k (S_k/m̂_k - 1) a[k, l] <= 1`` for all `l`.

    ``a[k, l] = μ²(k, l) κ̂_k`` and ``1 <= m̂_k <= S_k``. The program is
    convex in ``u_k = 1/m̂_k`` (linear constraints, objective ``Σ 1/u_k``)
    and ``m̂ = S`` is strictly feasible, so a log-barrier Newton method
    solves it reliably. Returns ``(m_hat, max constraint value)``.
    """
    S = np.asarray(sizes, dtype=float)
    a = np.asarray(a, dtype=float)
    if np.any(S < 1) or a.shape != (S.size, S.size) or np.any(a < 0):
        raise InvalidInputError("need sizes >= 1 and a nonnegative square a")
    rhs = 1.0 / C + a.sum(axis=0)       # Σ_k S_k a_kl u_k <= 1/C + Σ_k a_kl
    A = S[:, None] * a
    lo = 1.0 / S
    u = _barrier_min(A, rhs, lo)
    m_hat = 1.0 / u
    lhs = C * ((S / m_hat - 1.0)[:, None] * a).sum(axis=0)
    return m_hat, float(lhs.max()) if lhs.size else 0.0


@dataclass
class TheoremReport:
    """Ingredients and per-inequality slacks.

    Per-level arrays (index k):

    - ``cond_ii_value``: ``C √r log(1/ε) log(q^{-1} M̃ √κmax) B (S_k/m_k) Σ_l μ²(k,l) κ_l``;
      ``cond_ii_slack = 1 - cond_ii_value``.
    - ``m_hat``: solution of the m̂ system; ``m_required = C r m̂_k B² log(1/ε) log(...)``;
      ``m_slack = m_k - m_required``.
    - ``m_recommended``: the ω-structured sample count (capped at ``S_k``; level 1
      has ``M_0 = 0`` and is always fully sampled).

    ``kappa_hat_source`` records whether κ̂ came from the analytic upper
    bound (conservative) or the Monte Carlo estimate.
    """

    sampling: LevelStructure
    sparsity: LevelStructure
    s: tuple
    epsilon: float
    C_user: float
    kappa: np.ndarray
    kappa_from_estimate: bool
    kappa_hat: np.ndarray
    kappa_hat_source: str
    kappa_min: float
    kappa_max: float
    q: float
    q_inv: float
    mu: np.ndarray
    B: float
    Mtilde: TildeM
    log_factor: float
    cond_ii_value: np.ndarray
    cond_ii_slack: np.ndarray
    m_hat: np.ndarray
    m_hat_constraint: float
    m_required: np.ndarray
    m_slack: np.ndarray
    omega: np.ndarray
    omega_C: float
    omega_hypothesis: np.ndarray
    m_recommended: np.ndarray
    balancing: Optional[BalancingReport]
    L_theorem: float
    L_golfing: float
    full_sampling: bool
    notes: list = field(default_factory=list)

    @property
    def condition_i(self) -> Optional[bool]:
        return None if self.balancing is None else self.balancing.passed

    @property
    def condition_ii(self) -> bool:
        return bool(np.all(self.cond_ii_slack >= 0) and np.all(self.m_slack >= 0))

    @property
    def holds_with_probability_one(self) -> bool:
        return self.full_sampling

    def rows(self):
        """One dict per sampling level, for tabular output."""
        out = []
        for k in range(self.sampling.r):
            out.append({
                "level": k + 1,
                "size": self.sampling.sizes[k],
                "m": self.sampling.counts[k],
                "cond_ii_value": float(self.cond_ii_value[k]),
                "cond_ii_slack": float(self.cond_ii_slack[k]),
                "m_hat": float(self.m_hat[k]),
                "m_required": float(self.m_required[k]),
                "m_slack": float(self.m_slack[k]),
                "m_recommended": int(self.m_recommended[k]),
            })
        return out


def check_theorem_conditions(V, D, M, m: Sequence[int], N, s: Sequence[int], p: float = 1.0,
                             epsilon: float = np.exp(-1), C_user: float = 1.0,
                             kappa: Optional[Sequence[float]] = None,
                             kappa_hat: str = "bound", trials: int = 200, seed: int = 0,
                             b_trials: int = 50, balancing_trials: int = 20,
                             check_balancing: bool = True) -> TheoremReport:
    """Evaluate conditions (i) and (ii) of the recovery theorem.

    Parameters
    ----------
    V, D : sampling and analysis operators.
    M : sampling level boundaries; `m` the samples per level.
    N : sparsity level boundaries over the rows of `D`; `s` per-level sparsities.
    p : exponent passed to the localized sparsity estimator.
    epsilon : failure probability in ``(0, 1/e]``.
    C_user : stand-in for the hidden absolute constants.
    kappa : localized level sparsities; estimated (Monte Carlo lower
        bounds) when omitted.
    kappa_hat : ``"bound"`` (analytic upper bound, default) or ``"estimate"``.
    """
    V = as_operator(V, "V")
    D = as_operator(D, "D")
    if not 0 < epsilon <= np.exp(-1) + 1e-15:
        raise InvalidInputError("epsilon must lie in (0, 1/e]")
    if C_user <= 0:
        raise InvalidInputError("C_user must be positive")
    Ml = LevelStructure(as_levels(M).boundaries, tuple(m))
    Nl = _levels_for(N, D.shape[0])
    r = Ml.r
    if Nl.r != r or len(s) != r:
        raise InvalidInputError("sampling and sparsity levels must have the same count")
    sizes = np.asarray(Ml.sizes, dtype=float)
    counts = np.asarray(Ml.counts, dtype=float)
    if np.any(counts == 0):
        raise DivisionGuardError("every level needs at least one sample")
    notes = []
    q_inv = float(np.max(sizes / counts))
    q = 1.0 / q_inv
    if kappa is None:
        kappa = kappa_localized(D, Nl, s, p=p, trials=trials, seed=seed).kappa_levels
        notes.append("kappa estimated by Monte Carlo (lower bounds)")
    kappa = np.asarray(kappa, dtype=float)
    kmin, kmax = r * float(kappa.min()), r * float(kappa.max())
    mu = local_coherence(V, D, Ml, Nl).mu
    bs = b_quantity(D, Nl, s=s, trials=b_trials, seed=seed)
    B = bs.value
    notes.append(f"B(s,N) sampled over {bs.trials} supports")
    tm = tilde_m(V, D, Ml.total, Nl.total, kmax, q, embed=True)
    if tm.embedded:
        notes.append("M~ index taken past the last row (zero-padded operator)")
    log_factor = float(np.log(q_inv * tm.value * np.sqrt(kmax)))
    leps = float(np.log(1.0 / epsilon))
    cond = C_user * np.sqrt(r) * leps * log_factor * B * (sizes / counts) * (mu ** 2 @ kappa)
    rs = relative_sparsity(V, D, Ml, Nl, kappa, seed=seed)
    if kappa_hat == "bound":
        kh = rs.bound
    elif kappa_hat == "estimate":
        kh = rs.estimate
    else:
        raise InvalidInputError("kappa_hat must be 'bound' or 'estimate'")
    a = (mu ** 2) * kh[:, None]
    m_hat, m_hat_lhs = solve_m_hat(sizes, a, C_user)
    m_req = C_user * r * m_hat * B ** 2 * leps * log_factor
    bn = block_norms(V, D, Ml, Nl)
    lo_M = np.concatenate(([0], Ml.boundaries[:-1])).astype(float)
    lo_N = np.concatenate(([0], Nl.boundaries[:-1])).astype(float)
    with np.errstate(divide="ignore"):
        inv = np.minimum(1.0 / lo_N[None, :], 1.0 / lo_M[:, None])
        hyp = mu ** 2 <= bn.omega * inv + 1e-12
        ratio = np.where(lo_M > 0, sizes / np.where(lo_M > 0, lo_M, 1), np.inf)
    rec = r * bn.C ** 2 * B ** 2 * leps * log_factor * ratio * (bn.omega @ kappa) * C_user
    rec = np.where(np.isfinite(rec), np.minimum(np.ceil(rec), sizes), sizes).astype(int)
    bal = None
    if check_balancing:
        sup = draw_level_supports(Nl, s, balancing_trials, seed)
        bal = balancing_residuals(V, D, Ml.total, Nl.total, int(sum(s)), kmin, kmax,
                                  K=q_inv, delta_sampler=sup)
    full = bool(np.all(counts == sizes))
    if full:
        notes.append("full sampling: the recovery statement holds with probability 1")
    return TheoremReport(
        sampling=Ml, sparsity=Nl, s=tuple(int(v) for v in s), epsilon=float(epsilon),
        C_user=float(C_user), kappa=kappa, kappa_from_estimate="kappa estimated" in " ".join(notes),
        kappa_hat=kh, kappa_hat_source=kappa_hat, kappa_min=kmin, kappa_max=kmax, q=q,
        q_inv=q_inv, mu=mu, B=B, Mtilde=tm, log_factor=log_factor, cond_ii_value=cond,
        cond_ii_slack=1.0 - cond, m_hat=m_hat, m_hat_constraint=m_hat_lhs, m_required=m_req,
        m_slack=counts - m_req, omega=bn.omega, omega_C=bn.C, omega_hypothesis=hyp,
        m_recommended=rec, balancing=bal,
        L_theorem=theorem_L(epsilon, q, Ml.total, kmax),
        L_golfing=golfing_L(epsilon, q, kmax, tm.value, q_inv),
        full_sampling=full, notes=notes)
