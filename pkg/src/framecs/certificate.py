"""Dual certificates: golfing construction, condition checks and concentration frequencies.

A certificate for a support Δ of the analysis coefficients is a vector
``ρ = V* P_Ω w`` that is close to ``D* sgn(P_Δ D f)`` on ``W = R(D* P_Δ)``
and small on its complement. The golfing scheme builds ``ρ`` from
independent Bernoulli batches ``Ω^j`` whose union is the sampling set Ω.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.stats import binomtest

from .diagnostics.balancing import tilde_m
from .diagnostics.sparsity import _levels_for, kappa_tilde
from .diagnostics.theorem import golfing_L, theorem_L
from .errors import InvalidInputError
from .levels import LevelStructure, as_levels
from .linop import as_operator, as_signal, op_norm, range_projector, sign_vector, zero_based
from .sampling import level_rng


@dataclass(frozen=True)
class ScalingOperator:
    """Diagonal ``T = ⊕_k (1/max{1, √(r κ_k)}) P_{Λ_k}`` over the sparsity levels."""

    levels: LevelStructure
    kappa: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.kappa, dtype=float)
        if k.shape != (self.levels.r,) or np.any(k < 0) or not np.all(np.isfinite(k)):
            raise InvalidInputError("need one finite nonnegative kappa per sparsity level")
        object.__setattr__(self, "kappa", k)

    @property
    def r(self) -> int:
        return self.levels.r

    @property
    def weights(self) -> np.ndarray:
        return 1.0 / np.maximum(1.0, np.sqrt(self.r * self.kappa))

    @property
    def diag(self) -> np.ndarray:
        return np.repeat(self.weights, self.levels.sizes)

    @property
    def kappa_min(self) -> float:
        return self.r * float(self.kappa.min())

    @property
    def kappa_max(self) -> float:
        return self.r * float(self.kappa.max())

    @property
    def norm(self) -> float:
        return float(self.weights.max())

    @property
    def inv_norm(self) -> float:
        return float(1.0 / self.weights.min())

    def apply(self, z: np.ndarray) -> np.ndarray:
        return self.diag * z

    def bounds_hold(self, tol: float = 1e-12) -> bool:
        """``‖T‖ ≤ 1/√κ_min`` and ``‖T^{-1}‖ ≤ √κ_max``; the second needs ``κ_max >= 1``."""
        up = np.inf if self.kappa_min == 0 else 1.0 / np.sqrt(self.kappa_min)
        return bool(self.norm <= up + tol and self.inv_norm <= np.sqrt(self.kappa_max) + tol)


def split_densities(q: Sequence[float], mu: int) -> np.ndarray:
    """Batch densities ``q_k^j`` (shape ``(mu, r)``) with ``Π_j (1 - q_k^j) = 1 - q_k``.

    The first two batches use ``q_k/4``; the remaining ``mu - 2`` share
    ``q̃_k = 1 - exp((log(1-q_k) - 2 log(1-q_k/4)) / (mu-2))``; ``q_k = 1``
    gives ``q̃_k = 1``.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    if np.any(q < 0) or np.any(q > 1):
        raise InvalidInputError("densities must lie in [0, 1]")
    if int(mu) != mu or mu < 3:
        raise InvalidInputError("mu must be an integer >= 3")
    mu = int(mu)
    qt = np.ones_like(q)
    lt = q < 1
    qt[lt] = -np.expm1((np.log1p(-q[lt]) - 2.0 * np.log1p(-q[lt] / 4.0)) / (mu - 2))
    out = np.empty((mu, q.size))
    out[:2] = q / 4.0
    out[2:] = qt
    return out


@dataclass
class GolfingConfig:
    """Schedule of the golfing scheme.

    ``alpha``/``beta`` are length-``mu`` arrays (index ``i-1`` for step
    ``i``) and ``splits`` holds ``q_k^j``. ``L_hat`` is the log factor
    ``log(4 q^{-1} √κmax M̃ ‖DD*‖∞→∞)`` and ``nu_raw`` the unrounded
    target ``log(8 q^{-1} √κmax M̃ ‖DD*‖∞→∞)``.
    """

    sampling: LevelStructure
    q: np.ndarray
    scaling: ScalingOperator
    mu: int
    nu: int
    alpha: np.ndarray
    beta: np.ndarray
    splits: np.ndarray
    seed: int = 0
    epsilon: float = float(np.exp(-1))
    L_hat: float = float("nan")
    nu_raw: float = float("nan")
    Mtilde: float = float("nan")
    L_golfing: float = float("nan")
    L_theorem: float = float("nan")
    overrides: dict = field(default_factory=dict)

    @property
    def q_min(self) -> float:
        return float(self.q.min())

    @property
    def gamma(self) -> float:
        return self.epsilon / 6.0

    def to_json(self) -> dict:
        return {"sampling": list(self.sampling.boundaries), "q": self.q.tolist(),
                "sparsity": list(self.scaling.levels.boundaries),
                "kappa": self.scaling.kappa.tolist(), "mu": self.mu, "nu": self.nu,
                "alpha": self.alpha.tolist(), "beta": self.beta.tolist(),
                "q_tilde": self.splits[-1].tolist(), "seed": self.seed,
                "epsilon": self.epsilon, "L_hat": self.L_hat, "nu_raw": self.nu_raw,
                "Mtilde": self.Mtilde, "L_golfing": self.L_golfing,
                "L_theorem": self.L_theorem, "overrides": dict(self.overrides)}


def golfing_config(V, D, sampling, q: Union[float, Sequence[float]], sparsity, kappa,
                   epsilon: float = float(np.exp(-1)), seed: int = 0,
                   mu: Optional[int] = None, nu: Optional[int] = None) -> GolfingConfig:
    """Default schedule from the problem data; `mu` and `nu` may be overridden.

    ``ν = ⌈log(8 q^{-1} √κmax M̃)⌉`` and ``μ = 8⌈3ν + log(γ^{-1/2})⌉`` with
    ``γ = ε/6``, where M̃ already carries ``‖DD*‖∞→∞`` (computed with the
    zero-padded fallback when no finite index qualifies). ``α₁ = α₂ =
    1/(2√L̂)``, ``α_i = 1/2``; ``β₁ = β₂ = 1/4``, ``β_i = L̂/4``.
    """
    V = as_operator(V, "V")
    D = as_operator(D, "D")
    Ml = _levels_for(sampling, V.shape[0])
    qv = np.broadcast_to(np.asarray(q, dtype=float), (Ml.r,)).copy()
    if np.any(qv <= 0) or np.any(qv > 1):
        raise InvalidInputError("densities must lie in (0, 1]")
    if not 0 < epsilon <= np.exp(-1) + 1e-15:
        raise InvalidInputError("epsilon must lie in (0, 1/e]")
    T = ScalingOperator(_levels_for(sparsity, D.shape[0]), np.asarray(kappa, dtype=float))
    qmin = float(qv.min())
    kmax = max(T.kappa_max, 1e-300)
    tm = tilde_m(V, D, Ml.total, D.shape[0], kmax, qmin, embed=True)
    L_hat = float(np.log(4.0 / qmin * np.sqrt(kmax) * tm.value))
    nu_raw = float(np.log(8.0 / qmin * np.sqrt(kmax) * tm.value))
    gamma = epsilon / 6.0
    over = {}
    if nu is None:
        nu = max(int(np.ceil(nu_raw)), 0)
    else:
        over["nu"] = int(nu)
    if mu is None:
        mu = 8 * int(np.ceil(3 * nu + np.log(gamma ** -0.5)))
    else:
        over["mu"] = int(mu)
    mu = max(int(mu), 3)
    alpha = np.full(mu, 0.5)
    alpha[:2] = 1.0 / (2.0 * np.sqrt(L_hat))
    beta = np.full(mu, L_hat / 4.0)
    beta[:2] = 0.25
    K = float((1.0 / qv).max())
    return GolfingConfig(Ml, qv, T, mu, int(nu), alpha, beta, split_densities(qv, mu),
                         int(seed), float(epsilon), L_hat, nu_raw, float(tm.value),
                         golfing_L(epsilon, qmin, kmax, tm.value, K),
                         theorem_L(epsilon, qmin, Ml.total, kmax), over)


@dataclass
class GolfingStep:
    """One iteration of the recursion; ``a_value``/``b_value`` are the two test left-hand sides."""

    i: int
    batch_size: int
    tdz_before: float
    a_value: float
    b_value: float
    A: bool
    B: bool
    accepted: bool
    tdz_after: float
    z_algebra_gap: float = 0.0


@dataclass
class ConditionCheck:
    value: float
    threshold: float
    passed: bool
    strict: bool = False

    def __post_init__(self):
        self.value = float(self.value)
        self.threshold = float(self.threshold)
        self.passed = bool(self.passed)


@dataclass
class CertificateVerdict:
    """Conditions (i)-(v) of the dual-certificate criterion plus the implied error bounds."""

    conditions: dict
    kappa: float
    L: float
    q: float
    rho_identity_gap: float
    tail_l1: float
    noise: float
    bound_constrained: float
    bound_constrained_explicit: float
    bound_unconstrained: float
    column_range: int

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions.values())

    def to_json(self) -> dict:
        out = asdict(self)
        out["passed"] = self.passed
        return out


@dataclass
class CertificateResult:
    """Output of the golfing construction.

    ``success`` means ``|Θ_μ| >= ν``; ``rho``/``w`` are then the snapshot
    at the ν-th accepted step, otherwise they hold the last accepted
    iterate. ``events`` records ``A1, A2, B1, B2`` (incidental for steps 1
    and 2, which always enter Θ), ``B3 = success`` and ``B4``.
    """

    rho: np.ndarray
    w: np.ndarray
    omega: np.ndarray
    omega_batches: List[np.ndarray]
    theta: List[int]
    log: List[GolfingStep]
    events: dict
    success: bool
    degenerate: bool
    config: GolfingConfig
    tdz0: float
    w_norm: float
    w_bound_trace: float
    w_bound_schedule: float
    rho_identity_gap: float
    z_algebra_gap: float
    contraction_ok: bool
    verdict: Optional[CertificateVerdict] = None

    @property
    def L(self) -> float:
        return self.config.L_golfing

    def to_json(self) -> dict:
        return {
            "success": self.success, "degenerate": self.degenerate,
            "theta": list(self.theta), "events": dict(self.events),
            "omega": self.omega.tolist(), "w_norm": self.w_norm, "tdz0": self.tdz0,
            "w_bound_trace": self.w_bound_trace, "w_bound_schedule": self.w_bound_schedule,
            "rho_identity_gap": self.rho_identity_gap, "z_algebra_gap": self.z_algebra_gap,
            "contraction_ok": self.contraction_ok, "config": self.config.to_json(),
            "log": [asdict(s) for s in self.log],
            "verdict": None if self.verdict is None else self.verdict.to_json(),
        }


def _weights(levels: LevelStructure, dens: np.ndarray, rng_seed: int, stream: int,
             rows: int) -> np.ndarray:
    """Row weights ``1/q_k`` on a Bernoulli draw per level, 0 elsewhere (length `rows`)."""
    u = np.zeros(rows)
    for k, (sl, qk) in enumerate(zip(levels.slices(), dens)):
        size = sl.stop - sl.start
        if qk >= 1:
            keep = np.ones(size, dtype=bool)
        elif qk <= 0:
            continue
        else:
            keep = level_rng(rng_seed, k, stream).random(size) < qk
        u[sl][keep] = 1.0 / qk
    return u


def golfing_construct(V, D, Delta: Sequence[int], f, config: GolfingConfig,
                      verify: bool = True, tol: float = 1e-10) -> CertificateResult:
    """Run the golfing recursion and return the certificate with its event log.

    For step ``i`` with batch weights ``U_i`` and ``g = V* U_i V Z_{i-1}``
    the two tests are ``‖TD(Z_{i-1} - Q_W g)‖₂ ≤ α_i ‖TDZ_{i-1}‖₂`` and
    ``‖P_Δ^⊥ D Q_W^⊥ g‖∞ ≤ β_i ‖TDZ_{i-1}‖₂``. Steps 1 and 2 are always
    accepted; later steps only when both tests hold. On acceptance
    ``Y += g`` and ``Z = Z_0 - Q_W Y``. A failed construction is returned,
    not raised.
    """
    V = as_operator(V, "V")
    D = as_operator(D, "D")
    f = as_signal(f, "f")
    R, n = D.shape
    if V.shape[1] != n or f.size != n:
        raise InvalidInputError("V, D and f must share the signal dimension")
    cfg = config
    Ml = cfg.sampling
    if Ml.total > V.shape[0]:
        raise InvalidInputError("sampling levels exceed the rows of V")
    pos = zero_based(Delta, R)
    Dh = D.conj().T
    T = cfg.scaling
    if T.levels.total != R:
        raise InvalidInputError("sparsity levels must cover the rows of D")
    cplx = np.iscomplexobj(V) or np.iscomplexobj(D) or np.iscomplexobj(f)
    dt = complex if cplx else float
    z0 = np.zeros(n, dtype=dt)
    Q = np.zeros((n, n), dtype=dt)
    if pos.size:
        sg = np.zeros(R, dtype=dt)
        sg[pos] = sign_vector((D @ f)[pos])
        z0 = (Dh @ sg).astype(dt)
        Q = range_projector(Dh[:, pos]).astype(dt)
    off = np.ones(R, dtype=bool)
    off[pos] = False
    Td = T.diag

    def tdz(z):
        return float(np.linalg.norm(Td * (D @ z)))

    rows = V.shape[0]
    Z = z0.copy()
    Y = np.zeros(n, dtype=dt)
    w = np.zeros(rows, dtype=complex if np.iscomplexobj(V) or cplx else float)
    rho_snap, w_snap = None, None
    omega_mask = np.zeros(rows, dtype=bool)
    batches, theta, log = [], [], []
    events = {}
    gap = 0.0
    contraction = True
    Kmax_taken = []
    z_norms = [float(np.linalg.norm(z0))]
    tdz0 = tdz(z0)
    for i in range(1, cfg.mu + 1):
        u = _weights(Ml, cfg.splits[i - 1], cfg.seed, i, rows)
        sel = u > 0
        omega_mask |= sel
        batches.append(np.flatnonzero(sel) + 1)
        t_before = tdz(Z)
        VZ = V @ Z
        g = V.conj().T @ (u * VZ)
        Qg = Q @ g
        a_val = tdz(Z - Qg)
        b_val = float(np.abs((D @ (g - Qg))[off]).max()) if off.any() else 0.0
        A = bool(a_val <= cfg.alpha[i - 1] * t_before + tol * max(1.0, t_before))
        B = bool(b_val <= cfg.beta[i - 1] * t_before + tol * max(1.0, t_before))
        if i <= 2:
            events[f"A{i}"] = A
            events[f"B{i}"] = B
        accepted = i <= 2 or (A and B)
        step_gap = 0.0
        if accepted:
            Y = Y + g
            w = w + u * VZ
            Z_new = z0 - Q @ Y
            closed = Z - Qg                     # (Q_W - Q_W V* U V) Z for Z ∈ W
            step_gap = float(np.linalg.norm(Z_new - closed))
            gap = max(gap, step_gap)
            if A and tdz(Z_new) > cfg.alpha[i - 1] * t_before * (1 + 1e-9) + 1e-12:
                contraction = False
            Z = Z_new
            theta.append(i)
            Kmax_taken.append(float((1.0 / cfg.splits[i - 1][cfg.splits[i - 1] > 0]).max())
                              if np.any(cfg.splits[i - 1] > 0) else np.inf)
            z_norms.append(float(np.linalg.norm(Z)))
            if len(theta) == cfg.nu:
                rho_snap, w_snap = Y.copy(), w.copy()
        log.append(GolfingStep(i, int(sel.sum()), t_before, a_val, b_val, A, B, accepted,
                               tdz(Z), step_gap))
    success = len(theta) >= cfg.nu
    events["B3"] = bool(success)
    events["B4"] = bool(all(events.get(k, False) for k in ("A1", "A2", "B1", "B2")) and success)
    degenerate = cfg.nu == 0
    if degenerate:
        rho_snap = np.zeros(n, dtype=dt)
        w_snap = np.zeros_like(w)
    elif rho_snap is None:
        rho_snap, w_snap = Y.copy(), w.copy()
    used = cfg.nu if success else len(theta)
    # ‖w_j‖² ≤ K_j ‖Z_{j-1}‖ (‖Z_j‖ + ‖Z_{j-1}‖), with observed iterates
    wt = sum(np.sqrt(Kmax_taken[j] * z_norms[j] * (z_norms[j + 1] + z_norms[j]))
             for j in range(used))
    # same with ‖DZ‖ ≤ ‖T^{-1}‖ ‖TDZ‖ and the α schedule applied to ‖TDZ_0‖
    ws, prod = 0.0, 1.0
    for j in range(used):
        a = cfg.alpha[theta[j] - 1]
        ws += np.sqrt(Kmax_taken[j] * T.inv_norm ** 2 * (a + 1.0)) * prod * tdz0
        prod *= a
    wmask = np.where(omega_mask, w_snap, 0)
    rho_gap = float(np.linalg.norm(rho_snap - V.conj().T @ wmask))
    res = CertificateResult(rho_snap, w_snap, np.flatnonzero(omega_mask) + 1, batches, theta,
                            log, events, bool(success), degenerate, cfg, tdz0,
                            float(np.linalg.norm(w_snap)), float(wt), float(ws), rho_gap,
                            gap, contraction)
    if verify:
        res.verdict = verify_certificate(V, D, Delta, f, rho_snap, w_snap, cfg.q,
                                         T.kappa, cfg.L_golfing, omega=res.omega,
                                         sampling=Ml, sparsity=T.levels)
    return res


def error_bound_constrained(noise: float, q: float, L: float, kappa: float, tail_l1: float,
                            explicit: bool = False) -> float:
    """Error bound for the constrained program.

    ``δ(q^{-1/2} + L√κ) + ‖P_Δ^⊥ Df‖₁`` (absolute constant 1), or with
    ``explicit`` the constants of the proof:
    ``δ(2q^{-1/2} + 3(1 + 8L√κ)) + 16‖P_Δ^⊥ Df‖₁``.
    """
    if explicit:
        return float(noise * (2 / np.sqrt(q) + 3 * (1 + 8 * L * np.sqrt(kappa))) + 16 * tail_l1)
    return float(noise * (1 / np.sqrt(q) + L * np.sqrt(kappa)) + tail_l1)


def error_bound_unconstrained(noise: float, q: float, L: float, kappa: float, tail_l1: float,
                              alpha: Optional[float] = None) -> float:
    """``δ²/α + α(q^{-1/2} + L√κ)² + δ(q^{-1/2} + L√κ) + ‖P_Δ^⊥ Df‖₁`` (constant 1).

    ``alpha`` defaults to ``√q δ``; ``noise = 0`` with that default gives
    the tail term alone.
    """
    c = 1 / np.sqrt(q) + L * np.sqrt(kappa)
    if alpha is None:
        alpha = np.sqrt(q) * noise
    if alpha <= 0:
        if noise > 0:
            raise InvalidInputError("alpha must be positive when noise > 0")
        return float(tail_l1)
    return float(noise ** 2 / alpha + alpha * c ** 2 + noise * c + tail_l1)


def _omega_weights(omega, sampling: LevelStructure, q: np.ndarray, rows: int) -> np.ndarray:
    u = np.zeros(rows)
    pos = zero_based(omega, rows)
    lab = sampling.labels()
    u[pos] = 1.0 / q[lab[pos]]
    return u


def verify_certificate(V, D, Delta: Sequence[int], f, rho, w, q, kappa, L: float,
                       omega=None, sampling=None, sparsity=None, noise: float = 0.0,
                       kappa_convention: str = "max") -> CertificateVerdict:
    """Evaluate conditions (i)-(v) with dense algebra.

    Parameters
    ----------
    q : per-sampling-level densities (scalar broadcasts); ``q_min`` enters (iii).
    kappa : localized level sparsities; (v) uses ``κ_max = r max κ_k`` by
        default (``kappa_convention="sum"`` uses ``Σ κ_k``).
    omega : sampled rows (1-based); defaults to the support of `w`.
    sampling : sampling level boundaries (default: one level over the rows of V).

    The supremum in (ii) runs over the rows of `D`; rows past it vanish.
    """
    V = as_operator(V, "V")
    D = as_operator(D, "D")
    f = as_signal(f, "f")
    rho = as_signal(rho, "rho")
    w = np.asarray(w)
    R, n = D.shape
    rows = V.shape[0]
    Ml = _levels_for(sampling if sampling is not None else [rows], rows)
    qv = np.broadcast_to(np.asarray(q, dtype=float), (Ml.r,)).astype(float)
    if np.any(qv <= 0):
        raise InvalidInputError("densities must be positive")
    if omega is None:
        omega = np.flatnonzero(np.abs(w) > 0) + 1
    u = _omega_weights(omega, Ml, qv, rows)
    mask = u > 0
    kap = np.atleast_1d(np.asarray(kappa, dtype=float))
    if kappa_convention == "max":
        k = kap.size * float(kap.max())
    elif kappa_convention == "sum":
        k = float(kap.sum())
    else:
        raise InvalidInputError("kappa_convention must be 'max' or 'sum'")
    pos = zero_based(Delta, R)
    Dh = D.conj().T
    Q = range_projector(Dh[:, pos]) if pos.size else np.zeros((n, n))
    Qp = np.eye(n) - Q
    VQ = V @ Q
    c1 = op_norm(VQ.conj().T @ (u[:, None] * VQ) - Q)
    X = V @ (Qp @ Dh)
    c2 = float((u[:, None] * np.abs(X) ** 2).sum(axis=0).max())
    Df = D @ f
    sg = np.zeros(R, dtype=np.result_type(Df.dtype, float))
    sg[pos] = sign_vector(Df[pos])
    c3 = float(np.linalg.norm(Dh @ sg - Q @ rho))
    off = np.ones(R, dtype=bool)
    off[pos] = False
    c4 = float(np.abs((D @ (Qp @ rho))[off]).max()) if off.any() else 0.0
    c5 = float(np.linalg.norm(w))
    qmin = float(qv.min())
    conds = {
        "i": ConditionCheck(c1, 0.25, c1 < 0.25, True),
        "ii": ConditionCheck(c2, 1.25, c2 < 1.25, True),
        "iii": ConditionCheck(c3, np.sqrt(qmin) / 8, c3 <= np.sqrt(qmin) / 8 + 1e-12),
        "iv": ConditionCheck(c4, 0.5, c4 <= 0.5 + 1e-12),
        "v": ConditionCheck(c5, L * np.sqrt(k), c5 <= L * np.sqrt(k) + 1e-12),
    }
    gap = float(np.linalg.norm(rho - V.conj().T @ np.where(mask, w, 0)))
    tail = float(np.abs(Df[off]).sum())
    return CertificateVerdict(conds, k, float(L), qmin, gap, tail, float(noise),
                              error_bound_constrained(noise, qmin, L, k, tail),
                              error_bound_constrained(noise, qmin, L, k, tail, explicit=True),
                              error_bound_unconstrained(noise, qmin, L, k, tail), R)


SCENARIOS = ("prop1", "prop2", "prop3", "prop4")


@dataclass
class ConcentrationResult:
    """Deviation-event frequency over Bernoulli draws with a Wilson interval.

    ``side_condition`` is the deterministic hypothesis (value, threshold);
    ``passed`` means the interval's upper end is at most ``gamma``.
    """

    scenario: str
    alpha: float
    trials: int
    failures: int
    frequency: float
    ci_low: float
    ci_high: float
    gamma: float
    side_condition: Optional[tuple]
    values: np.ndarray = field(repr=False)

    @property
    def passed(self) -> bool:
        return self.ci_high <= self.gamma

    @property
    def side_condition_holds(self) -> Optional[bool]:
        if self.side_condition is None:
            return None
        v, t = self.side_condition
        return bool(v <= t + 1e-12)


def concentration_check(scenario: str, V, D, Delta: Sequence[int], levels, q, alpha: float,
                        trials: int = 200, seed: int = 0, kappa=None, sparsity=None,
                        gamma: float = 0.1, confidence: float = 0.95) -> ConcentrationResult:
    """Monte Carlo frequency of a concentration event.

    With ``U = ⊕ q_k^{-1} P_{Ω_k}`` for a Bernoulli draw Ω on the sampling
    `levels` (``M`` = their total) and a fixed random ``g ∈ W``:

    - ``prop1``: ``‖TD(Q_W V* U V Q_W - Q_W) g‖ ≥ α ‖TDg‖``;
      hypothesis ``‖TD(Q_W V* P_[M] V Q_W - Q_W) D* T^{-1}‖ ≤ α/2``.
    - ``prop2``: ``‖P_Δ^⊥ D Q_W^⊥ V* U V Q_W g‖∞ ≥ α ‖TDg‖``;
      hypothesis ``‖D Q_W^⊥ V* P_[M] V Q_W D* T^{-1}‖₂→∞ ≤ α/2``.
    - ``prop3``: ``‖Q_W V* U V Q_W - Q_W V* V Q_W‖ ≥ α``;
      hypothesis ``‖Q_W V* P_[M]^⊥ V Q_W‖ ≤ α/2``.
    - ``prop4``: ``sup_j ‖P_j D Q_W^⊥ V* U V Q_W^⊥ D* P_j‖ ≥ α`` (α = 5/4 in
      the certificate criterion); no deterministic hypothesis, so
      ``side_condition`` is None.

    `kappa` (for T) defaults to a randomized estimate on Δ over `sparsity`
    (default: one level).
    """
    if scenario not in SCENARIOS:
        raise InvalidInputError(f"scenario must be one of {SCENARIOS}")
    V = as_operator(V, "V")
    D = as_operator(D, "D")
    R, n = D.shape
    rows = V.shape[0]
    Ml = _levels_for(levels, rows)
    M = Ml.total
    qv = np.broadcast_to(np.asarray(q, dtype=float), (Ml.r,)).astype(float)
    if np.any(qv <= 0) or np.any(qv > 1):
        raise InvalidInputError("densities must lie in (0, 1]")
    Nl = _levels_for(sparsity if sparsity is not None else [R], R)
    pos = zero_based(Delta, R)
    if kappa is None:
        kappa = np.maximum(kappa_tilde(D, one_based_list(pos), Nl, trials=200, seed=seed), 1e-12)
    T = ScalingOperator(Nl, np.asarray(kappa, dtype=float))
    Td = T.diag
    Dh = D.conj().T
    Q = range_projector(Dh[:, pos])
    Qp = np.eye(n) - Q
    PM = np.zeros(rows)
    PM[:M] = 1.0
    VQ = V @ Q
    E = VQ.conj().T @ (PM[:, None] * VQ)
    E_full = VQ.conj().T @ VQ
    off = np.ones(R, dtype=bool)
    off[pos] = False
    rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(99,)))
    g = Q @ rng.standard_normal(n)
    if np.iscomplexobj(V) or np.iscomplexobj(D):
        g = g + 1j * (Q @ rng.standard_normal(n))
    tdg = float(np.linalg.norm(Td * (D @ g)))
    Tinv = 1.0 / Td
    if scenario == "prop1":
        side = op_norm((Td[:, None] * (D @ (E - Q) @ Dh)) * Tinv[None, :])
    elif scenario == "prop2":
        side = op_norm((D @ Qp @ E @ Dh) * Tinv[None, :], 2, np.inf)
    elif scenario == "prop3":
        side = op_norm(VQ.conj().T @ ((1 - PM)[:, None] * VQ))
    else:
        side = None
    vals = np.empty(trials)
    X4 = V @ (Qp @ Dh) if scenario == "prop4" else None
    for t in range(trials):
        u = _weights(Ml, qv, int(seed), 1000 + t, rows)
        if scenario == "prop1":
            h = VQ.conj().T @ (u * (VQ @ g)) - g
            vals[t] = np.linalg.norm(Td * (D @ h)) - alpha * tdg
        elif scenario == "prop2":
            h = Qp @ (V.conj().T @ (u * (VQ @ g)))
            vals[t] = (np.abs((D @ h)[off]).max() if off.any() else 0.0) - alpha * tdg
        elif scenario == "prop3":
            vals[t] = op_norm(VQ.conj().T @ (u[:, None] * VQ) - E_full) - alpha
        else:
            vals[t] = (u[:, None] * np.abs(X4) ** 2).sum(axis=0).max() - alpha
    fails = int(np.sum(vals >= 0))
    ci = binomtest(fails, trials).proportion_ci(confidence_level=confidence, method="wilson")
    return ConcentrationResult(scenario, float(alpha), int(trials), fails, fails / trials,
                               float(ci.low), float(ci.high), float(gamma),
                               None if side is None else (float(side), float(alpha) / 2.0),
                               vals)


def one_based_list(pos: np.ndarray) -> List[int]:
    return [int(p) + 1 for p in pos]


def certificate_trials(V, D, s: int, q, trials: int, seed: int = 0, sampling=None,
                       sparsity=None, epsilon: float = float(np.exp(-1)),
                       mu: Optional[int] = None, nu: Optional[int] = None,
                       delta: Optional[Sequence[int]] = None,
                       kappa_trials: int = 200) -> List[CertificateResult]:
    """Independent golfing runs with seeds derived from `seed`.

    Each trial draws a uniform support of size `s` over the rows of `D`
    (unless `delta` fixes it), a Gaussian ``x`` on it and
    ``f = D* P_Δ x``; κ comes from the randomized estimate on Δ.
    """
    V = as_operator(V, "V")
    D = as_operator(D, "D")
    R = D.shape[0]
    sampling = [V.shape[0]] if sampling is None else sampling
    sparsity = [R] if sparsity is None else sparsity
    Nl = _levels_for(sparsity, R)
    out = []
    for t in range(trials):
        ss = np.random.SeedSequence(int(seed), spawn_key=(t,))
        rng = np.random.default_rng(ss)
        sub = int(ss.generate_state(1)[0])
        if delta is None:
            d = np.sort(rng.choice(R, size=s, replace=False)) + 1
        else:
            d = np.asarray(delta, dtype=int)
        x = np.zeros(R)
        x[d - 1] = rng.standard_normal(d.size)
        f = D.conj().T @ x
        kap = np.maximum(kappa_tilde(D, d, Nl, trials=kappa_trials, seed=sub), 1e-12)
        cfg = golfing_config(V, D, sampling, q, Nl, kap, epsilon=epsilon, seed=sub, mu=mu, nu=nu)
        out.append(golfing_construct(V, D, d, f, cfg))
    return out


def certificate_summary(results: Sequence[CertificateResult], tol: float = 1e-9) -> dict:
    """Rates over trials: construction success, each condition, both, and algebra checks."""
    n = len(results)
    if n == 0:
        raise InvalidInputError("no trials")
    conds = {k: sum(r.verdict.conditions[k].passed for r in results) / n
             for k in ("i", "ii", "iii", "iv", "v")}
    ok = [r.success and r.verdict.passed for r in results]
    algebra = [r.z_algebra_gap <= tol and r.rho_identity_gap <= 1e-10 and r.contraction_ok
               for r in results]
    return {"trials": n, "success_rate": sum(r.success for r in results) / n,
            "conditions": conds, "all_pass_rate": sum(ok) / n,
            "algebra_rate": sum(algebra) / n,
            "mean_hits": float(np.mean([len(r.theta) for r in results])),
            "nu": [r.config.nu for r in results][0], "mu": [r.config.mu for r in results][0]}
