"""Analysis-ℓ1 recovery from subsampled measurements.

Two problems are solved for ``A = P_Ω V``:

* constrained: minimize ``‖Dg‖₁`` subject to ``‖A g - y‖₂ ≤ δ``;
* unconstrained: minimize ``α‖Dg‖₁ + ‖A g - y‖₂²``.

The default method is ADMM on the splitting ``z = [Dg; Ag]``. A
Chambolle-Pock primal-dual iteration is available as ``method="pdhg"``.
Both stop on a certified relative duality gap: every check point
projects the iterate onto the feasible set, and a dual-feasible point
built from the multipliers gives a lower bound on the optimum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import InvalidInputError, UndefinedReferenceError
from .linop import as_operator, as_signal, zero_based

WINDOW = 50


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and limits.

    ``feas_tol`` bounds the constraint violation of the returned point.
    ``opt_tol`` bounds both the certified relative duality gap and the
    relative objective change over one window of 50 iterations.
    """

    feas_tol: float = 1e-8
    opt_tol: float = 1e-7
    max_iter: int = 200_000
    method: str = "admm"
    rho: Optional[float] = None
    adapt_rho: bool = True
    relax: float = 1.6

    def __post_init__(self):
        if not (self.feas_tol > 0 and self.opt_tol > 0):
            raise InvalidInputError("tolerances must be positive")
        if self.max_iter < 1:
            raise InvalidInputError("max_iter must be positive")
        if self.method not in ("admm", "pdhg"):
            raise InvalidInputError(f"unknown method {self.method!r}")


@dataclass(frozen=True)
class RecoveryProblem:
    """Data of an analysis-ℓ1 recovery problem.

    `omega` holds 1-based row indices of `V`; ``y[i]`` is the measurement
    of row ``omega[i]``.
    """

    V: np.ndarray
    D: np.ndarray
    omega: np.ndarray
    y: np.ndarray
    delta: float = 0.0

    def __post_init__(self):
        V = as_operator(self.V, "V")
        D = as_operator(self.D, "D")
        if V.shape[1] != D.shape[1]:
            raise InvalidInputError("V and D must share the input dimension")
        if not math.isfinite(self.delta) or self.delta < 0:
            raise InvalidInputError("delta must be a finite nonnegative number")
        omega = np.asarray(self.omega, dtype=np.int64)
        zero_based(omega, V.shape[0])
        y = np.asarray(self.y).ravel()
        if y.shape[0] != omega.shape[0]:
            raise InvalidInputError("y and omega differ in length")
        if not np.all(np.isfinite(y)):
            raise InvalidInputError("y has non-finite entries")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "y", y)

    @property
    def A(self) -> np.ndarray:
        return np.asarray(self.V)[self.omega - 1]


@dataclass
class RecoverySolution:
    g: np.ndarray
    objective: float
    residual: float
    iterations: int
    converged: bool
    gap: float
    dual: Optional[np.ndarray] = field(default=None, repr=False)
    data_term: Optional[float] = None
    history: list = field(default_factory=list, repr=False)

    def to_json(self) -> dict:
        from .io import complex_to_json
        out = {
            "g": complex_to_json(self.g),
            "objective": float(self.objective),
            "residual": float(self.residual),
            "iterations": int(self.iterations),
            "converged": bool(self.converged),
            "gap": float(self.gap),
        }
        if self.data_term is not None:
            out["data_term"] = float(self.data_term)
        return out


def soft_threshold(v: np.ndarray, t) -> np.ndarray:
    """Shrink moduli by `t`, keeping phases: ``v * max(0, 1 - t/|v|)``."""
    a = np.abs(v)
    scale = np.maximum(a - t, 0.0)
    out = np.zeros_like(v)
    nz = a > 0
    out[nz] = v[nz] * (scale[nz] / a[nz])
    return out


def project_ball(v: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    d = v - center
    n = np.linalg.norm(d)
    if n <= radius:
        return v
    return center + d * (radius / n)


class _Analysis:
    """Applies D and D* with a sparse copy when D has few nonzeros."""

    def __init__(self, D: np.ndarray):
        self.dense = D
        if np.count_nonzero(D) < 0.25 * D.size:
            self.mat = sp.csr_matrix(D)
            self.adj = sp.csr_matrix(D.conj().T)
        else:
            self.mat = D
            self.adj = D.conj().T
        gram = None
        n = D.shape[1]
        if n <= 4096:
            gram = (self.adj @ self.mat)
            gram = gram.toarray() if sp.issparse(gram) else gram
        self.gram = gram
        # tight-frame constant c with D*D = c I, if it holds
        self.tight = None
        if gram is not None:
            c = float(np.real(np.trace(gram))) / n
            if c > 0 and np.abs(gram - c * np.eye(n)).max() <= 1e-12 * max(1.0, c):
                self.tight = c
        sv = np.linalg.svd(D, compute_uv=False)
        self.norm = float(sv[0])
        keep = sv[sv > 1e-12 * sv[0]]
        # ‖D⁺‖ bounds ‖g‖ by ‖Dg‖₂; infinite if D is not injective
        self.pinv_norm = float(1 / keep[-1]) if keep.size == n else math.inf

    def __call__(self, g):
        return self.mat @ g

    def H(self, z):
        return self.adj @ z


class _Sampling:
    """A = P_Ω V with its SVD, used for projections and linear solves."""

    def __init__(self, A: np.ndarray):
        self.A = A
        self.AH = A.conj().T
        if A.shape[0] == 0:
            self.U = np.zeros((0, 0), A.dtype)
            self.s = np.zeros(0)
            self.W = np.zeros((A.shape[1], 0), A.dtype)
            return
        U, s, Wh = np.linalg.svd(A, full_matrices=False)
        keep = s > 1e-12 * s[0] if s.size else s.astype(bool)
        self.U, self.s, self.W = U[:, keep], s[keep], Wh[keep].conj().T

    def __call__(self, g):
        return self.A @ g

    def H(self, v):
        return self.AH @ v

    def pinv(self, v):
        """Minimal-norm least-squares solution of ``A g = v``."""
        return self.W @ ((self.U.conj().T @ v) / self.s)

    def project_feasible(self, g, y, delta):
        """Move `g` minimally so that ``‖A g - y‖ ≤ δ`` (when attainable)."""
        r = self(g) - y
        nr = np.linalg.norm(r)
        if nr <= delta or self.s.size == 0:
            return g
        target = r * (delta / nr)
        return g - self.pinv(r - target)


def _solve_factory(Dop: _Analysis, Aop: _Sampling, a: float, b: float):
    """Return a solver for ``(a D*D + b A*A) g = rhs``."""
    if Dop.tight is not None:
        c = a * Dop.tight
        W, s2 = Aop.W, Aop.s ** 2
        coef = b * s2 / (c + b * s2)

        def solve(rhs):
            return (rhs - W @ (coef * (W.conj().T @ rhs))) / c
        return solve
    A = Aop.A
    G = a * Dop.gram + b * (A.conj().T @ A)
    cf = sla.cho_factor(G)

    def solve(rhs):
        return sla.cho_solve(cf, rhs)
    return solve


def _setup(prob: RecoveryProblem):
    V = np.asarray(prob.V)
    D = np.asarray(prob.D)
    A = V[prob.omega - 1]
    dtype = np.result_type(V.dtype, D.dtype, prob.y.dtype, np.float64)
    A = A.astype(dtype, copy=False)
    y = prob.y.astype(dtype, copy=False)
    return _Analysis(D.astype(np.result_type(D.dtype, np.float64), copy=False)), _Sampling(A), y, dtype


def _dual_point(Dop, Aop, lam, bound):
    """Turn a multiplier estimate into an exactly dual-feasible pair.

    Returns ``(λ, ν, slack)`` with ``‖λ‖∞ ≤ bound`` and ``A*ν = -D*λ + r``,
    ``‖r‖ = slack``. For a tight frame ``λ`` is first projected onto
    ``{λ : D*λ ∈ range(A*)}`` and then rescaled, so ``slack = 0``.
    """
    W = Aop.W
    if Dop.tight is not None:
        t = Dop.H(lam)
        t_null = t - W @ (W.conj().T @ t)
        lam = lam - Dop(t_null) / Dop.tight
    peak = np.abs(lam).max(initial=0.0)
    if peak > bound:
        lam = lam * (bound / peak)
    t = Dop.H(lam)
    if Aop.s.size:
        nu = -Aop.U @ ((W.conj().T @ t) / Aop.s)
        rd = t + Aop.H(nu)
    else:
        nu = np.zeros(0, dtype=t.dtype)
        rd = t
    slack = float(np.linalg.norm(rd))
    if Dop.tight is not None and slack <= 1e-12 * max(1.0, float(np.linalg.norm(t))):
        slack = 0.0
    return lam, nu, slack


def _constrained_lower_bound(Dop, Aop, y, delta, lam1, upper):
    """Lower bound on the constrained optimum from a multiplier estimate.

    Weak duality gives ``opt ≥ -Re⟨ν, y⟩ - δ‖ν‖ - slack · ‖g*‖`` with
    ``‖g*‖ ≤ ‖D⁺‖ · upper``; the last term vanishes for tight frames.
    """
    lam1, nu, slack = _dual_point(Dop, Aop, lam1, 1.0)
    val = -np.real(np.vdot(nu, y)) - delta * np.linalg.norm(nu)
    if slack > 0:
        val -= slack * Dop.pinv_norm * upper if math.isfinite(Dop.pinv_norm) else math.inf
    return val


def solve_constrained(prob: RecoveryProblem, opts: Optional[SolverOptions] = None,
                      x0: Optional[np.ndarray] = None) -> RecoverySolution:
    """Minimize ``‖Dg‖₁`` subject to ``‖y - P_Ω V g‖₂ ≤ δ``.

    Returns the best feasible point found. ``converged`` is set when the
    certified relative gap and the windowed relative objective change are
    both below ``opts.opt_tol``.
    """
    opts = opts or SolverOptions()
    Dop, Aop, y, dtype = _setup(prob)
    delta = float(prob.delta)
    n = Dop.dense.shape[1]

    if np.linalg.norm(y) <= delta:
        g = np.zeros(n, dtype)
        return RecoverySolution(g, 0.0, float(np.linalg.norm(y)), 0, True, 0.0,
                                dual=np.zeros(Dop.dense.shape[0], dtype))

    g = Aop.pinv(y) if x0 is None else np.asarray(x0, dtype).copy()
    g = Aop.project_feasible(g, y, delta)
    if opts.method == "pdhg":
        return _pdhg_constrained(Dop, Aop, y, delta, g, opts)

    solve = _solve_factory(Dop, Aop, 1.0, 1.0)
    z1 = Dop(g)
    z2 = Aop(g)
    u1 = np.zeros_like(z1)
    u2 = np.zeros_like(z2)
    scale = max(np.abs(z1).max(), 1e-300)
    rho = opts.rho if opts.rho is not None else 1.0 / scale

    best_g, best_f = g, float(np.abs(z1).sum())
    best_gap = math.inf
    best_dual = None
    prev_f = None
    history = []
    it = 0
    converged = False
    while it < opts.max_iter:
        it += 1
        g = solve(Dop.H(z1 - u1) + Aop.H(z2 - u2))
        Dg = Dop(g)
        Ag = Aop(g)
        z1_old, z2_old = z1, z2
        # over-relaxation: mix the new image with the previous split variable
        h1 = opts.relax * Dg + (1 - opts.relax) * z1_old
        h2 = opts.relax * Ag + (1 - opts.relax) * z2_old
        z1 = soft_threshold(h1 + u1, 1.0 / rho)
        z2 = project_ball(h2 + u2, y, delta)
        u1 += h1 - z1
        u2 += h2 - z2
        r1 = Dg - z1
        r2 = Ag - z2
        if opts.adapt_rho and it % 10 == 0 and it <= 20_000:
            rp = math.sqrt(np.linalg.norm(r1) ** 2 + np.linalg.norm(r2) ** 2)
            rd = rho * np.linalg.norm(Dop.H(z1 - z1_old) + Aop.H(z2 - z2_old))
            if rp > 10 * rd:
                rho *= 2.0
                u1 /= 2.0
                u2 /= 2.0
            elif rd > 10 * rp:
                rho /= 2.0
                u1 *= 2.0
                u2 *= 2.0
        if it % WINDOW == 0 or it == opts.max_iter:
            gp = Aop.project_feasible(g, y, delta)
            f = float(np.abs(Dop(gp)).sum())
            if f < best_f:
                best_f, best_g = f, gp
            lb = _constrained_lower_bound(Dop, Aop, y, delta, rho * u1, best_f)
            gap = max(best_f - lb, 0.0) / max(1.0, best_f)
            if gap < best_gap:
                best_gap, best_dual = gap, rho * u1
            history.append((it, f, gap, rho))
            change = math.inf if prev_f is None else abs(f - prev_f) / max(1.0, abs(f))
            prev_f = f
            if best_gap <= opts.opt_tol and change <= opts.opt_tol:
                converged = True
                break
    res = float(np.linalg.norm(Aop(best_g) - y))
    converged = converged and res <= delta + opts.feas_tol
    return RecoverySolution(best_g, best_f, res, it, converged, best_gap,
                            dual=best_dual, history=history)


def _pdhg_constrained(Dop, Aop, y, delta, g, opts):
    """Chambolle-Pock iteration on ``K = [D; A]`` with ``τσ‖K‖² < 1``."""
    Knorm = math.sqrt(Dop.norm ** 2 + (Aop.s[0] ** 2 if Aop.s.size else 0.0))
    scale = max(np.abs(Dop(g)).max(), 1e-300)
    # balance the primal and dual step against the coefficient scale
    tau = 0.99 * scale / Knorm
    sigma = 0.99 / (scale * Knorm)
    lam1 = np.zeros(Dop.dense.shape[0], g.dtype)
    lam2 = np.zeros(Aop.A.shape[0], g.dtype)
    g_bar = g.copy()
    best_g, best_f = g, float(np.abs(Dop(g)).sum())
    best_gap, best_dual = math.inf, None
    prev_f = None
    history = []
    it = 0
    converged = False
    while it < opts.max_iter:
        it += 1
        v1 = lam1 + sigma * Dop(g_bar)
        a = np.abs(v1)
        lam1 = np.where(a > 1, v1 / np.maximum(a, 1e-300), v1)
        v2 = lam2 + sigma * Aop(g_bar)
        # prox of the conjugate of the ball indicator via Moreau
        lam2 = v2 - sigma * project_ball(v2 / sigma, y, delta)
        g_new = g - tau * (Dop.H(lam1) + Aop.H(lam2))
        g_bar = 2 * g_new - g
        g = g_new
        if it % WINDOW == 0 or it == opts.max_iter:
            gp = Aop.project_feasible(g, y, delta)
            f = float(np.abs(Dop(gp)).sum())
            if f < best_f:
                best_f, best_g = f, gp
            lb = _constrained_lower_bound(Dop, Aop, y, delta, lam1, best_f)
            gap = max(best_f - lb, 0.0) / max(1.0, best_f)
            if gap < best_gap:
                best_gap, best_dual = gap, lam1.copy()
            history.append((it, f, gap, tau))
            change = math.inf if prev_f is None else abs(f - prev_f) / max(1.0, abs(f))
            prev_f = f
            if best_gap <= opts.opt_tol and change <= opts.opt_tol:
                converged = True
                break
    res = float(np.linalg.norm(Aop(best_g) - y))
    converged = converged and res <= delta + opts.feas_tol
    return RecoverySolution(best_g, best_f, res, it, converged, best_gap,
                            dual=best_dual, history=history)


def solve_unconstrained(prob: RecoveryProblem, alpha: float,
                        opts: Optional[SolverOptions] = None) -> RecoverySolution:
    """Minimize ``α‖Dg‖₁ + ‖P_Ω V g - y‖₂²`` by ADMM on ``z = Dg``.

    `prob.delta` is ignored. The returned ``dual`` is a vector ``β`` with
    ``‖β‖∞ ≤ α`` that, with ``ν = 2(Ag - y)``, gives the stationarity
    residual ``D*β + A*ν``.
    """
    if not (alpha > 0 and math.isfinite(alpha)):
        raise InvalidInputError("alpha must be positive")
    opts = opts or SolverOptions()
    Dop, Aop, y, dtype = _setup(prob)
    n = Dop.dense.shape[1]
    g = np.zeros(n, dtype)
    z = Dop(g)
    u = np.zeros_like(z)
    rho = opts.rho if opts.rho is not None else max(alpha, 1e-12) * 10.0 / max(np.abs(Aop.H(y)).max(), 1e-300)
    rho = max(rho, 1e-8)
    solve = _solve_factory(Dop, Aop, rho, 2.0)

    def objective(gv):
        return alpha * float(np.abs(Dop(gv)).sum()) + float(np.linalg.norm(Aop(gv) - y) ** 2)

    best_g, best_f = g, objective(g)
    best_gap, best_dual = math.inf, np.zeros_like(z)
    prev_f = None
    history = []
    it = 0
    converged = False
    Ay2 = 2.0 * Aop.H(y)
    while it < opts.max_iter:
        it += 1
        g = solve(Ay2 + rho * Dop.H(z - u))
        Dg = Dop(g)
        z_old = z
        z = soft_threshold(Dg + u, alpha / rho)
        r = Dg - z
        u += r
        if opts.adapt_rho and it % 10 == 0 and it <= 20_000:
            rp = np.linalg.norm(r)
            rd = rho * np.linalg.norm(Dop.H(z - z_old))
            factor = 2.0 if rp > 10 * rd else (0.5 if rd > 10 * rp else 1.0)
            if factor != 1.0:
                rho *= factor
                u /= factor
                solve = _solve_factory(Dop, Aop, rho, 2.0)
        if it % WINDOW == 0 or it == opts.max_iter:
            f = objective(g)
            if f < best_f:
                best_f, best_g = f, g
            beta, nu, slack = _dual_point(Dop, Aop, rho * u, alpha)
            lb = -np.real(np.vdot(nu, y)) - 0.25 * np.linalg.norm(nu) ** 2
            if slack > 0:
                lb -= slack * Dop.pinv_norm * best_f / alpha
            gap = max(best_f - lb, 0.0) / max(1.0, best_f)
            if gap < best_gap:
                best_gap, best_dual = gap, beta
            history.append((it, f, gap, rho))
            change = math.inf if prev_f is None else abs(f - prev_f) / max(1.0, abs(f))
            prev_f = f
            if best_gap <= opts.opt_tol and change <= opts.opt_tol:
                converged = True
                break
    data = float(np.linalg.norm(Aop(best_g) - y) ** 2)
    l1 = float(np.abs(Dop(best_g)).sum())
    return RecoverySolution(best_g, l1, math.sqrt(data), it, converged, best_gap,
                            dual=best_dual, data_term=data, history=history)


def measure(x, scheme_or_omega, V, delta: float = 0.0,
            noise_seed: Optional[int] = None) -> np.ndarray:
    """``y = P_Ω V x`` plus, if `noise_seed` is given, complex Gaussian noise of norm δ."""
    omega = getattr(scheme_or_omega, "omega", scheme_or_omega)
    pos = np.asarray(omega, dtype=np.int64) - 1
    y = np.asarray(V)[pos] @ np.asarray(x)
    if noise_seed is not None and delta > 0 and y.size:
        rng = np.random.default_rng(noise_seed)
        e = rng.standard_normal(y.size) + 1j * rng.standard_normal(y.size)
        y = y + e * (delta / np.linalg.norm(e))
    return y


def recover(x, scheme, V, D, delta: float = 0.0, noise_seed: Optional[int] = None,
            opts: Optional[SolverOptions] = None) -> RecoverySolution:
    """Reconstruction map: measure `x` on the scheme's rows and solve the constrained problem."""
    x = as_signal(x)
    y = measure(x, scheme, V, delta, noise_seed)
    omega = getattr(scheme, "omega", scheme)
    return solve_constrained(RecoveryProblem(V, D, omega, y, delta), opts)


def relative_error(g, x) -> float:
    """``100 ‖g - x‖₂ / ‖x‖₂`` in percent."""
    g = np.asarray(g)
    x = np.asarray(x)
    if g.shape != x.shape:
        raise InvalidInputError("g and x differ in shape")
    nx = np.linalg.norm(x)
    if nx == 0:
        raise UndefinedReferenceError("relative error against the zero vector")
    return float(100.0 * np.linalg.norm(g - x) / nx)
