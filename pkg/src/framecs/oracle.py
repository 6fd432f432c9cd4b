"""Independent reference solutions for small recovery problems.

These reformulate the recovery programs for generic solvers and share no
code with the iterative solvers, so agreement between the two is a
meaningful check.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog

from .errors import InvalidInputError
from .linop import as_operator, is_real


@dataclass(frozen=True)
class OracleSolution:
    g: np.ndarray
    objective: float
    status: str


def lp_oracle(A, D, y) -> OracleSolution:
    """Minimize ``‖Dg‖₁`` subject to ``Ag = y`` for real data, as a linear program.

    Variables ``(g, u, v)`` with ``Dg = u - v`` and ``u, v >= 0``; the
    objective is ``Σ(u + v)``. Solved with the HiGHS simplex backend.
    """
    A = as_operator(A, "A")
    D = as_operator(D, "D")
    y = np.asarray(y).ravel()
    if not (is_real(A) and is_real(D) and is_real(y)):
        raise InvalidInputError("the LP oracle needs real data")
    A, D, y = np.real(A), np.real(D), np.real(y)
    R, n = D.shape
    m = A.shape[0]
    c = np.concatenate([np.zeros(n), np.ones(2 * R)])
    Aeq = np.block([[D, -np.eye(R), np.eye(R)],
                    [A, np.zeros((m, 2 * R))]])
    beq = np.concatenate([np.zeros(R), y])
    bounds = [(None, None)] * n + [(0, None)] * (2 * R)
    res = linprog(c, A_eq=Aeq, b_eq=beq, bounds=bounds, method="highs-ds",
                  options={"primal_feasibility_tolerance": 1e-10,
                           "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        return OracleSolution(np.full(n, np.nan), np.nan, res.message)
    g = res.x[:n]
    return OracleSolution(g, float(np.abs(D @ g).sum()), "optimal")


def _cvxpy():
    try:
        import cvxpy as cp
    except ImportError as exc:     # pragma: no cover - optional dependency
        raise ImportError("the conic oracle needs cvxpy (pip install 'artifact[oracle]')") from exc
    return cp


def socp_oracle(A, D, y, delta: float = 0.0, alpha: Optional[float] = None) -> OracleSolution:
    """Conic reference solution (real or complex data).

    With ``alpha=None``: minimize ``‖Dg‖₁`` s.t. ``‖Ag - y‖₂ ≤ δ``.
    Otherwise: minimize ``α‖Dg‖₁ + ‖Ag - y‖₂²``.
    """
    cp = _cvxpy()
    A = as_operator(A, "A")
    D = as_operator(D, "D")
    y = np.asarray(y).ravel()
    n = D.shape[1]
    cplx = not (is_real(A) and is_real(D) and is_real(y))
    g = cp.Variable(n, complex=cplx)
    if not cplx:
        A, D, y = np.real(A), np.real(D), np.real(y)
    if alpha is None:
        prob = cp.Problem(cp.Minimize(cp.norm1(D @ g)), [cp.norm(A @ g - y, 2) <= delta])
    else:
        prob = cp.Problem(cp.Minimize(alpha * cp.norm1(D @ g) + cp.sum_squares(A @ g - y)))
    prob.solve(solver=cp.CLARABEL)
    if g.value is None:
        return OracleSolution(np.full(n, np.nan), np.nan, str(prob.status))
    gv = np.asarray(g.value)
    obj = float(np.abs(D @ gv).sum())
    if alpha is not None:
        obj = float(alpha * obj + np.linalg.norm(A @ gv - y) ** 2)
    return OracleSolution(gv, obj, str(prob.status))
