import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framecs.diagnostics import check_theorem_conditions, golfing_L, solve_m_hat, theorem_L
from framecs.errors import DivisionGuardError, InvalidInputError
from framecs.transforms import dft_matrix, haar_frame_redundant, wavelet_levels

from conftest import seeds

V4, D4 = dft_matrix(16), haar_frame_redundant(4)
M4, N4 = [2, 4, 8, 16], [4, 8, 16, 32]


class TestLFactors:
    def test_theorem_L(self):
        val = theorem_L(np.exp(-1), 0.5, 64, 4.0)
        assert val == pytest.approx(1 + np.sqrt(np.log2(6 * np.e)) / np.log2(4 * 2 * 64 * 2))

    def test_golfing_L(self):
        val = golfing_L(0.25, 0.5, 4.0, 10.0, 3.0)
        a, b = 8 * 2 * 2 * 10, 4 * 2 * 2 * 10
        assert val == pytest.approx(np.sqrt(3 * (np.log(a) + np.log(24)) / np.log(b)))

    def test_guard(self):
        with pytest.raises(DivisionGuardError):
            theorem_L(0.3, 1.0, 1, 1 / 64)


class TestMHat:
    @settings(max_examples=25)
    @given(seeds(), st.integers(1, 4))
    def test_feasible_and_not_beaten(self, seed, r):
        rng = np.random.default_rng(seed)
        S = rng.integers(2, 40, size=r)
        a = rng.uniform(0, 0.2, size=(r, r))
        m, lhs = solve_m_hat(S, a)
        assert np.all(m >= 1 - 1e-9) and np.all(m <= S + 1e-9)
        assert lhs <= 1 + 1e-9
        # random feasible points never beat the returned total
        for _ in range(200):
            u = rng.uniform(1 / S, 1)
            if np.all(((S * u - 1)[:, None] * a).sum(axis=0) <= 1):
                assert np.sum(1 / u) >= m.sum() - 1e-6 * m.sum()


    @settings(max_examples=25)
    @given(seeds(), st.integers(1, 5), st.floats(0.2, 5.0))
    def test_against_conic_solver(self, seed, r, C):
        cp = pytest.importorskip("cvxpy")
        rng = np.random.default_rng(seed)
        S = rng.integers(1, 60, size=r).astype(float)
        a = rng.uniform(0, 0.5, size=(r, r))
        u = cp.Variable(r)
        prob = cp.Problem(cp.Minimize(cp.sum(cp.inv_pos(u))),
                          [C * (a.T @ (cp.multiply(S, u) - 1)) <= 1, u >= 1 / S, u <= 1])
        prob.solve(solver=cp.CLARABEL)
        m, lhs = solve_m_hat(S, a, C)
        assert m.sum() == pytest.approx(prob.value, rel=1e-6)
        assert lhs <= 1 + 1e-9


class TestReport:
    def test_full_sampling_branch(self):
        rep = check_theorem_conditions(V4, D4, M4, [2, 2, 4, 8], N4, [1, 1, 1, 1], trials=50)
        assert rep.full_sampling and rep.holds_with_probability_one
        # the m-hat system is met by m-hat = S, so its constraint holds for any constant
        assert rep.m_hat_constraint <= 1 + 1e-9
        small = check_theorem_conditions(V4, D4, M4, [2, 2, 4, 8], N4, [1, 1, 1, 1],
                                         trials=50, C_user=1e-4)
        assert small.condition_ii

    def test_single_level(self):
        rep = check_theorem_conditions(V4, D4, [16], [8], [32], [3], trials=20)
        rows = rep.rows()
        assert len(rows) == 1 and rows[0]["size"] == 16 and rows[0]["m"] == 8

    def test_slack_definitions(self):
        rep = check_theorem_conditions(V4, D4, M4, [2, 2, 3, 4], N4, [2, 1, 1, 0], trials=50,
                                       C_user=0.5)
        np.testing.assert_allclose(rep.cond_ii_slack, 1 - rep.cond_ii_value)
        np.testing.assert_allclose(rep.m_slack, np.array([2, 2, 3, 4]) - rep.m_required)
        assert rep.q == pytest.approx(4 / 8)
        assert rep.condition_ii == bool(np.all(rep.cond_ii_slack >= 0) and np.all(rep.m_slack >= 0))

    def test_constant_scales_linearly(self):
        kw = dict(trials=30, kappa=[1.0, 1.0, 1.0, 1.0], check_balancing=False)
        a = check_theorem_conditions(V4, D4, M4, [2, 2, 3, 4], N4, [1, 1, 1, 1], C_user=1.0, **kw)
        b = check_theorem_conditions(V4, D4, M4, [2, 2, 3, 4], N4, [1, 1, 1, 1], C_user=2.0, **kw)
        np.testing.assert_allclose(b.cond_ii_value, 2 * a.cond_ii_value)
        assert a.condition_i is None

    def test_p5_coarse_heavy(self):
        V, D = dft_matrix(32), haar_frame_redundant(5)
        M = wavelet_levels(5).boundaries
        N = wavelet_levels(5, frame=True).boundaries
        rep = check_theorem_conditions(V, D, M, [2, 2, 4, 6, 8], N, [3, 2, 1, 1, 0], trials=50)
        assert len(rep.rows()) == 5
        assert np.all(np.isfinite(rep.cond_ii_value))
        assert np.all(rep.m_recommended <= np.diff([0] + list(M)))
        assert rep.m_recommended[0] == 2          # M_0 = 0: first level fully sampled
        assert rep.balancing is not None

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            check_theorem_conditions(V4, D4, M4, [2, 2, 4, 8], N4, [1, 1, 1, 1], epsilon=0.5)
        with pytest.raises(InvalidInputError):
            check_theorem_conditions(V4, D4, M4, [2, 2, 4, 8], N4, [1, 1, 1, 1], C_user=0)
        with pytest.raises(InvalidInputError):
            check_theorem_conditions(V4, D4, M4, [2, 2, 4, 8], [32], [1], trials=5)
