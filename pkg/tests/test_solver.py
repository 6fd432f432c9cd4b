import numpy as np
import pytest
import scipy.fft
from hypothesis import given, settings
from hypothesis import strategies as st

from framecs.errors import InvalidInputError, UndefinedReferenceError
from framecs.oracle import lp_oracle, socp_oracle
from framecs.sampling import full_scheme, named_scheme
from framecs.solver import (RecoveryProblem, SolverOptions, measure, project_ball, recover,
                            relative_error, soft_threshold, solve_constrained,
                            solve_unconstrained)
from framecs.transforms import dft_matrix, haar_frame_redundant

from conftest import seeds

DCT16 = scipy.fft.dct(np.eye(16), norm="ortho", axis=0)


def real_instance(seed, m=8, p=4):
    rng = np.random.default_rng(seed)
    n = 2 ** p
    x = np.repeat(rng.standard_normal(4), n // 4)
    omega = np.sort(rng.choice(n, size=m, replace=False)) + 1
    y = DCT16[omega - 1] @ x
    return RecoveryProblem(DCT16, haar_frame_redundant(p), omega, y, 0.0)


class TestProx:
    def test_soft_threshold_complex(self):
        v = np.array([3 + 4j, 0.5, -2.0])
        np.testing.assert_allclose(soft_threshold(v, 1.0), [(3 + 4j) * 0.8, 0, -1.0])

    def test_project_ball(self):
        c = np.zeros(2)
        np.testing.assert_allclose(project_ball(np.array([3.0, 4.0]), c, 1.0), [0.6, 0.8])
        np.testing.assert_allclose(project_ball(np.array([0.3, 0.4]), c, 1.0), [0.3, 0.4])


class TestConstrained:
    def test_full_sampling_exact(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal(16)
        V = dft_matrix(16)
        sol = recover(x, full_scheme(16), V, haar_frame_redundant(4))
        assert sol.converged
        assert np.linalg.norm(sol.g - x) <= 1e-8

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_lp(self, seed):
        prob = real_instance(seed)
        sol = solve_constrained(prob, SolverOptions(opt_tol=1e-9))
        ref = lp_oracle(prob.A, prob.D, prob.y)
        assert ref.status == "optimal"
        assert abs(sol.objective - ref.objective) <= 1e-6
        assert sol.residual <= 1e-8

    @pytest.mark.parametrize("seed", range(3))
    def test_complex_noisy_matches_cone(self, seed):
        rng = np.random.default_rng(seed)
        V, D = dft_matrix(16), haar_frame_redundant(4)
        x = np.repeat(rng.standard_normal(4), 4)
        sch = named_scheme("half_half", 8, 16, seed=seed, n_low=3)
        y = measure(x, sch, V, delta=0.05, noise_seed=seed)
        prob = RecoveryProblem(V, D, sch.omega, y, 0.05)
        sol = solve_constrained(prob, SolverOptions(opt_tol=1e-9))
        ref = socp_oracle(prob.A, D, y, delta=0.05)
        assert sol.residual <= 0.05 + 1e-8
        assert sol.objective == pytest.approx(ref.objective, rel=1e-5)

    def test_pdhg_agrees(self):
        prob = real_instance(11)
        a = solve_constrained(prob, SolverOptions(opt_tol=1e-8))
        b = solve_constrained(prob, SolverOptions(opt_tol=1e-8, method="pdhg"))
        assert b.objective == pytest.approx(a.objective, rel=1e-5)

    def test_deterministic(self):
        prob = real_instance(3)
        a, b = solve_constrained(prob), solve_constrained(prob)
        np.testing.assert_array_equal(a.g, b.g)
        assert a.iterations == b.iterations

    def test_converged_contract(self):
        prob = real_instance(4)
        opts = SolverOptions()
        sol = solve_constrained(prob, opts)
        assert sol.converged
        assert sol.residual <= prob.delta + opts.feas_tol
        assert sol.gap <= opts.opt_tol

    def test_degenerate_delta(self):
        prob = real_instance(5)
        big = RecoveryProblem(prob.V, prob.D, prob.omega, prob.y, float(np.linalg.norm(prob.y)))
        sol = solve_constrained(big)
        assert sol.objective <= SolverOptions().opt_tol

    def test_iteration_cap(self):
        sol = solve_constrained(real_instance(6), SolverOptions(max_iter=3))
        assert not sol.converged and sol.iterations == 3

    @settings(max_examples=8)
    @given(seeds())
    def test_enlarging_omega_never_lowers_objective(self, seed):
        # more rows means more equality constraints, so the minimum can only grow
        rng = np.random.default_rng(seed)
        x = np.repeat(rng.standard_normal(4), 4)
        perm = rng.permutation(16) + 1
        small, large = np.sort(perm[:5]), np.sort(perm[:9])
        D = haar_frame_redundant(4)
        opts = SolverOptions(opt_tol=1e-9)
        f_small = solve_constrained(RecoveryProblem(DCT16, D, small, DCT16[small - 1] @ x), opts)
        f_large = solve_constrained(RecoveryProblem(DCT16, D, large, DCT16[large - 1] @ x), opts)
        assert f_small.objective <= f_large.objective + 1e-6

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            RecoveryProblem(DCT16, haar_frame_redundant(4), [1, 2], [0.0, 0.0], -1.0)
        with pytest.raises(InvalidInputError):
            RecoveryProblem(DCT16, haar_frame_redundant(4), [1, 2], [0.0], 0.0)
        with pytest.raises(InvalidInputError):
            SolverOptions(opt_tol=0)


class TestUnconstrained:
    def test_large_alpha_gives_zero(self):
        prob = real_instance(1)
        alpha = 1e6 * np.abs(prob.A.T @ prob.y).max()
        sol = solve_unconstrained(prob, alpha)
        assert np.linalg.norm(sol.g) <= 1e-8

    @pytest.mark.parametrize("seed", range(3))
    def test_matches_cone_n8(self, seed):
        rng = np.random.default_rng(seed)
        V, D = dft_matrix(8), haar_frame_redundant(3)
        x = np.repeat(rng.standard_normal(2), 4)
        omega = np.sort(rng.choice(8, size=5, replace=False)) + 1
        y = V[omega - 1] @ x + 0.01 * rng.standard_normal(5)
        prob = RecoveryProblem(V, D, omega, y)
        sol = solve_unconstrained(prob, 0.1, SolverOptions(opt_tol=1e-9))
        ref = socp_oracle(prob.A, D, y, alpha=0.1)
        total = 0.1 * sol.objective + sol.data_term
        assert total == pytest.approx(ref.objective, abs=1e-6)

    def test_stationarity(self):
        prob = real_instance(2)
        opts = SolverOptions(opt_tol=1e-9)
        alpha = 0.05
        sol = solve_unconstrained(prob, alpha, opts)
        A, D = prob.A, prob.D
        nu = 2 * (A @ sol.g - prob.y)
        beta = sol.dual
        assert np.abs(beta).max() <= alpha * (1 + 1e-9)
        res = D.conj().T @ beta + A.conj().T @ nu
        assert np.abs(res).max() <= 1e-4 * (1 + np.abs(A.conj().T @ (A @ sol.g - prob.y)).max())

    def test_bad_alpha(self):
        with pytest.raises(InvalidInputError):
            solve_unconstrained(real_instance(0), 0.0)


class TestRelativeError:
    def test_values(self):
        x = np.array([3.0, 4.0])
        assert relative_error(x, x) == 0
        assert relative_error(2 * x, x) == pytest.approx(100)
        assert relative_error(x + np.array([5.0, 0]), x) == pytest.approx(100)

    def test_zero_reference(self):
        with pytest.raises(UndefinedReferenceError):
            relative_error(np.ones(2), np.zeros(2))

    def test_shape(self):
        with pytest.raises(InvalidInputError):
            relative_error(np.ones(2), np.ones(3))


def test_measure_noise_norm():
    V = dft_matrix(8)
    y0 = measure(np.ones(8), [1, 2, 3], V)
    y1 = measure(np.ones(8), [1, 2, 3], V, delta=0.3, noise_seed=1)
    assert np.linalg.norm(y1 - y0) == pytest.approx(0.3)


def test_lp_oracle_rejects_complex():
    with pytest.raises(InvalidInputError):
        lp_oracle(dft_matrix(4), np.eye(4), np.ones(4))
