import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framecs.diagnostics import (balancing_residuals, balancing_thresholds, minimal_balancing_m,
                                 tilde_m)
from framecs.errors import InvalidInputError
from framecs.transforms import dft_matrix, haar_frame_redundant

from conftest import seeds


def oracle_lhs(V, D, delta, M):
    """Both left-hand sides from explicit projector matrices."""
    rows = D[np.asarray(delta) - 1]
    Q = np.linalg.pinv(rows, rcond=1e-10) @ rows
    n = V.shape[1]
    P = np.zeros((V.shape[0], V.shape[0]))
    P[:M, :M] = np.eye(M)
    Pp = np.eye(V.shape[0]) - P
    Dh = D.conj().T
    Vh = V.conj().T
    l1 = np.linalg.norm(D @ Q @ Vh @ Pp @ V @ Q @ Dh, 2)
    A = D @ (np.eye(n) - Q) @ Vh @ P @ V @ Q @ Dh
    l2 = np.sqrt((np.abs(A) ** 2).sum(axis=1).max())
    return l1, l2


V5, D5 = dft_matrix(32), haar_frame_redundant(5)


class TestResiduals:
    def test_full_range(self):
        rep = balancing_residuals(V5, D5, 32, 64, 4, 1.0, 2.0, delta_sampler={"trials": 5})
        assert rep.lhs1 == 0 and rep.pass1

    def test_equal_kappas(self):
        t1, t2 = balancing_thresholds(3.0, 3.0, 2.0, 40)
        assert t1 == pytest.approx(1 / 8 / np.sqrt(np.log2(4 * np.sqrt(3) * 2 * 40)))
        assert t2 == pytest.approx(1 / (8 * np.sqrt(3)))

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            balancing_thresholds(2.0, 1.0, 1.0, 4)
        with pytest.raises(InvalidInputError):
            balancing_thresholds(1.0, 1.0, 0.5, 4)
        with pytest.raises(InvalidInputError):
            balancing_residuals(V5, D5, 33, 64, 2, 1.0, 1.0)

    @settings(max_examples=20)
    @given(seeds(), st.integers(1, 32), st.integers(1, 6))
    def test_against_oracle(self, seed, M, s):
        delta = np.sort(np.random.default_rng(seed).choice(64, size=s, replace=False)) + 1
        rep = balancing_residuals(V5, D5, M, 64, s, 1.0, 1.0, delta_sampler=[delta])
        l1, l2 = oracle_lhs(V5, D5, delta, M)
        assert rep.lhs1 == pytest.approx(l1, rel=1e-8, abs=1e-12)
        assert rep.lhs2 == pytest.approx(l2, rel=1e-8, abs=1e-12)

    def test_pass_flag_per_support(self):
        rep = balancing_residuals(V5, D5, 16, 64, 3, 1.0, 2.0, delta_sampler={"trials": 6, "seed": 1})
        assert rep.per_support.shape == (6, 2)
        assert rep.passed == bool(np.all(rep.per_support[:, 0] <= rep.threshold1)
                                  and np.all(rep.per_support[:, 1] <= rep.threshold2))


class TestSweep:
    def test_minimal_m_crosscheck(self):
        sw = minimal_balancing_m(V5, D5, 64, 4, 1.0, 4.0, delta_sampler={"trials": 5, "seed": 0})
        assert sw.M is not None
        sup = sw.at.supports
        worst_at = [max(v) for v in zip(*[oracle_lhs(V5, D5, d, sw.M) for d in sup])]
        assert worst_at[0] <= sw.at.threshold1 and worst_at[1] <= sw.at.threshold2
        if sw.M > 1:
            worst_below = [max(v) for v in zip(*[oracle_lhs(V5, D5, d, sw.M - 1) for d in sup])]
            assert not (worst_below[0] <= sw.below.threshold1
                        and worst_below[1] <= sw.below.threshold2)

    def test_stable(self):
        a = minimal_balancing_m(V5, D5, 64, 4, 1.0, 4.0, delta_sampler={"trials": 5, "seed": 2})
        b = minimal_balancing_m(V5, D5, 64, 4, 1.0, 4.0, delta_sampler={"trials": 5, "seed": 2})
        assert a.M == b.M
        np.testing.assert_array_equal(a.lhs1, b.lhs1)


class TestTildeM:
    def test_vanishing_tails(self):
        n, N, i0 = 12, 4, 7
        rng = np.random.default_rng(0)
        V = rng.standard_normal((n, n))
        V[:, i0 - 1:] = 0
        res = tilde_m(V, np.eye(n), M=n, N=N, kappa_max=1.0, q=1.0)
        assert res.index == i0 and res.value == pytest.approx(i0)

    def test_loose_thresholds(self):
        V, D = dft_matrix(16), np.eye(16)
        small = tilde_m(V, D, 16, 2, kappa_max=1e-6, q=1.0)
        assert small.index == 3

    def test_no_index(self):
        V, D = dft_matrix(8), haar_frame_redundant(3)
        res = tilde_m(V, D, 8, 16, kappa_max=4.0, q=0.5)
        assert res.index is None and res.value is None
        emb = tilde_m(V, D, 8, 16, kappa_max=4.0, q=0.5, embed=True)
        assert emb.index == 17 and emb.embedded

    @settings(max_examples=30)
    @given(seeds(), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
    def test_monotone_in_q(self, seed, q1, q2):
        lo, hi = sorted((q1, q2))
        rng = np.random.default_rng(seed)
        V = dft_matrix(16) * np.exp(-np.arange(16) / rng.uniform(1, 6))[None, :]
        D = haar_frame_redundant(4)
        a = tilde_m(V, D, 8, 12, 2.0, lo, embed=True)
        b = tilde_m(V, D, 8, 12, 2.0, hi, embed=True)
        assert a.index >= b.index

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            tilde_m(np.eye(3), np.eye(3), 3, 3, 1.0, 0.0)
