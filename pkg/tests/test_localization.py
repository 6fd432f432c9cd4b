import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from framecs.diagnostics import i_p, intrinsic_localization, localization_constant
from framecs.transforms import haar_frame_redundant, haar_orthobasis, wavelet_levels

from conftest import seeds


class TestIp:
    def test_orthonormal_membership(self):
        G = np.eye(16)
        d = np.array([1, 5, 9])
        assert i_p(G, d, np.arange(4, 8), 0.5) == 1.0
        assert i_p(G, d, np.arange(10, 16), 0.5) == 0.0

    @settings(max_examples=30)
    @given(seeds(), st.sampled_from([1.0, 0.5, 0.25]))
    def test_single_index_brute_force(self, seed, p):
        D = haar_frame_redundant(4)
        G = D @ D.T
        rng = np.random.default_rng(seed)
        j = int(rng.integers(32))
        lam = np.sort(rng.choice(32, size=10, replace=False))
        ref = sum(abs(G[k, j]) ** p for k in lam)
        assert i_p(G, np.array([j]), lam, p) == pytest.approx(ref, rel=1e-12)

    def test_empty(self):
        assert i_p(np.eye(3), np.array([], int), np.arange(3), 1.0) == 0.0


class TestBounds:
    @pytest.mark.parametrize("p", [1.0, 0.5])
    def test_orthonormal_reduces_to_sparse_bound(self, p):
        D = haar_orthobasis(4)
        rep = intrinsic_localization(D, [1, 4, 9], [2, 4, 8, 16], p=p, samples=100)
        assert rep.I_total == pytest.approx(1.0)
        assert rep.bound_i == pytest.approx(3 ** (1 - p / 2))
        assert all(rep.checks.values())

    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_haar_frame_p5(self, seed):
        p = 5
        D = haar_frame_redundant(p)
        N = wavelet_levels(p, frame=True).boundaries
        delta = np.sort(np.random.default_rng(seed).choice(64, size=4, replace=False)) + 1
        rep = intrinsic_localization(D, delta, N, p=1.0, samples=500, seed=seed)
        for which in rep.required:
            assert rep.holds(which), which
        assert np.all(rep.observed_iii > 0)

    def test_dependent_rows(self):
        # rows 1 and 2 of the p=1 frame coincide
        rep = intrinsic_localization(haar_frame_redundant(1), [1, 2], [2, 4], samples=10)
        assert np.isinf(rep.pinv_norm) and np.isinf(rep.bound_i)
        assert np.all(np.isinf(rep.bound_iv))

    def test_localization_constant(self):
        assert localization_constant(np.eye(5), 2.0) == 1.0
        D = haar_frame_redundant(3)
        c = localization_constant(D, 1.0)
        G = np.abs(D @ D.T)
        idx = np.arange(16)
        assert np.all(G <= c * (1 + np.abs(idx[:, None] - idx[None, :])) ** -1.0 + 1e-15)
