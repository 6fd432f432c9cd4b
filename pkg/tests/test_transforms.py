import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from framecs.errors import InvalidInputError
from framecs.linop import op_norm
from framecs.transforms import (FrameSpec, build_transform, dft_frequencies, dft_matrix,
                                frame_levels_for, haar_frame_redundant, haar_orthobasis,
                                wavelet_levels)

from conftest import seeds

FRAME_BOUND = 2 / (np.sqrt(2) - 1)


def fast_haar(x):
    """Pyramid averaging/differencing; returns [scaling, coarsest detail, ..., finest]."""
    a = np.asarray(x, dtype=float)
    details = []
    while a.size > 1:
        ev, od = a[0::2], a[1::2]
        details.insert(0, (ev - od) / np.sqrt(2))
        a = (ev + od) / np.sqrt(2)
    return np.concatenate([a] + details)


class TestDFT:
    def test_n1(self):
        np.testing.assert_allclose(dft_matrix(1), [[1.0]])

    def test_n2(self):
        np.testing.assert_allclose(dft_matrix(2), np.array([[1, 1], [1, -1]]) / np.sqrt(2),
                                   atol=1e-15)

    def test_constant_energy(self):
        y = dft_matrix(16) @ np.ones(16)
        assert abs(y[0]) == pytest.approx(4.0)
        assert np.abs(y[1:]).max() < 1e-12

    def test_order(self):
        np.testing.assert_array_equal(dft_frequencies(6), [0, 1, -1, 2, -2, 3])

    def test_zero(self):
        with pytest.raises(InvalidInputError):
            dft_matrix(0)

    @given(st.integers(1, 7), seeds())
    def test_against_fft(self, p, seed):
        n = 2 ** p
        x = np.random.default_rng(seed).standard_normal(n)
        ref = np.fft.fft(x)[np.mod(dft_frequencies(n), n)] / np.sqrt(n)
        np.testing.assert_allclose(dft_matrix(n) @ x, ref, atol=1e-10)
        assert np.linalg.norm(dft_matrix(n) @ x) == pytest.approx(np.linalg.norm(x), rel=1e-10)

    @pytest.mark.parametrize("n", [8, 64, 512])
    def test_unitary(self, n):
        V = dft_matrix(n)
        assert np.linalg.norm(V.conj().T @ V - np.eye(n), 2) <= 1e-10


class TestHaar:
    def test_p1(self):
        np.testing.assert_allclose(haar_orthobasis(1), np.array([[1, 1], [1, -1]]) / np.sqrt(2))

    @pytest.mark.parametrize("p", range(1, 9))
    def test_against_fast_transform(self, p):
        n = 2 ** p
        ref = np.column_stack([fast_haar(e) for e in np.eye(n)])
        np.testing.assert_allclose(haar_orthobasis(p), ref, atol=1e-12)

    def test_zero_mean_details(self):
        assert np.abs(haar_orthobasis(5)[1:].sum(axis=1)).max() < 1e-12

    def test_unit_rows_p2(self):
        np.testing.assert_allclose(np.linalg.norm(haar_orthobasis(2), axis=1), 1.0)


class TestFrame:
    def test_p1_rows(self):
        D = haar_frame_redundant(1)
        assert D.shape == (4, 2)
        np.testing.assert_allclose(D[0], [0.5, 0.5])
        np.testing.assert_allclose(D[1], [0.5, 0.5])

    def test_shift_convention(self):
        # shifted row at position 1 equals the unshifted row at position N
        D = haar_frame_redundant(3)
        np.testing.assert_allclose(D[1::2, 0], D[0::2, -1])
        np.testing.assert_allclose(D[1::2, 1:], D[0::2, :-1])

    @given(st.integers(1, 8), seeds())
    def test_parseval_vector(self, p, seed):
        x = np.random.default_rng(seed).standard_normal(2 ** p)
        D = haar_frame_redundant(p)
        assert np.linalg.norm(D.T @ (D @ x) - x) <= 1e-10

    @pytest.mark.parametrize("p", range(1, 11))
    def test_frame_bound(self, p):
        D = haar_frame_redundant(p)
        assert op_norm(D @ D.T, np.inf, np.inf) <= FRAME_BOUND + 1e-9

    def test_spec(self):
        spec = FrameSpec("haar-frame2", 4)
        assert spec.rows == 32 and spec.kind == "haar_frame2"
        assert FrameSpec("dft", 4).rows == 16
        np.testing.assert_array_equal(spec.matrix(), haar_frame_redundant(4))
        with pytest.raises(InvalidInputError):
            FrameSpec("haar", 0)
        with pytest.raises(InvalidInputError):
            build_transform("wavelet", 3)


class TestLevels:
    def test_basis(self):
        assert wavelet_levels(3).boundaries == (2, 4, 8)

    def test_frame(self):
        assert wavelet_levels(3, frame=True).boundaries == (4, 8, 16)
        assert frame_levels_for("haar-frame2", 3).boundaries == (4, 8, 16)

    @pytest.mark.parametrize("p", [1, 4, 7])
    def test_partition(self, p):
        lev = wavelet_levels(p, frame=True).levels
        idx = np.concatenate([np.arange(n)[s] for s, n in zip(lev.slices(), [lev.total] * lev.r)])
        np.testing.assert_array_equal(idx, np.arange(2 ** (p + 1)))

    def test_scales_match_rows(self):
        # every basis row in level k > 1 is supported on blocks of length 2^{p-k+1}
        p = 5
        H = haar_orthobasis(p)
        for k, sl in enumerate(wavelet_levels(p).levels.slices()[1:], start=2):
            widths = (np.abs(H[sl]) > 0).sum(axis=1)
            assert np.all(widths == 2 ** (p - k + 1))


def test_parseval_all_p():
    for p in range(1, 11):
        for D in (haar_orthobasis(p), haar_frame_redundant(p)):
            assert np.linalg.norm(D.T @ D - np.eye(2 ** p), 2) <= 1e-10
