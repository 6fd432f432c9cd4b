import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from framecs.errors import (DivisionGuardError, InvalidBudgetError, InvalidCountsError,
                            InvalidInputError)
from framecs.levels import LevelStructure, as_levels
from framecs.sampling import (SamplingScheme, bernoulli_scheme, density_summary, full_scheme,
                              multilevel_scheme, named_scheme)

from conftest import seeds


@st.composite
def level_structures(draw):
    sizes = draw(st.lists(st.integers(1, 20), min_size=1, max_size=5))
    counts = [draw(st.integers(0, s)) for s in sizes]
    return LevelStructure(tuple(np.cumsum(sizes).tolist()), tuple(counts))


class TestLevelStructure:
    def test_bad_counts(self):
        with pytest.raises(InvalidCountsError):
            LevelStructure((4, 8), (5, 1))

    def test_non_increasing(self):
        with pytest.raises(InvalidInputError):
            LevelStructure((4, 4))

    def test_sizes_and_indices(self):
        lev = LevelStructure((10, 20, 40))
        assert lev.sizes == (10, 10, 20)
        np.testing.assert_array_equal(lev.indices(2), np.arange(11, 21))
        assert as_levels([2, 4], dim=10).boundaries == (2, 10)


class TestMultilevel:
    def test_full(self):
        lev = LevelStructure((4, 8), (4, 4))
        for seed in (0, 1, 99):
            np.testing.assert_array_equal(multilevel_scheme(lev, seed).omega, np.arange(1, 9))

    def test_counts(self):
        sch = multilevel_scheme(LevelStructure((4, 8), (2, 2)), 3)
        assert sch.omega.size == 4
        assert np.sum(sch.omega <= 4) == 2 and np.sum(sch.omega > 4) == 2

    @given(level_structures(), seeds())
    def test_strata_and_determinism(self, lev, seed):
        a = multilevel_scheme(lev, seed)
        b = multilevel_scheme(lev, seed)
        np.testing.assert_array_equal(a.omega, b.omega)
        lo = 0
        for sub, hi, m in zip(a.subsets, lev.boundaries, lev.counts):
            assert sub.size == m
            assert np.all((sub > lo) & (sub <= hi))
            assert np.unique(sub).size == sub.size
            lo = hi
        np.testing.assert_allclose(a.densities, np.array(lev.counts) / np.array(lev.sizes))

    def test_json_roundtrip(self):
        sch = multilevel_scheme(LevelStructure((4, 16), (3, 5)), 7)
        back = SamplingScheme.from_json(sch.to_json())
        np.testing.assert_array_equal(back.omega, sch.omega)
        assert back.levels == sch.levels and back.seed == 7 and back.kind == "multilevel"
        assert set(sch.to_json()) >= {"kind", "boundaries", "counts", "seed", "indices"}


class TestBernoulli:
    def test_full_and_empty(self):
        lev = LevelStructure((5, 10))
        np.testing.assert_array_equal(bernoulli_scheme(lev, 0, densities=[1, 1]).omega,
                                      np.arange(1, 11))
        assert bernoulli_scheme(lev, 0, densities=[0, 0]).omega.size == 0

    def test_mean_count(self):
        # binomial(100, 0.5): the mean over T draws has sd 5/sqrt(T)
        lev = LevelStructure((100,), (50,))
        T = 10_000
        counts = np.array([bernoulli_scheme(lev, s).realized_counts[0] for s in range(T)])
        assert abs(counts.mean() - 50) <= 3 * 5 / np.sqrt(T)
        assert counts.var() == pytest.approx(25, rel=0.1)

    def test_nominal_kept(self):
        sch = bernoulli_scheme(LevelStructure((10, 20), (5, 2)), 1)
        assert sch.levels.counts == (5, 2)
        assert sch.realized_counts == tuple(len(s) for s in sch.subsets)

    def test_bad_density(self):
        with pytest.raises(InvalidInputError):
            bernoulli_scheme(LevelStructure((4,)), 0, densities=[1.5])


class TestNamed:
    def test_half_half(self):
        sch = named_scheme("half_half", 130, 1024, seed=4, n_low=41)
        assert sch.omega.size == 130
        assert set(range(1, 42)) <= set(sch.omega.tolist())

    def test_lowest(self):
        np.testing.assert_array_equal(named_scheme("lowest", 130, 1024).omega, np.arange(1, 131))

    def test_uniform_exhaustive(self):
        np.testing.assert_array_equal(named_scheme("uniform", 1024, 1024, seed=2).omega,
                                      np.arange(1, 1025))

    def test_budget(self):
        with pytest.raises(InvalidBudgetError):
            named_scheme("uniform", 11, 10)

    def test_unknown(self):
        with pytest.raises(InvalidInputError):
            named_scheme("spiral", 5, 10)

    @given(st.integers(1, 64), seeds())
    def test_half_half_all_low_is_lowest(self, budget, seed):
        a = named_scheme("half_half", budget, 64, seed=seed, n_low=budget)
        b = named_scheme("lowest", budget, 64)
        np.testing.assert_array_equal(a.omega, b.omega)

    @given(st.sampled_from(["half_half", "uniform", "lowest"]), st.integers(0, 50), seeds())
    def test_deterministic_and_sized(self, kind, budget, seed):
        n_low = budget // 3 if kind == "half_half" else None
        a = named_scheme(kind, budget, 50, seed=seed, n_low=n_low)
        b = named_scheme(kind, budget, 50, seed=seed, n_low=n_low)
        np.testing.assert_array_equal(a.omega, b.omega)
        assert a.omega.size == budget and np.unique(a.omega).size == budget


class TestDensity:
    def test_full(self):
        q, qmin, qinv = density_summary(full_scheme(16, (4, 16)))
        np.testing.assert_array_equal(q, [1, 1])
        assert qmin == 1 and qinv == 1

    def test_arith(self):
        _, qmin, qinv = density_summary(multilevel_scheme(LevelStructure((4, 8), (4, 1)), 0))
        assert qmin == 0.25 and qinv == 4

    def test_three_levels(self):
        q, _, _ = density_summary(multilevel_scheme(LevelStructure((10, 20, 40), (10, 5, 5)), 0))
        np.testing.assert_allclose(q, [1, 0.5, 0.25])

    def test_zero_guard(self):
        with pytest.raises(DivisionGuardError):
            density_summary(multilevel_scheme(LevelStructure((4, 8), (4, 0)), 0))
