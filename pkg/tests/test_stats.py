"""Hand-rolled statistics against reference implementations.

scipy is used here strictly as a test oracle; the library code must not
import it.
"""

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from asvkit.stats import (
    SIGNIFICANCE_LEVEL,
    ZeroVarianceError,
    descriptive,
    log_regression,
    pearson,
    shapiro_wilk,
    t_test_unpaired,
)

# fixed mixed-size datasets, all three Shapiro-Wilk size regimes
CANNED = [
    [2.1, 3.4, 1.9],
    [0.5, 0.9, 1.4, 2.2],
    [12.0, 9.5, 11.1, 10.2, 9.9, 13.4],
    [1.0, 1.0, 2.0, 3.0, 5.0, 8.0, 13.0, 21.0],
    [-0.3, 0.8, 0.1, -1.2, 0.4, 0.9, -0.5, 0.2, 1.1, -0.8],
    [4.7, 5.1, 4.9, 5.3, 5.0, 4.8, 5.2, 4.6, 5.4, 5.05, 4.95],
    [3.2, 1.8, 2.9, 3.7, 2.2, 3.1, 2.8, 3.9, 1.5, 2.6, 3.3, 2.0],
    list(np.linspace(0.0, 6.0, 17)),
    list(np.sin(np.arange(25) * 0.7) * 3.0 + 10.0),
    list(np.concatenate([np.full(6, 1.0), np.full(6, 1.001), [5.0, 9.0]])),
]


class TestDescriptive:
    def test_matches_numpy(self, rng):
        x = rng.normal(3.0, 2.0, size=41)
        d = descriptive(x)
        assert d.mean == pytest.approx(np.mean(x), abs=1e-12)
        assert d.std == pytest.approx(np.std(x, ddof=1), abs=1e-12)
        assert d.median == pytest.approx(np.median(x), abs=1e-12)
        assert d.value_range == (pytest.approx(np.min(x)), pytest.approx(np.max(x)))

    def test_single_sample_has_no_std(self):
        d = descriptive([4.2])
        assert d.std is None
        assert d.mean == 4.2

    def test_requires_samples(self):
        with pytest.raises(ValueError):
            descriptive([])


class TestShapiroWilk:
    @pytest.mark.parametrize("idx", range(len(CANNED)))
    def test_against_scipy(self, idx):
        data = CANNED[idx]
        got = shapiro_wilk(data)
        ref_w, ref_p = scipy.stats.shapiro(data)
        assert got.statistic == pytest.approx(ref_w, abs=2e-4)
        assert got.p_value == pytest.approx(ref_p, abs=1e-3)

    def test_random_normal_batches(self, rng):
        for n in (5, 12, 30, 80):
            data = rng.normal(size=n)
            got = shapiro_wilk(data)
            ref_w, ref_p = scipy.stats.shapiro(data)
            assert got.statistic == pytest.approx(ref_w, abs=2e-4)
            assert got.p_value == pytest.approx(ref_p, abs=1.5e-3)

    def test_statistic_in_unit_interval(self, rng):
        for _ in range(10):
            got = shapiro_wilk(rng.normal(size=int(rng.integers(3, 40))))
            assert 0.0 < got.statistic <= 1.0
            assert 0.0 <= got.p_value <= 1.0

    def test_obviously_nonnormal_rejects(self):
        data = [0.0] * 12 + [100.0] * 3
        got = shapiro_wilk(data)
        assert got.p_value < 0.01
        assert got.significant  # deviation from normality flagged

    def test_rejects_tiny_sample(self):
        with pytest.raises(ValueError):
            shapiro_wilk([1.0, 2.0])

    def test_rejects_constant_sample(self):
        with pytest.raises(ZeroVarianceError):
            shapiro_wilk([3.0, 3.0, 3.0, 3.0])


class TestTTest:
    A = [5.1, 4.9, 6.2, 5.8, 5.5, 4.7, 6.0, 5.3]
    B = [4.2, 4.8, 3.9, 4.5, 5.0, 4.1, 4.4]

    def test_pooled_against_scipy(self):
        got = t_test_unpaired(self.A, self.B)
        ref = scipy.stats.ttest_ind(self.A, self.B, equal_var=True)
        assert got.statistic == pytest.approx(ref.statistic, abs=1e-9)
        assert got.p_value == pytest.approx(ref.pvalue, abs=1e-6)

    def test_welch_against_scipy(self):
        got = t_test_unpaired(self.A, self.B, welch=True)
        ref = scipy.stats.ttest_ind(self.A, self.B, equal_var=False)
        assert got.statistic == pytest.approx(ref.statistic, abs=1e-9)
        assert got.p_value == pytest.approx(ref.pvalue, abs=1e-6)

    def test_canned_pairs_against_scipy(self, rng):
        for k in range(10):
            a = rng.normal(float(k), 1.0 + 0.1 * k, size=int(rng.integers(4, 30)))
            b = rng.normal(0.3 * k, 1.2, size=int(rng.integers(4, 30)))
            for welch in (False, True):
                got = t_test_unpaired(a, b, welch=welch)
                ref = scipy.stats.ttest_ind(a, b, equal_var=not welch)
                assert got.p_value == pytest.approx(ref.pvalue, abs=1e-6)

    def test_identical_samples_p_one(self):
        a = [1.0, 2.0, 3.0, 4.0]
        got = t_test_unpaired(a, list(a))
        assert got.statistic == pytest.approx(0.0, abs=1e-12)
        assert got.p_value == pytest.approx(1.0, abs=1e-9)
        assert not got.significant

    def test_significance_threshold(self):
        strong_a = list(np.arange(10) * 0.01 + 10.0)
        strong_b = list(np.arange(10) * 0.01)
        got = t_test_unpaired(strong_a, strong_b)
        assert got.p_value < SIGNIFICANCE_LEVEL
        assert got.significant

    def test_zero_variance_equal_means_trivial(self):
        got = t_test_unpaired([2.0, 2.0, 2.0], [2.0, 2.0, 2.0])
        assert (got.statistic, got.p_value) == (0.0, 1.0)

    def test_zero_variance_unequal_means_rejected(self):
        with pytest.raises(ZeroVarianceError):
            t_test_unpaired([2.0, 2.0, 2.0], [3.0, 3.0, 3.0])

    def test_requires_two_per_side(self):
        with pytest.raises(ValueError):
            t_test_unpaired([1.0], [2.0, 3.0])


class TestPearson:
    def test_hand_example_exact(self):
        assert pearson([1, 2, 3, 4], [2, 1, 4, 3]) == pytest.approx(0.6, abs=1e-12)

    def test_against_numpy(self, rng):
        x = rng.normal(size=25)
        y = 0.3 * x + rng.normal(size=25)
        assert pearson(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)

    def test_perfect_cases(self):
        x = [1.0, 2.0, 3.0]
        assert pearson(x, [2.0, 4.0, 6.0]) == 1.0
        assert pearson(x, [3.0, 2.0, 1.0]) == -1.0

    @given(
        st.floats(0.1, 50),
        st.floats(-20, 20),
    )
    @settings(max_examples=30)
    def test_positive_affine_invariance(self, scale, shift):
        x = [1.0, 2.0, 4.0, 8.0, 9.0]
        y = [0.5, 1.8, 1.2, 3.9, 3.0]
        base = pearson(x, y)
        assert pearson([scale * v + shift for v in x], y) == pytest.approx(base, abs=1e-9)

    def test_zero_variance_rejected(self):
        with pytest.raises(ZeroVarianceError):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    def test_clamped_to_unit(self, rng):
        x = rng.normal(size=400)
        r = pearson(x, list(x))
        assert -1.0 <= r <= 1.0


class TestLogRegression:
    def test_exact_log_line(self):
        a, b = 4.0, -1.5
        x = [10.0, 50.0, 200.0, 1000.0]
        y = [a + b * np.log(v) for v in x]
        fit = log_regression(x, y)
        assert fit.intercept == pytest.approx(a, abs=1e-10)
        assert fit.slope == pytest.approx(b, abs=1e-10)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_reference_curve_constants(self):
        # canonical training-size vs error-rate curve used by the report tool
        fit = log_regression([50, 500, 1500, 3000], [5.19, 1.87, 1.15, 0.90])
        assert fit.intercept == pytest.approx(9.1543237903, abs=1e-6)
        assert fit.slope == pytest.approx(-1.0809973418, abs=1e-6)
        assert fit.r_squared == pytest.approx(0.95, abs=0.005)

    def test_constant_y_gives_zero_r2(self):
        fit = log_regression([1.0, 10.0, 100.0], [2.0, 2.0, 2.0])
        assert fit.slope == pytest.approx(0.0, abs=1e-12)
        assert fit.r_squared == 0.0

    def test_rejects_nonpositive_x(self):
        with pytest.raises(ValueError):
            log_regression([0.0, 1.0, 2.0], [1.0, 2.0, 3.0])
        with pytest.raises(ValueError):
            log_regression([-1.0, 1.0, 2.0], [1.0, 2.0, 3.0])

    def test_r2_never_above_one(self, rng):
        for _ in range(20):
            x = np.abs(rng.normal(size=6)) + 0.5
            y = rng.normal(size=6)
            fit = log_regression(x, y)
            assert fit.r_squared <= 1.0
