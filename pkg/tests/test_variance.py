import numpy as np
import pytest
from numpy.testing import assert_allclose

from robust_mct.errors import DegenerateDataError, InvalidDesignError
from robust_mct.mct.contrast import dunnett_contrasts
from robust_mct.mct.mvt import dunnett_correlation
from robust_mct.mct.variance import HeteroSummary, pooled_variance, sandwich_covariance, satterthwaite
from robust_mct.models import GroupedSample


def _unit_variance(x):
    x = np.asarray(x, dtype=float)
    return (x - x.mean()) / x.std(ddof=1)


@pytest.fixture
def equal_variance_sample(rng):
    sizes = [6, 9, 12, 7]
    return GroupedSample.from_arrays([3.0 * _unit_variance(rng.standard_normal(n)) + i for i, n in enumerate(sizes)])


class TestPooled:
    def test_matches_definition(self, hetero_sample):
        s2, df = pooled_variance(hetero_sample)
        sizes = hetero_sample.sizes
        expected = np.sum((sizes - 1) * hetero_sample.variances) / np.sum(sizes - 1)
        assert s2 == pytest.approx(expected)
        assert df == hetero_sample.n_total - len(sizes)

    def test_summary_validation(self):
        with pytest.raises(InvalidDesignError):
            HeteroSummary(means=[0.0, 1.0], variances=[1.0, -1.0], sizes=[3, 3])
        with pytest.raises(InvalidDesignError):
            HeteroSummary(means=[0.0, 1.0], variances=[1.0, 1.0], sizes=[3, 1])


class TestSatterthwaite:
    def test_equal_variances_give_dunnett_correlation(self, equal_variance_sample):
        C = dunnett_contrasts(equal_variance_sample.k)
        _, corr = satterthwaite(equal_variance_sample, C)
        expected = dunnett_correlation(equal_variance_sample.sizes)
        assert_allclose(corr.entries, expected.entries, atol=1e-12)

    def test_two_group_df_is_welch(self, two_group_sample):
        dfs, _ = satterthwaite(two_group_sample, dunnett_contrasts(1))
        v0, v1 = two_group_sample.variances / two_group_sample.sizes
        n0, n1 = two_group_sample.sizes
        welch = (v0 + v1) ** 2 / (v0**2 / (n0 - 1) + v1**2 / (n1 - 1))
        assert dfs[0] == pytest.approx(welch)

    def test_df_bounds(self, hetero_sample):
        dfs, _ = satterthwaite(hetero_sample, dunnett_contrasts(hetero_sample.k))
        sizes = hetero_sample.sizes
        for i, df in enumerate(dfs, start=1):
            assert min(sizes[0], sizes[i]) - 1 <= df + 1e-9
            assert df <= sizes[0] + sizes[i] - 2 + 1e-9

    def test_zero_variance_group(self):
        sample = GroupedSample.from_arrays([[1.0, 2.0, 3.0], [4.0, 4.0, 4.0], [1.0, 5.0]])
        with pytest.raises(DegenerateDataError):
            satterthwaite(sample, dunnett_contrasts(2))


class TestSandwich:
    def test_hc3_group_mean_variance(self, hetero_sample):
        C = dunnett_contrasts(hetero_sample.k)
        cov, corr, df = sandwich_covariance(hetero_sample, C)
        mean_var = hetero_sample.variances / (hetero_sample.sizes - 1)
        expected = mean_var[0] + mean_var[1:]
        assert_allclose(np.diag(cov), expected, rtol=1e-8)
        assert_allclose(cov[0, 1], mean_var[0], rtol=1e-8)
        assert np.isinf(df)
        assert corr.dim == hetero_sample.k

    def test_df_override(self, hetero_sample):
        _, _, df = sandwich_covariance(hetero_sample, dunnett_contrasts(hetero_sample.k), df=35)
        assert df == 35.0

    def test_zero_standard_error(self):
        sample = GroupedSample.from_arrays([[2.0, 2.0, 2.0], [2.0, 2.0]])
        with pytest.raises(DegenerateDataError):
            sandwich_covariance(sample, dunnett_contrasts(1))
