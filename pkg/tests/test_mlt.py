from dataclasses import replace

import numpy as np
import pytest
from numpy.testing import assert_allclose

from robust_mct.errors import ConvergenceError, DegenerateDataError, InvalidDesignError, NumericDomainError
from robust_mct.mct.contrast import max_t_test
from robust_mct.mlt.bernstein import BernsteinBasis, support_from_sample
from robust_mct.mlt.dunnett import colr_dunnett, linear_model_df, mlt_dunnett, odds_ratio_rows
from robust_mct.mlt.model import Link, fit_mlt
from robust_mct.models import GroupedSample


@pytest.fixture
def mlt_sample(rng):
    """Three groups of 20 with a clear upward shift in the last group."""
    return GroupedSample.from_arrays(
        [rng.normal(0.0, 1.0, 20), rng.normal(0.3, 1.0, 20), rng.normal(1.2, 1.0, 20)],
        labels=["0", "10", "20"],
    )


@pytest.fixture
def mlt_fit(mlt_sample):
    return fit_mlt(mlt_sample, order=5)


class TestBernstein:
    def test_partition_of_unity(self):
        basis = BernsteinBasis(6, (2.0, 5.0))
        y = np.linspace(2.0, 5.0, 41)
        assert_allclose(basis.evaluate(y).sum(axis=1), 1.0, atol=1e-12)

    def test_grid_coefficients_reproduce_identity(self):
        basis = BernsteinBasis(4, (-1.0, 3.0))
        y = np.linspace(-3.0, 6.0, 37)
        assert_allclose(basis.evaluate(y) @ basis.grid(), y, atol=1e-10)
        assert_allclose(basis.derivative(y) @ basis.grid(), 1.0, atol=1e-10)

    def test_derivative_matches_finite_differences(self):
        basis = BernsteinBasis(5, (0.0, 10.0))
        y = np.array([0.7, 3.3, 5.0, 9.1])
        eps = 1e-6
        numeric = (basis.evaluate(y + eps) - basis.evaluate(y - eps)) / (2 * eps)
        assert_allclose(basis.derivative(y), numeric, atol=1e-6)

    def test_invalid_basis(self):
        with pytest.raises(InvalidDesignError):
            BernsteinBasis(0, (0.0, 1.0))
        with pytest.raises(InvalidDesignError):
            BernsteinBasis(3, (1.0, 1.0))

    def test_support(self):
        lo, hi = support_from_sample(np.arange(101.0))
        assert lo == pytest.approx(1.0)
        assert hi == pytest.approx(99.0)
        with pytest.raises(DegenerateDataError):
            support_from_sample([4.0, 4.0, 4.0])


class TestFit:
    def test_converges(self, mlt_fit):
        assert mlt_fit.converged
        assert mlt_fit.gradient_norm < 1e-6
        assert mlt_fit.n_params == 6 + 2
        assert mlt_fit.df == mlt_fit.n_params
        assert max(mlt_fit.trace) <= mlt_fit.loglik + 1e-8

    def test_transformation_is_monotone(self, mlt_fit, mlt_sample):
        y = np.linspace(mlt_sample.values.min() - 1.0, mlt_sample.values.max() + 1.0, 400)
        assert np.all(np.diff(mlt_fit.transform(y)) > 0.0)
        assert np.all(mlt_fit.transform_deriv(y) > 0.0)
        assert np.all(np.diff(mlt_fit.theta) >= 0.0)

    def test_larger_responses_have_negative_shift(self, mlt_fit):
        assert mlt_fit.beta[1] < 0.0

    def test_information_matches_finite_difference_hessian(self, mlt_fit):
        params = np.concatenate([mlt_fit.theta, mlt_fit.beta])
        m1 = mlt_fit.theta.size
        eps = 1e-6
        numeric = np.empty((params.size, params.size))
        for j in range(params.size):
            step = np.zeros(params.size)
            step[j] = eps
            up, down = params + step, params - step
            numeric[:, j] = (
                mlt_fit.gradient_at(up[:m1], up[m1:]) - mlt_fit.gradient_at(down[:m1], down[m1:])
            ) / (2 * eps)
        assert_allclose(mlt_fit.hessian(), numeric, rtol=1e-4, atol=1e-6 * np.abs(numeric).max())

    def test_scores_sum_to_gradient(self, mlt_fit):
        assert_allclose(mlt_fit.scores().sum(axis=0), mlt_fit.gradient_at(mlt_fit.theta, mlt_fit.beta), atol=1e-10)
        assert np.max(np.abs(mlt_fit.scores().sum(axis=0))) < 1e-3

    def test_affine_invariance(self, mlt_sample, mlt_fit):
        shifted = fit_mlt(mlt_sample.map(lambda y: 3.0 * y + 100.0), order=5)
        assert_allclose(shifted.beta, mlt_fit.beta, atol=1e-4)

    def test_monotone_transformation_invariance(self, mlt_sample, mlt_fit):
        expanded = fit_mlt(mlt_sample.map(lambda y: np.exp(y / 2.0)), order=5)
        assert np.all(np.abs(expanded.beta - mlt_fit.beta) < 0.5 * mlt_fit.shift_std_errors)

    def test_order_one_normal_matches_dunnett(self, rng):
        sample = GroupedSample.from_arrays([rng.normal(m, 2.0, 20) for m in (0.0, 0.5, 1.0, 2.0)])
        model = fit_mlt(sample, order=1)
        z = mlt_dunnett(model).statistics
        t = max_t_test(sample).statistics
        assert_allclose(np.abs(z), np.abs(t), rtol=0.05)

    def test_too_few_observations(self):
        sample = GroupedSample.from_arrays([[1.0, 2.0], [3.0, 4.0], [2.0, 5.0]])
        with pytest.raises(InvalidDesignError):
            fit_mlt(sample, order=5)

    def test_strict_non_convergence(self, mlt_sample):
        with pytest.raises(ConvergenceError):
            fit_mlt(mlt_sample, order=5, gtol=0.0, max_iter=5, strict=True)

    def test_non_strict_flags(self, mlt_sample):
        model = fit_mlt(mlt_sample, order=5, gtol=0.0, max_iter=5)
        assert not model.converged

    def test_logistic_link(self, mlt_sample):
        model = fit_mlt(mlt_sample, link="logistic")
        assert model.link is Link.LOGISTIC
        assert model.converged


class TestMltDunnett:
    def test_wald_statistics(self, mlt_fit):
        res = mlt_dunnett(mlt_fit)
        assert_allclose(res.statistics, mlt_fit.beta / mlt_fit.shift_std_errors)
        assert res.labels == ["10 - 0", "20 - 0"]
        assert np.isinf(res.df)
        assert res.method == "mlt-normal"

    def test_linear_model_df(self, mlt_fit, mlt_sample):
        res = mlt_dunnett(mlt_fit, df=linear_model_df(mlt_fit))
        assert res.df == mlt_sample.n_total - 3

    def test_singular_covariance(self, mlt_fit):
        broken = replace(mlt_fit, covariance=np.full_like(mlt_fit.covariance, np.nan))
        with pytest.raises(NumericDomainError):
            mlt_dunnett(broken)


class TestColr:
    def test_odds_ratios(self, mlt_sample):
        res = colr_dunnett(mlt_sample)
        assert res.method == "colr"
        assert res.effect_name == "odds_ratio"
        assert res.labels == ["10/0", "20/0"]
        top = res.contrasts[1]
        assert top.effect > 1.0
        assert top.effect_lower <= top.effect <= top.effect_upper
        assert top.effect == pytest.approx(np.exp(-top.estimate))

    def test_tail_refers_to_odds_ratio(self, mlt_sample):
        greater = colr_dunnett(mlt_sample, tail="greater")
        two = colr_dunnett(mlt_sample)
        assert greater.tail.value == "greater"
        assert greater.contrasts[1].p_adjusted < two.contrasts[1].p_adjusted
        assert np.isinf(greater.contrasts[1].effect_upper)

    def test_requires_logistic_model(self, mlt_sample, mlt_fit):
        with pytest.raises(NumericDomainError):
            colr_dunnett(mlt_sample, model=mlt_fit)

    def test_odds_ratio_rows_bounds(self, mlt_sample):
        model = fit_mlt(mlt_sample, link=Link.LOGISTIC)
        res = mlt_dunnett(model)
        rows = odds_ratio_rows(res)
        for row in rows:
            assert row.effect_lower == pytest.approx(np.exp(-row.upper))
            assert row.effect_upper == pytest.approx(np.exp(-row.lower))
