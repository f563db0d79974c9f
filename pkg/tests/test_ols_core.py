import numpy as np
import pytest
import scipy.linalg as sla
from hypothesis import given
from hypothesis import strategies as st

from statreg.autocov import AutocovSequence, empirical_autocov
from statreg.errors import DimensionMismatch, InvalidData, NotSymmetric, RankDeficient
from statreg.ols_core import (
    RegressionData,
    classical_covariance,
    fit_ols,
    plugin_covariance,
    scale_free_check,
    toeplitz_matvec,
)

from conftest import random_design


def dense_plugin(fit, gamma_matrix):
    """Textbook sandwich with every matrix materialized."""
    x = fit.x
    d = np.diag(np.linalg.norm(x, axis=0))
    inv = np.linalg.inv(x.T @ x)
    return d @ inv @ x.T @ gamma_matrix @ x @ inv @ d


class TestFitOls:
    def test_identity_case(self):
        x = np.arange(1.0, 6.0)
        fit = fit_ols(RegressionData(x.copy(), x))
        assert fit.beta_hat == pytest.approx([1.0])
        assert np.allclose(fit.residuals, 0.0, atol=1e-14)
        assert fit.r_squared == 1.0

    def test_mean_minimizes_squared_error(self):
        fit = fit_ols(RegressionData([1.0, 2.0, 3.0], [[1.0], [1.0], [1.0]]))
        # brute force over a fine grid of candidate means
        grid = np.linspace(0, 4, 4001)
        losses = [np.sum((np.array([1, 2, 3]) - b) ** 2) for b in grid]
        assert fit.beta_hat[0] == pytest.approx(grid[int(np.argmin(losses))], abs=1e-3)
        assert fit.beta_hat[0] == pytest.approx(2.0, abs=1e-14)
        assert fit.rss == pytest.approx(2.0, abs=1e-13)

    def test_zero_response(self, rng):
        x = rng.standard_normal((20, 3))
        fit = fit_ols(RegressionData(np.zeros(20), x))
        assert np.all(fit.beta_hat == 0.0)
        assert fit.rss == 0.0

    def test_matches_lstsq_oracle(self, rng):
        data = random_design(rng, 50, 4)
        fit = fit_ols(data)
        ref = np.linalg.lstsq(data.x, data.y, rcond=None)[0]
        assert np.allclose(fit.beta_hat, ref, atol=1e-12)
        assert np.allclose(fit.xtx_inv, np.linalg.inv(data.x.T @ data.x), atol=1e-12)
        assert np.allclose(fit.d_n, np.linalg.norm(data.x, axis=0))
        assert fit.d_n[0] == pytest.approx(np.sqrt(50))

    def test_r_squared_uses_centered_total(self, rng):
        data = random_design(rng, 40, 3)
        fit = fit_ols(data)
        tss = np.sum((data.y - data.y.mean()) ** 2)
        assert fit.r_squared == pytest.approx(1 - fit.rss / tss, rel=1e-12)
        assert fit.sigma_hat == pytest.approx(np.sqrt(fit.rss / 37))

    def test_rank_deficient(self, rng):
        x = rng.standard_normal((10, 2))
        x = np.column_stack([x, x[:, 0] + x[:, 1]])
        with pytest.raises(RankDeficient):
            fit_ols(RegressionData(rng.standard_normal(10), x))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            RegressionData(np.zeros(4), np.zeros((5, 1)))

    def test_invalid_shapes(self):
        with pytest.raises(InvalidData):
            RegressionData(np.zeros(2), np.ones((2, 2)))
        with pytest.raises(InvalidData):
            RegressionData([1.0, np.nan, 2.0], np.ones(3))

    @given(
        seed=st.integers(0, 2**32 - 1),
        n=st.integers(5, 80),
        p=st.integers(1, 4),
    )
    def test_residual_orthogonality(self, seed, n, p):
        rng = np.random.default_rng(seed)
        data = RegressionData(rng.standard_normal(n) * 10, rng.standard_normal((n, p)))
        fit = fit_ols(data)
        assert np.max(np.abs(data.x.T @ fit.residuals)) < 1e-8 * np.linalg.norm(data.y)
        assert np.allclose(fit.residuals, data.y - data.x @ fit.beta_hat, atol=1e-10)


class TestScaleFree:
    def test_unit_scale(self, small_fit):
        rep = scale_free_check(small_fit, 1.0)
        assert rep["beta_rel_error"] == 0.0 and rep["ok"]

    def test_doubling(self, small_fit):
        rep = scale_free_check(small_fit, 2.0)
        assert np.allclose(rep["fit"].beta_hat, 2 * small_fit.beta_hat, rtol=1e-12)

    def test_large_scale(self, small_fit):
        rep = scale_free_check(small_fit, 1e6)
        assert rep["r_squared_rel_error"] < 1e-10
        assert rep["ok"]


class TestPlugin:
    def test_orthogonal_columns(self):
        n = 8
        x = sla.hadamard(n)[:, :3].astype(float)
        fit = fit_ols(RegressionData(np.arange(n, dtype=float), x))
        cov = plugin_covariance(fit, np.array([2.5]))
        assert np.allclose(cov.c_hat, 2.5 * np.eye(3), atol=1e-13)

    def test_single_intercept(self):
        fit = fit_ols(RegressionData(np.arange(7.0), np.ones((7, 1))))
        assert plugin_covariance(fit, np.eye(7)).c_hat[0, 0] == pytest.approx(1.0, abs=1e-14)

    def test_classical_special_case(self, small_fit):
        s2 = 1.7
        c = plugin_covariance(small_fit, np.array([s2])).c_hat
        assert np.allclose(c, classical_covariance(small_fit, s2), rtol=0, atol=1e-12 * s2)

    @given(seed=st.integers(0, 2**32 - 1), n=st.integers(6, 120), m=st.integers(0, 119))
    def test_banded_equals_dense(self, seed, n, m):
        rng = np.random.default_rng(seed)
        fit = fit_ols(random_design(rng, n, 3))
        g = empirical_autocov(rng.standard_normal(n), min(m, n - 1))
        banded = plugin_covariance(fit, g).c_hat
        dense = dense_plugin(fit, sla.toeplitz(g.padded(n)))
        scale = np.max(np.abs(dense))
        assert np.max(np.abs(banded - dense)) <= 1e-12 * max(scale, 1.0)

    def test_matrix_input(self, small_fit, rng):
        n = small_fit.n
        a = rng.standard_normal((n, n))
        m = a @ a.T / n
        assert np.allclose(
            plugin_covariance(small_fit, m).c_hat, dense_plugin(small_fit, m), atol=1e-12
        )

    def test_asymmetric_matrix_rejected(self, small_fit):
        m = np.eye(small_fit.n)
        m[0, 1] = 0.5
        with pytest.raises(NotSymmetric):
            plugin_covariance(small_fit, m)

    def test_vector_too_long(self, small_fit):
        with pytest.raises(DimensionMismatch):
            plugin_covariance(small_fit, np.ones(small_fit.n + 1))

    def test_permutation_with_scaled_identity(self, small_fit, rng):
        perm = rng.permutation(small_fit.n)
        data = small_fit.data
        other = fit_ols(RegressionData(data.y[perm], data.x[perm], data.column_names))
        a = plugin_covariance(small_fit, np.array([3.0])).c_hat
        b = plugin_covariance(other, np.array([3.0])).c_hat
        assert np.allclose(a, b, atol=1e-12)

    def test_toeplitz_matvec_oracle(self, rng):
        g = rng.standard_normal(5)
        x = rng.standard_normal((12, 2))
        assert np.allclose(toeplitz_matvec(g, x), sla.toeplitz(np.r_[g, np.zeros(7)]) @ x)

    def test_sequence_kept(self, small_fit):
        acv = AutocovSequence([1.0, 0.2], small_fit.n)
        assert plugin_covariance(small_fit, acv).gamma is acv
