import math

import numpy as np
import pytest
from conftest import (
    dense_mll,
    dense_node_moments,
    dense_predict,
    random_instance,
)
from hypothesis import given, settings
from hypothesis import strategies as st

from ebgp.exceptions import InvalidInputError, InvalidParameterError, \
    NumericalFailureError
from ebgp.kernel_gp import (
    GramCache,
    KernelParams,
    _chol_shifted,
    fit_gp,
    gram_matrix,
    kernel_eval,
    marginal_log_likelihood,
    posterior_node_moments,
    posterior_predict,
)


class TestKernelEval:
    def test_same_point_is_one(self):
        assert kernel_eval([0.3, 0.7], [0.3, 0.7], 0.123) == 1.0

    def test_known_values(self):
        # squared distance 2 at t=1 and squared distance 1 at t=0.5 both
        # evaluate to exp(-1)
        assert kernel_eval([0.0, 0.0], [1.0, 1.0], 1.0) == pytest.approx(math.exp(-1))
        assert kernel_eval([0.0], [1.0], 0.5) == pytest.approx(math.exp(-1))

    def test_symmetry(self):
        rng = np.random.default_rng(0)
        x, y = rng.random(3), rng.random(3)
        assert kernel_eval(x, y, 0.2) == kernel_eval(y, x, 0.2)

    def test_nonpositive_bandwidth_rejected(self):
        with pytest.raises(InvalidParameterError):
            kernel_eval([0.0], [1.0], 0.0)
        with pytest.raises(InvalidParameterError):
            kernel_eval([0.0], [1.0], -1.0)


class TestGramMatrix:
    def test_single_point(self):
        assert np.array_equal(gram_matrix(np.zeros((1, 2)), 0.7), [[1.0]])

    def test_identical_rows(self):
        X = np.ones((2, 3)) * 0.4
        assert np.array_equal(gram_matrix(X, 2.0), np.ones((2, 2)))

    def test_collinear_points(self):
        # points at 0, 1, 3 on a line with t=1: squared gaps 1, 4, 9
        X = np.array([[0.0], [1.0], [3.0]])
        K = gram_matrix(X, 1.0)
        assert K[0, 1] == pytest.approx(math.exp(-0.5), rel=1e-12)
        assert K[1, 2] == pytest.approx(math.exp(-2.0), rel=1e-12)
        assert K[0, 2] == pytest.approx(math.exp(-4.5), rel=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(InvalidInputError):
            gram_matrix(np.zeros((0, 2)), 1.0)

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=20, deadline=None)
    def test_symmetric_unit_diag_bounded_spectrum(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 20))
        X = rng.random((n, 3))
        K = gram_matrix(X, float(rng.uniform(0.05, 2.0)))
        assert np.array_equal(K, K.T)
        assert np.allclose(np.diag(K), 1.0)
        eig = np.linalg.eigvalsh(K)
        assert eig.min() >= -1e-10
        assert eig.max() <= n + 1e-10


class TestMarginalLogLikelihood:
    def test_scalar_case(self):
        # n=1: K=1, so A = 1 + sigma2
        val = marginal_log_likelihood(np.zeros((1, 1)), [2.0],
                                      KernelParams(0.5, 1.0))
        expected = -1.0 - 0.5 * math.log(2.0) - 0.5 * math.log(2 * math.pi)
        assert val == pytest.approx(expected, rel=1e-12)

    def test_scalar_zero_target(self):
        for s2 in (0.3, 1.7):
            val = marginal_log_likelihood(np.zeros((1, 1)), [0.0],
                                          KernelParams(1.0, s2))
            expected = -0.5 * math.log(1 + s2) - 0.5 * math.log(2 * math.pi)
            assert val == pytest.approx(expected, rel=1e-12)

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(42)
        for _ in range(20):
            X, Y, t, s2 = random_instance(rng)
            got = marginal_log_likelihood(X, Y, KernelParams(t, s2))
            assert got == pytest.approx(dense_mll(X, Y, t, s2), rel=1e-8)

    @given(st.integers(0, 10 ** 6))
    @settings(max_examples=20, deadline=None)
    def test_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        X, Y, t, s2 = random_instance(rng, n_max=15)
        perm = rng.permutation(len(Y))
        a = marginal_log_likelihood(X, Y, KernelParams(t, s2))
        b = marginal_log_likelihood(X[perm], Y[perm], KernelParams(t, s2))
        assert a == pytest.approx(b, rel=1e-9)

    def test_factorisation_failure_carries_attempts(self):
        bad = np.array([[1.0, 0.0], [0.0, -5.0]])  # not PSD even with jitter
        with pytest.raises(NumericalFailureError) as err:
            _chol_shifted(bad, 0.0)
        assert len(err.value.attempts) == 4


class TestPosteriorPredict:
    def test_scalar_training_point(self):
        X, Y, s2 = np.array([[0.2]]), np.array([3.0]), 0.5
        fit = fit_gp(X, Y, KernelParams(1.0, s2))
        pred = posterior_predict(fit, X)
        assert pred[0] == pytest.approx(3.0 / 1.5, rel=1e-12)

    def test_far_test_point_predicts_zero(self):
        X = np.random.default_rng(0).random((5, 2))
        fit = fit_gp(X, np.ones(5), KernelParams(0.01, 0.1))
        pred = posterior_predict(fit, X + 1e6)
        assert np.all(pred == 0.0)

    def test_matches_dense_solve(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            X, Y, t, s2 = random_instance(rng)
            Xt = rng.random((4, X.shape[1]))
            fit = fit_gp(X, Y, KernelParams(t, s2))
            got = posterior_predict(fit, Xt)
            np.testing.assert_allclose(got, dense_predict(X, Y, t, s2, Xt),
                                       rtol=1e-8, atol=1e-12)

    def test_dimension_mismatch(self):
        fit = fit_gp(np.zeros((2, 3)), [0.0, 1.0], KernelParams(1.0, 0.1))
        with pytest.raises(InvalidInputError):
            posterior_predict(fit, np.zeros((2, 2)))

    def test_interpolates_at_vanishing_noise(self):
        rng = np.random.default_rng(3)
        X = rng.random((10, 2))
        Y = rng.standard_normal(10)
        fit = fit_gp(X, Y, KernelParams(0.05, 1e-10))
        pred = posterior_predict(fit, X)
        np.testing.assert_allclose(pred, Y, rtol=1e-4)


class TestNodeMoments:
    def test_scalar_closed_form(self):
        y, s2 = 2.0, 0.5
        fit = fit_gp(np.zeros((1, 1)), [y], KernelParams(1.0, s2))
        mu, Sigma = posterior_node_moments(fit)
        assert mu[0] == pytest.approx(y / (1 + s2), rel=1e-12)
        assert Sigma[0, 0] == pytest.approx(s2 / (1 + s2), rel=1e-12)

    def test_zero_targets_zero_mean(self):
        X = np.random.default_rng(1).random((6, 2))
        fit = fit_gp(X, np.zeros(6), KernelParams(0.3, 0.2))
        mu, _ = posterior_node_moments(fit)
        assert np.all(mu == 0.0)

    def test_trace_bound(self):
        # posterior covariance trace never exceeds n * sigma2
        rng = np.random.default_rng(11)
        X = rng.random((10, 3))
        Y = rng.standard_normal(10)
        for s2 in (0.01, 0.3):
            fit = fit_gp(X, Y, KernelParams(0.2, s2))
            _, Sigma = posterior_node_moments(fit)
            assert np.trace(Sigma) <= 10 * s2 + 1e-10

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(5)
        X, Y, t, s2 = random_instance(rng, n_max=20)
        fit = fit_gp(X, Y, KernelParams(t, s2))
        mu, Sigma = posterior_node_moments(fit)
        mu_ref, Sigma_ref = dense_node_moments(X, Y, t, s2)
        np.testing.assert_allclose(mu, mu_ref, rtol=1e-8, atol=1e-12)
        np.testing.assert_allclose(Sigma, Sigma_ref, rtol=1e-7, atol=1e-10)


class TestGPFit:
    def test_stored_factor_reproduces_alpha(self):
        rng = np.random.default_rng(9)
        X, Y, t, s2 = random_instance(rng)
        fit = fit_gp(X, Y, KernelParams(t, s2))
        from scipy.linalg import cho_solve

        alpha_again = cho_solve((fit.chol_lower, True), fit.train_targets)
        np.testing.assert_allclose(alpha_again, fit.alpha, rtol=1e-10)

    def test_invalid_params(self):
        with pytest.raises(InvalidParameterError):
            KernelParams(0.0, 0.1)
        with pytest.raises(InvalidParameterError):
            KernelParams(1.0, -0.1)


class TestGramCache:
    def test_matches_fresh_gram(self):
        rng = np.random.default_rng(2)
        X = rng.random((8, 3))
        cache = GramCache(X)
        for t in (0.1, 0.5, 0.1):
            np.testing.assert_array_equal(cache.gram(t).copy(), gram_matrix(X, t))

    def test_affinity_matches_statistic(self):
        from ebgp.manifold_stats import harmonic_affinity_stat, kernel_affinity_stat

        rng = np.random.default_rng(4)
        X = rng.random((15, 2))
        cache = GramCache(X)
        assert cache.affinity(0.2) == pytest.approx(
            kernel_affinity_stat(X, 0.2), rel=1e-12)
        assert cache.harmonic_affinity(0.2) == pytest.approx(
            harmonic_affinity_stat(X, 0.2), rel=1e-12)

    def test_median_sq_dist(self):
        X = np.array([[0.0], [1.0], [3.0]])
        # pairwise squared distances {1, 4, 9}
        assert GramCache(X).median_sq_dist() == 4.0
