"""Marginalized posterior, normalization estimator, and error adjustment."""

import math

import numpy as np
import pytest

from graphcorr import (
    CorrelationState,
    NotPositiveDefinite,
    adjust_for_error,
    estimate_normalization,
    log_unnorm_posterior,
    simulate,
    standardize,
)
from graphcorr.corrpost import _logdet_product_arrays, apply_error_adjustment
from graphcorr.linalg import DEFAULT_RIDGE_POLICY, cholesky, log_det
from graphcorr.reference import TOY_SIGMA


def random_corr(rng, p):
    a = rng.standard_normal((p, 2 * p))
    c = np.corrcoef(a)
    np.fill_diagonal(c, 1.0)
    return 0.5 * (c + c.T)


def logdet_direct(z, s):
    """Form the full n x n product and factor it: the slow reference path."""
    m = z @ np.linalg.solve(s, z.T)
    m = 0.5 * (m + m.T)
    f = cholesky(m)
    return log_det(f)


class TestCorrelationState:
    def test_accepts_valid(self):
        st = CorrelationState.from_matrix(TOY_SIGMA)
        assert st.p == 5
        assert st.chol.ridge_applied == 0.0

    def test_rejects_bad_diagonal(self):
        m = np.eye(3)
        m[0, 0] = 1.5
        with pytest.raises(ValueError):
            CorrelationState.from_matrix(m)

    def test_rejects_out_of_range_offdiag(self):
        m = np.eye(2)
        m[0, 1] = m[1, 0] = 1.0
        with pytest.raises(ValueError):
            CorrelationState.from_matrix(m)

    def test_strict_mode_rejects_ridged(self):
        m = np.eye(3)
        m[0, 1] = m[1, 0] = 0.999999999
        m[0, 2] = m[2, 0] = 0.999999999
        m[1, 2] = m[2, 1] = 0.999999998
        with pytest.raises((NotPositiveDefinite, ValueError)):
            CorrelationState.from_matrix(m, require_strict=True)


class TestLogUnnormPosterior:
    def test_scalar_case(self):
        st = CorrelationState.from_matrix(np.array([[1.0]]))
        z = np.array([[1.7]])
        assert log_unnorm_posterior(st, z) == pytest.approx(-math.log(1.7**2), abs=1e-12)

    def test_identity_two_by_two(self):
        st = CorrelationState.from_matrix(np.eye(2))
        assert log_unnorm_posterior(st, np.eye(2)) == pytest.approx(0.0, abs=1e-12)

    def test_reduction_matches_direct_path(self):
        # the p-space identity must reproduce the ridged n x n factorization
        rng = np.random.default_rng(21)
        for trial in range(12):
            p = int(rng.integers(2, 7))
            n = int(rng.integers(p + 1, 60))
            s = random_corr(rng, p)
            st = CorrelationState.from_matrix(s)
            z = standardize(simulate(s, n, seed=trial)).values
            fast, _ = _logdet_product_arrays(z, st.s, st.log_det_s, DEFAULT_RIDGE_POLICY)
            direct = logdet_direct(z, st.s)
            assert fast == pytest.approx(direct, rel=1e-9, abs=1e-5)

    def test_row_permutation_invariance(self):
        rng = np.random.default_rng(23)
        s = random_corr(rng, 4)
        st = CorrelationState.from_matrix(s)
        z = standardize(simulate(s, 40, seed=9)).values
        base = log_unnorm_posterior(st, z)
        perm = rng.permutation(40)
        assert log_unnorm_posterior(st, z[perm]) == pytest.approx(base, rel=1e-12)

    def test_continuity_in_offdiagonal(self):
        rng = np.random.default_rng(29)
        s = np.eye(3)
        s[0, 1] = s[1, 0] = 0.4
        st = CorrelationState.from_matrix(s)
        z = standardize(simulate(s, 30, seed=4)).values
        h = 1e-6
        vals = []
        for d in (-h, 0.0, h):
            sp = s.copy()
            sp[0, 1] = sp[1, 0] = 0.4 + d
            vals.append(log_unnorm_posterior(CorrelationState.from_matrix(sp), z))
        slope_left = (vals[1] - vals[0]) / h
        slope_right = (vals[2] - vals[1]) / h
        # first-order consistency of one-sided differences
        assert slope_left == pytest.approx(slope_right, rel=5e-3, abs=5e-3)

    def test_toy_data_ordering_is_deterministic(self):
        # The generating matrix does not dominate the identity here: for
        # n > p the inner determinant couples to the data only through the
        # trace-scaled ridge, which the unit-diagonal identity minimizes on
        # standardized data.  Freeze the computed ordering for this seed.
        st_true = CorrelationState.from_matrix(TOY_SIGMA)
        st_eye = CorrelationState.from_matrix(np.eye(5))
        z = standardize(simulate(TOY_SIGMA, 300, seed=7)).values
        at_true = log_unnorm_posterior(st_true, z)
        at_eye = log_unnorm_posterior(st_eye, z)
        assert np.isfinite(at_true) and np.isfinite(at_eye)
        assert at_eye > at_true


class TestEstimateNormalization:
    def test_identical_draws_give_zero_error(self):
        st = CorrelationState.from_matrix(np.eye(2))
        seeds = [np.random.SeedSequence(7)] * 6
        est = estimate_normalization(st, n_prime=5, k=6, seed=0, draw_seeds=seeds)
        assert est.std_error == 0.0
        single = estimate_normalization(st, n_prime=5, k=2, seed=0, draw_seeds=seeds[:2])
        assert est.log_value == pytest.approx(single.log_value, abs=1e-12)

    def test_scalar_monte_carlo_oracle(self):
        # p = 1, n' = 1: the estimator is the plain average of 1/z^2
        st = CorrelationState.from_matrix(np.array([[1.0]]))
        k, seed = 40, 123
        est = estimate_normalization(st, n_prime=1, k=k, seed=seed)
        draws = np.array(
            [
                np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(i,)))
                .standard_normal()
                for i in range(k)
            ]
        )
        oracle = float(np.mean(1.0 / draws**2))
        assert est.value == pytest.approx(oracle, rel=1e-10)

    def test_error_scaling_with_k(self):
        st = CorrelationState.from_matrix(np.array([[1.0, 0.3], [0.3, 1.0]]))
        wins = 0
        for seed in range(40):
            small = estimate_normalization(st, n_prime=12, k=20, seed=seed)
            big = estimate_normalization(st, n_prime=12, k=80, seed=seed + 5000)
            if big.log_std_error < small.log_std_error:
                wins += 1
        assert wins >= 30

    def test_log_value_finite_at_realistic_scale(self):
        st = CorrelationState.from_matrix(TOY_SIGMA)
        est = estimate_normalization(st, n_prime=300, k=5, seed=1)
        assert np.isfinite(est.log_value)

    def test_rejects_bad_arguments(self):
        st = CorrelationState.from_matrix(np.eye(2))
        with pytest.raises(ValueError):
            estimate_normalization(st, n_prime=5, k=1, seed=0)
        with pytest.raises(ValueError):
            estimate_normalization(st, n_prime=0, k=4, seed=0)


class TestErrorAdjustment:
    def test_zero_gammas_identity(self):
        assert adjust_for_error(0.7, 0.0, 0.0) == 0.7

    def test_hand_values(self):
        assert adjust_for_error(0.5, 1.0, 0.0) == pytest.approx(0.5 / math.sqrt(2.0), abs=1e-12)
        assert adjust_for_error(0.9914, 0.1, 0.0) == pytest.approx(
            0.9914 / math.sqrt(1.01), abs=1e-12
        )

    def test_never_increases_magnitude(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            s = float(rng.uniform(-1, 1))
            gi, gj = float(rng.normal()), float(rng.normal())
            out = adjust_for_error(s, gi, gj)
            assert abs(out) <= abs(s) + 1e-15
            if gi == 0.0 and gj == 0.0:
                assert out == s

    def test_matrix_adjustment_preserves_spd(self):
        rng = np.random.default_rng(33)
        s = TOY_SIGMA
        for _ in range(20):
            gamma = rng.normal(0, 0.5, size=5)
            out = apply_error_adjustment(s, gamma)
            assert np.all(np.diagonal(out) == 1.0)
            assert np.linalg.eigvalsh(out).min() > 0.0
