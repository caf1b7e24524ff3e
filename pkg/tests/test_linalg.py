"""Factorization, triangular inversion, and log-determinant checks."""

import math

import numpy as np
import pytest

from graphcorr import (
    CholeskyFactor,
    NotPositiveDefinite,
    RidgePolicy,
    cholesky,
    invert_lower,
    log_det,
    spd_inverse,
)
from graphcorr.reference import TOY_SIGMA


def det_bruteforce(m):
    """Cofactor-expansion determinant, usable up to dim ~ 6."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n == 1:
        return m[0, 0]
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(m, 0, axis=0), j, axis=1)
        total += ((-1.0) ** j) * m[0, j] * det_bruteforce(minor)
    return total


def inverse_bruteforce(m):
    """Adjugate-formula inverse for dim <= 4; independent of any solver."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    det = det_bruteforce(m)
    adj = np.empty_like(m)
    for i in range(n):
        for j in range(n):
            minor = np.delete(np.delete(m, i, axis=0), j, axis=1)
            adj[j, i] = ((-1.0) ** (i + j)) * (det_bruteforce(minor) if n > 1 else 1.0)
    return adj / det


def random_spd(rng, n, jitter=0.5):
    a = rng.standard_normal((n, n))
    return a @ a.T + jitter * n * np.eye(n)


class TestCholesky:
    def test_identity(self):
        f = cholesky(np.eye(3))
        assert f.ridge_applied == 0.0
        np.testing.assert_allclose(f.lower, np.eye(3))

    def test_two_by_two(self):
        m = np.array([[4.0, 2.0], [2.0, 3.0]])
        f = cholesky(m)
        np.testing.assert_allclose(f.lower, [[2.0, 0.0], [1.0, math.sqrt(2.0)]])
        np.testing.assert_allclose(f.lower @ f.lower.T, m, atol=1e-12)

    def test_rank_deficient_gets_ridge(self):
        m = np.array([[1.0, 1.0], [1.0, 1.0]])
        # eigenvalue oracle: the matrix is genuinely rank deficient
        assert min(np.linalg.eigvalsh(m)) < 1e-12
        f = cholesky(m)
        assert f.ridge_applied > 0.0
        np.testing.assert_allclose(
            f.lower @ f.lower.T, m + f.ridge_applied * np.eye(2), atol=1e-10
        )

    def test_reconstruction_error_on_random_spd(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            n = int(rng.integers(1, 9))
            m = random_spd(rng, n)
            f = cholesky(m)
            recon = f.lower @ f.lower.T
            assert np.abs(recon - (m + f.ridge_applied * np.eye(n))).max() < 1e-10 * (
                1.0 + np.abs(m).max()
            )

    def test_ridge_iff_small_eigenvalue(self):
        rng = np.random.default_rng(5)
        policy = RidgePolicy()
        for _ in range(60):
            n = int(rng.integers(2, 6))
            m = random_spd(rng, n)
            if rng.uniform() < 0.5:
                # force rank deficiency
                v = rng.standard_normal(n)
                m = np.outer(v, v)
            f = cholesky(m)
            tol = policy.pivot_tol_scale * np.trace(m) / n
            eigmin = float(np.linalg.eigvalsh(m).min())
            if eigmin > 10.0 * tol:
                assert f.ridge_applied == 0.0
            if eigmin < 0.0:
                assert f.ridge_applied > 0.0

    def test_not_positive_definite_raises(self):
        m = np.array([[1.0, 0.0], [0.0, -5.0]])
        with pytest.raises(NotPositiveDefinite):
            cholesky(m)

    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError):
            cholesky(np.array([[1.0, 0.5], [0.2, 1.0]]))


class TestInvertLower:
    def test_identity(self):
        f = CholeskyFactor(lower=np.eye(4), ridge_applied=0.0)
        np.testing.assert_allclose(invert_lower(f), np.eye(4))

    def test_hand_case(self):
        f = CholeskyFactor(lower=np.array([[2.0, 0.0], [1.0, 1.0]]), ridge_applied=0.0)
        np.testing.assert_allclose(invert_lower(f), [[0.5, 0.0], [-0.5, 1.0]])

    def test_forward_substitution_matches_cofactor_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.integers(2, 5))
            m = random_spd(rng, n)
            f = cholesky(m)
            got = invert_lower(f)
            expected = inverse_bruteforce(f.lower)
            np.testing.assert_allclose(got, expected, atol=1e-8, rtol=1e-8)
            np.testing.assert_allclose(f.lower @ got, np.eye(n), atol=1e-10)


class TestSpdInverse:
    def test_identity(self):
        np.testing.assert_allclose(spd_inverse(np.eye(3)), np.eye(3))

    def test_closed_form_2x2(self):
        m = np.array([[2.0, 1.0], [1.0, 2.0]])
        np.testing.assert_allclose(
            spd_inverse(m), np.array([[2.0, -1.0], [-1.0, 2.0]]) / 3.0, atol=1e-12
        )

    def test_toy_matrix_yields_published_partials(self):
        psi = spd_inverse(TOY_SIGMA)
        d = np.sqrt(np.diagonal(psi))
        rho = -psi / np.outer(d, d)
        assert abs(rho[0, 1] - 0.9574) < 5e-4
        assert abs(rho[0, 2] - (-0.2114)) < 5e-4
        assert abs(rho[1, 2] - (-0.04897)) < 5e-5

    def test_involution_on_well_conditioned(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 7))
            m = random_spd(rng, n)
            if np.linalg.cond(m) > 1e6:
                continue
            np.testing.assert_allclose(spd_inverse(spd_inverse(m)), m, atol=1e-8, rtol=1e-8)

    def test_symmetry_of_result(self):
        rng = np.random.default_rng(9)
        m = random_spd(rng, 6)
        out = spd_inverse(m)
        assert np.abs(out - out.T).max() < 1e-10


class TestLogDet:
    def test_identity_zero(self):
        assert log_det(cholesky(np.eye(5))) == 0.0

    def test_diagonal_case(self):
        f = cholesky(np.diag([4.0, 9.0]))
        assert abs(log_det(f) - math.log(36.0)) < 1e-12

    def test_matches_eigenvalue_oracle(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            m = random_spd(rng, 6)
            expected = float(np.log(np.linalg.eigvalsh(m)).sum())
            assert abs(log_det(cholesky(m)) - expected) < 1e-8 * (1.0 + abs(expected))

    def test_factor_product_consistency(self):
        rng = np.random.default_rng(17)
        m = random_spd(rng, 5)
        f = cholesky(m)
        product = f.lower @ f.lower.T
        assert abs(log_det(cholesky(product)) - log_det(f)) < 1e-10 * (1 + abs(log_det(f)))
