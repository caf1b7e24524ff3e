"""Dense symmetric linear algebra with ridge-adjusted Cholesky factorization.

Every factorization in the package funnels through :func:`cholesky`, which
adds the smallest ridge from a relative schedule whenever the input is not
numerically positive definite.  Determinants are handled exclusively in log
space; raw determinants of the n x n data products would overflow at the
problem sizes this library targets.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotPositiveDefinite

__all__ = [
    "RidgePolicy",
    "CholeskyFactor",
    "cholesky",
    "invert_lower",
    "spd_inverse",
    "log_det",
    "DEFAULT_RIDGE_POLICY",
]


@dataclass(frozen=True)
class RidgePolicy:
    """Relative ridge schedule for near-singular symmetric matrices.

    The ridge starts at ``start_scale * trace(m)/dim``, is multiplied by
    ``growth`` until factorization succeeds, and is capped at
    ``cap_scale * trace(m)/dim``.  A pivot counts as failed when the
    quantity under the square root falls below
    ``pivot_tol_scale * trace(m)/dim``.
    """

    start_scale: float = 1e-10
    growth: float = 10.0
    cap_scale: float = 1e-4
    pivot_tol_scale: float = 1e-12

    def schedule(self, scale):
        """Yield successive ridge values for a matrix of trace/dim ``scale``."""
        eps = self.start_scale * scale
        cap = self.cap_scale * scale
        while eps <= cap * (1.0 + 1e-12):
            yield eps
            eps *= self.growth


DEFAULT_RIDGE_POLICY = RidgePolicy()


@dataclass(frozen=True)
class CholeskyFactor:
    """Lower-triangular factor L with L @ L.T = m + ridge_applied * I."""

    lower: np.ndarray
    ridge_applied: float

    @property
    def dim(self):
        return self.lower.shape[0]


def _check_symmetric(m):
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if m.shape[0] < 1:
        raise ValueError("matrix must have dim >= 1")
    if not np.allclose(m, m.T, rtol=0.0, atol=1e-8 * (1.0 + np.abs(m).max())):
        raise ValueError("matrix must be symmetric")
    return m


def _try_factor(m, pivot_tol):
    """LAPACK Cholesky with an explicit pivot floor; None on failure.

    The diagonal of L squares to the quantity that stood under the square
    root, so a completed factorization with min(diag(L)^2) < pivot_tol is
    rejected exactly as a tolerance-aware pivot loop would.
    """
    try:
        low = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        return None
    d = np.diagonal(low)
    if (d * d).min() < pivot_tol:
        return None
    return low


def cholesky(m, ridge_policy=DEFAULT_RIDGE_POLICY):
    """Factor a symmetric matrix, ridging it just enough to succeed.

    Returns a :class:`CholeskyFactor` with ``ridge_applied == 0`` when the
    input is numerically positive definite, otherwise the smallest ridge of
    the policy schedule that makes every pivot pass the tolerance.

    Raises :class:`NotPositiveDefinite` when the capped schedule is
    exhausted.
    """
    m = _check_symmetric(m)
    scale = np.trace(m) / m.shape[0]
    if scale <= 0.0 or not np.isfinite(scale):
        scale = 1.0
    pivot_tol = ridge_policy.pivot_tol_scale * scale
    low = _try_factor(m, pivot_tol)
    if low is not None:
        return CholeskyFactor(lower=low, ridge_applied=0.0)
    eye = np.eye(m.shape[0])
    for eps in ridge_policy.schedule(scale):
        ridged = m + eps * eye
        pivot_tol = ridge_policy.pivot_tol_scale * np.trace(ridged) / m.shape[0]
        low = _try_factor(ridged, pivot_tol)
        if low is not None:
            return CholeskyFactor(lower=low, ridge_applied=eps)
    raise NotPositiveDefinite(
        "factorization failed at the maximum ridge "
        f"{ridge_policy.cap_scale * scale:.3e}"
    )


def invert_lower(factor):
    """Invert the lower-triangular factor by forward substitution."""
    low = factor.lower if isinstance(factor, CholeskyFactor) else np.asarray(factor)
    return scipy.linalg.solve_triangular(
        low, np.eye(low.shape[0]), lower=True, check_finite=False
    )


def spd_inverse(m, ridge_policy=DEFAULT_RIDGE_POLICY):
    """Inverse of a symmetric positive-definite matrix via M.T @ M.

    M is the forward-substitution inverse of the (possibly ridged) Cholesky
    factor, so the result is symmetric by construction.
    """
    factor = cholesky(m, ridge_policy)
    minv = invert_lower(factor)
    out = minv.T @ minv
    return 0.5 * (out + out.T)


def log_det(factor):
    """Log-determinant of the factored matrix: 2 * sum(log diag(L))."""
    return 2.0 * float(np.log(np.diagonal(factor.lower)).sum())
