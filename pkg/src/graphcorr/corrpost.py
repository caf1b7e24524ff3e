"""Closed-form log-posterior of the between-columns correlation matrix.

The marginal posterior of the correlation matrix given standardized data is

    log pi(S | Z) = -(p/2) logdet(S) - ((n+1)/2) logdet(Z S^-1 Z^T)  - log c(S)

with the inner n x n determinant computed through ridge-adjusted Cholesky
(for n > p the product is rank deficient and always needs the ridge), and
c(S) the normalization over datasets, estimated by Monte Carlo.

The n x n log-determinant is evaluated through the exact reduction

    logdet(Z S^-1 Z^T + eps I_n)
        = (n - p) log eps + logdet(Z^T Z + eps S) - logdet(S)

whenever n > p, which avoids forming the n x n product; for n <= p the
product is generically full rank and is factored directly.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefinite
from .linalg import DEFAULT_RIDGE_POLICY, CholeskyFactor, cholesky, log_det

__all__ = [
    "CorrelationState",
    "ErrorModel",
    "NormalizationEstimate",
    "adjust_for_error",
    "apply_error_adjustment",
    "log_unnorm_posterior",
    "logdet_data_product",
    "estimate_normalization",
]


@dataclass(frozen=True)
class CorrelationState:
    """A unit-diagonal SPD correlation matrix with cached factorization."""

    s: np.ndarray
    chol: CholeskyFactor
    log_det_s: float

    @property
    def p(self):
        return self.s.shape[0]

    @classmethod
    def from_matrix(cls, s, ridge_policy=DEFAULT_RIDGE_POLICY, require_strict=False):
        """Validate and wrap a correlation matrix.

        ``require_strict`` refuses matrices that need any ridge to factor;
        otherwise the cached factor may carry a ridge while ``s`` itself is
        stored with its exact unit diagonal.
        """
        s = np.asarray(s, dtype=float)
        if s.ndim != 2 or s.shape[0] != s.shape[1]:
            raise ValueError("correlation matrix must be square")
        if not np.allclose(np.diagonal(s), 1.0, atol=1e-10):
            raise ValueError("correlation matrix must have unit diagonal")
        if not np.allclose(s, s.T, atol=1e-10):
            raise ValueError("correlation matrix must be symmetric")
        off = s[~np.eye(s.shape[0], dtype=bool)]
        if off.size and np.abs(off).max() >= 1.0:
            raise ValueError("off-diagonal entries must lie in (-1, 1)")
        s = 0.5 * (s + s.T)
        np.fill_diagonal(s, 1.0)
        factor = cholesky(s, ridge_policy)
        if require_strict and factor.ridge_applied > 0.0:
            raise NotPositiveDefinite("matrix is not strictly positive definite")
        return cls(s=s, chol=factor, log_det_s=log_det(factor))


@dataclass(frozen=True)
class ErrorModel:
    """Per-column standard deviations gamma of the measurement-error density.

    The error variance of column i is gamma[i]**2; gamma itself may carry
    either sign, only its square enters the adjustment.
    """

    gamma: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gamma", np.asarray(self.gamma, dtype=float))


def adjust_for_error(s_ij, gamma_i, gamma_j):
    """Shrink one correlation for measurement error on either variable.

    Returns s_ij / sqrt((1 + gamma_i^2) (1 + gamma_j^2)); the magnitude
    never increases, with equality only when both gammas vanish.
    """
    return s_ij / math.sqrt((1.0 + gamma_i**2) * (1.0 + gamma_j**2))


def apply_error_adjustment(s, gamma):
    """Apply the pairwise error shrinkage to a whole correlation matrix.

    Off-diagonals are scaled by 1/sqrt((1+gamma_i^2)(1+gamma_j^2)); the
    diagonal stays exactly 1.  SPD is preserved: the result equals
    D S D + (I - D^2) with D = diag(1/sqrt(1+gamma^2)), a congruence plus a
    positive-semidefinite diagonal.
    """
    gamma = np.asarray(gamma, dtype=float)
    w = 1.0 / np.sqrt(1.0 + gamma**2)
    out = s * np.outer(w, w)
    np.fill_diagonal(out, 1.0)
    return out


def _logdet_product_arrays(z, s_matrix, log_det_s, ridge_policy):
    """logdet of the ridge-adjusted product Z S^-1 Z^T; returns (value, eps)."""
    n, p = z.shape
    if n > p:
        gram = z.T @ z
        # trace(S^-1 Z^T Z) without the n x n product
        sinv_gram_trace = float(np.sum(np.linalg.solve(s_matrix, gram).diagonal()))
        eps = ridge_policy.start_scale * sinv_gram_trace / n
        inner = cholesky(gram + eps * s_matrix, ridge_policy)
        if inner.ridge_applied > 0.0:
            raise NotPositiveDefinite("ridged p-space factorization unexpectedly failed")
        return (n - p) * math.log(eps) + log_det(inner) - log_det_s, eps
    m = z @ np.linalg.solve(s_matrix, z.T)
    m = 0.5 * (m + m.T)
    factor = cholesky(m, ridge_policy)
    return log_det(factor), factor.ridge_applied


def logdet_data_product(z, state, ridge_policy=DEFAULT_RIDGE_POLICY):
    """Log-determinant of Z S^-1 Z^T under the ridge policy."""
    value, _ = _logdet_product_arrays(
        np.asarray(z, dtype=float), state.s, state.log_det_s, ridge_policy
    )
    return value


def log_unnorm_posterior(state, ds, ridge_policy=DEFAULT_RIDGE_POLICY):
    """Unnormalized log-posterior of a correlation state given the data."""
    z = ds.values if hasattr(ds, "values") else np.asarray(ds, dtype=float)
    n, p = z.shape
    if p != state.p:
        raise ValueError(f"state has p={state.p}, data has p={p}")
    inner, _ = _logdet_product_arrays(z, state.s, state.log_det_s, ridge_policy)
    return -(p / 2.0) * state.log_det_s - ((n + 1) / 2.0) * inner


@dataclass(frozen=True)
class NormalizationEstimate:
    """Monte-Carlo estimate of the posterior normalization, kept in log space.

    ``log_value`` is the log of the K-term average; ``log_std_error`` is the
    log of the standard error of the log-estimate (sd of the log-terms over
    sqrt(K)), the scale on which the estimate is usable at realistic n'.
    The linear-scale properties may over- or underflow for large n'.
    """

    log_value: float
    log_std_error: float
    k_samples: int

    @property
    def value(self):
        return math.exp(self.log_value)

    @property
    def std_error(self):
        return math.exp(self.log_std_error) if np.isfinite(self.log_std_error) else 0.0


def _norm_terms(g_draws, s_matrix, log_det_s, n_prime, ridge_policy, standardize_draws):
    """Log terms -((n'+1)/2) logdet(D_k S^-1 D_k^T) for colored draws."""
    lower = np.linalg.cholesky(s_matrix)
    colored = g_draws @ lower.T
    if standardize_draws and n_prime >= 2:
        mu = colored.mean(axis=1, keepdims=True)
        sd = colored.std(axis=1, keepdims=True)
        colored = (colored - mu) / sd
    k = g_draws.shape[0]
    terms = np.empty(k)
    for i in range(k):
        inner, _ = _logdet_product_arrays(colored[i], s_matrix, log_det_s, ridge_policy)
        terms[i] = -((n_prime + 1) / 2.0) * inner
    return terms


def _logsumexp(values):
    m = float(np.max(values))
    return m + math.log(float(np.exp(values - m).sum()))


def estimate_normalization(
    state,
    n_prime,
    k,
    seed,
    ridge_policy=DEFAULT_RIDGE_POLICY,
    standardize_draws=True,
    draw_seeds=None,
):
    """Estimate the normalization by averaging K inverse-determinant terms.

    K datasets of shape (n_prime, p) bearing the state's column correlation
    are simulated (Cholesky coloring, then column standardization when
    n_prime >= 2), and the average of |D S^-1 D^T|^(-(n'+1)/2) is formed in
    log space with log-sum-exp.  ``draw_seeds`` overrides the per-term
    seeds; passing the same seed K times makes every term identical.
    """
    if k < 2:
        raise ValueError("k must be >= 2")
    if n_prime < 1:
        raise ValueError("n_prime must be >= 1")
    p = state.p
    if draw_seeds is None:
        draw_seeds = [np.random.SeedSequence(entropy=seed, spawn_key=(i,)) for i in range(k)]
    g_draws = np.stack(
        [np.random.default_rng(sd).standard_normal((n_prime, p)) for sd in draw_seeds]
    )
    terms = _norm_terms(
        g_draws, state.s, state.log_det_s, n_prime, ridge_policy, standardize_draws
    )
    log_value = _logsumexp(terms) - math.log(k)
    sd_log = float(np.std(terms, ddof=1))
    log_se = math.log(sd_log / math.sqrt(k)) if sd_log > 0.0 else -math.inf
    return NormalizationEstimate(log_value=log_value, log_std_error=log_se, k_samples=k)
