"""Posterior-predictive model checking.

Held-out columns of a test set are sampled either conditionally on a fixed
modal correlation matrix (the normalization is constant and cancels) or
jointly with the correlation matrix using the train/test-stacked augmented
data.  Known cells are never modified.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .corrpost import CorrelationState, _logdet_product_arrays, _logsumexp, _norm_terms
from .errors import BadInput, EmptyTrace
from .graphmodel import upper_pairs
from .linalg import DEFAULT_RIDGE_POLICY
from .sampler import ChainConfig, _assemble, _draw_truncated, _tn_log_normalizer

__all__ = [
    "PredictionTask",
    "PredictionResult",
    "modal_correlation",
    "predict_conditional",
    "joint_predict",
]


@dataclass
class PredictionTask:
    """Columns to predict for a q-row test set, given the known columns."""

    train: object                 # StandardizedDataset
    known_cols: list
    unknown_cols: list
    known_values: np.ndarray      # (q, len(known_cols))

    def __post_init__(self):
        self.known_values = np.atleast_2d(np.asarray(self.known_values, dtype=float))
        p = self.train.n_cols
        cols = set(self.known_cols) | set(self.unknown_cols)
        if set(self.known_cols) & set(self.unknown_cols):
            raise BadInput("known and unknown columns must be disjoint")
        if any(c < 0 or c >= p for c in cols):
            raise BadInput("column index out of range")
        if self.known_values.shape[1] != len(self.known_cols):
            raise BadInput("known_values width must match known_cols")
        if self.q < 1:
            raise BadInput("test set needs at least one row")

    @property
    def q(self):
        return self.known_values.shape[0]


@dataclass
class PredictionResult:
    """Sampled unknown cells plus summaries."""

    unknown_cols: list
    cell_samples: np.ndarray      # (n_kept, q, n_unknown)
    modal_cells: np.ndarray       # (q, n_unknown)
    accept_rate: float
    corr_samples: np.ndarray = None  # (n_kept, m) for the joint sampler

    def column_samples(self, col):
        """All sampled values of one predicted column, pooled over cells."""
        j = self.unknown_cols.index(col)
        return self.cell_samples[:, :, j].ravel()


def modal_correlation(trace, bins=64, ridge_policy=DEFAULT_RIDGE_POLICY):
    """Mode of each off-diagonal marginal via a fixed-bin histogram.

    The midpoint of the highest-count bin over the post-burn-in samples is
    taken per element; the assembled matrix is nudged to SPD if needed.
    """
    post = trace.corr[trace.burn_in:]
    if post.shape[0] < 1:
        raise EmptyTrace("no post-burn-in iterations")
    p = trace.p
    pairs = upper_pairs(p)
    modal = np.empty(len(pairs))
    for idx in range(len(pairs)):
        x = post[:, idx]
        lo, hi = float(x.min()), float(x.max())
        if lo == hi:
            modal[idx] = lo
            continue
        counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
        b = int(np.argmax(counts))
        modal[idx] = 0.5 * (edges[b] + edges[b + 1])
    s = _assemble(p, pairs, modal)
    try:
        np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        eps = ridge_policy.start_scale
        while True:
            try:
                np.linalg.cholesky(s + eps * np.eye(p))
                break
            except np.linalg.LinAlgError:
                eps *= ridge_policy.growth
        s = (s + eps * np.eye(p)) / (1.0 + eps)
        np.fill_diagonal(s, 1.0)
    return CorrelationState.from_matrix(s, ridge_policy)


def _target(z, s_matrix, log_det_s, policy):
    n, p = z.shape
    inner, _ = _logdet_product_arrays(z, s_matrix, log_det_s, policy)
    return -(p / 2.0) * log_det_s - ((n + 1) / 2.0) * inner


def _assemble_test(task, cells):
    q, p = task.q, task.train.n_cols
    out = np.zeros((q, p))
    for k, c in enumerate(task.known_cols):
        out[:, c] = task.known_values[:, k]
    for k, c in enumerate(task.unknown_cols):
        out[:, c] = cells[:, k]
    return out


def predict_conditional(
    task,
    sigma_modal,
    cfg=None,
    prop_sd_cell=0.2,
    thin=1,
    block="joint",
    ridge_policy=DEFAULT_RIDGE_POLICY,
):
    """Random-walk MH over the unknown cells at a fixed correlation matrix.

    ``block='joint'`` proposes every unknown cell at once; ``'column'``
    sweeps one unknown column per sub-step, which mixes far better when
    q is large.  The normalization is constant at fixed sigma and cancels.
    """
    cfg = cfg or ChainConfig()
    rng = np.random.default_rng(cfg.seed)
    n_unknown = len(task.unknown_cols)
    cells = np.zeros((task.q, n_unknown))
    z = _assemble_test(task, cells)
    lp = _target(z, sigma_modal.s, sigma_modal.log_det_s, ridge_policy)
    kept = []
    accept = 0
    proposals = 0
    groups = (
        [list(range(n_unknown))] if block == "joint" else [[j] for j in range(n_unknown)]
    )
    for t in range(cfg.n_iter):
        for group in groups:
            cand = cells.copy()
            cand[:, group] += rng.normal(0.0, prop_sd_cell, size=(task.q, len(group)))
            z_cand = _assemble_test(task, cand)
            lp_cand = _target(z_cand, sigma_modal.s, sigma_modal.log_det_s, ridge_policy)
            proposals += 1
            if math.log(rng.uniform()) < lp_cand - lp:
                cells, lp = cand, lp_cand
                accept += 1
        if t >= cfg.resolved_burn_in() and (t % thin == 0):
            kept.append(cells.copy())
    if not kept:
        raise EmptyTrace("no post-burn-in iterations kept")
    samples = np.stack(kept)
    modal = _modal_cells(samples)
    return PredictionResult(
        unknown_cols=list(task.unknown_cols),
        cell_samples=samples,
        modal_cells=modal,
        accept_rate=accept / max(proposals, 1),
    )


def _modal_cells(samples, bins=64):
    n_kept, q, k = samples.shape
    out = np.empty((q, k))
    for a in range(q):
        for b in range(k):
            x = samples[:, a, b]
            lo, hi = float(x.min()), float(x.max())
            if lo == hi:
                out[a, b] = lo
                continue
            counts, edges = np.histogram(x, bins=bins, range=(lo, hi))
            i = int(np.argmax(counts))
            out[a, b] = 0.5 * (edges[i] + edges[i + 1])
    return out


def joint_predict(
    task,
    cfg=None,
    prop_sd_cell=0.2,
    thin=1,
    ridge_policy=DEFAULT_RIDGE_POLICY,
):
    """Learn the correlation matrix jointly with the unknown test cells.

    Each iteration proposes the unknown cells (Gaussian walk) and every
    off-diagonal correlation (truncated normal) and accepts or rejects the
    joint move against the posterior of the train/test-stacked augmented
    data, with Gaussian priors on the correlations centered at their
    empirical values.  With no unknown cells this is exactly the
    correlation block run on the stacked data.
    """
    cfg = cfg or ChainConfig()
    rng = np.random.default_rng(cfg.seed)
    p = task.train.n_cols
    pairs = upper_pairs(p)
    m = len(pairs)
    n_unknown = len(task.unknown_cols)

    cells = np.zeros((task.q, n_unknown))
    z_test = _assemble_test(task, cells)
    z_aug = np.vstack([task.train.values, z_test])

    emp = task.train.empirical_correlation()
    emp_off = np.array([emp[i, j] for i, j in pairs])
    cur = emp_off.copy()
    s_cur = _assemble(p, pairs, cur)
    try:
        np.linalg.cholesky(s_cur)
    except np.linalg.LinAlgError:
        cur = 0.95 * cur
        s_cur = _assemble(p, pairs, cur)
    ld_cur = float(np.linalg.slogdet(s_cur)[1])
    lp_cur = _target(z_aug, s_cur, ld_cur, ridge_policy)
    prior_sd = cfg.prior_corr_sd

    def ln_prior(v):
        d = v - emp_off
        return -0.5 * float(d @ d) / prior_sd**2

    prior_cur = ln_prior(cur)
    kept_cells, kept_corr = [], []
    accept = 0
    for t in range(cfg.n_iter):
        cand_cells = cells
        if n_unknown:
            cand_cells = cells + rng.normal(0.0, prop_sd_cell, size=cells.shape)
        prop = _draw_truncated(rng, cur, cfg.prop_sd_corr)
        s_prop = _assemble(p, pairs, prop)
        try:
            np.linalg.cholesky(s_prop)
            ok = True
        except np.linalg.LinAlgError:
            ok = False
        if ok:
            z_cand = np.vstack([task.train.values, _assemble_test(task, cand_cells)])
            ld_prop = float(np.linalg.slogdet(s_prop)[1])
            lp_prop = _target(z_cand, s_prop, ld_prop, ridge_policy)
            prior_prop = ln_prior(prop)
            corr_term = float(
                _tn_log_normalizer(cur, cfg.prop_sd_corr).sum()
                - _tn_log_normalizer(prop, cfg.prop_sd_corr).sum()
            )
            delta = (lp_prop + prior_prop) - (lp_cur + prior_cur) + corr_term
            if cfg.use_normalization:
                n_aug = z_aug.shape[0]
                ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(2, t))
                draws = np.random.default_rng(ss).standard_normal(
                    (cfg.k_norm, n_aug, p)
                )
                k_log = math.log(cfg.k_norm)
                lnc_cur = _logsumexp(_norm_terms(
                    draws, s_cur, ld_cur, n_aug, ridge_policy, True
                )) - k_log
                lnc_prop = _logsumexp(_norm_terms(
                    draws, s_prop, ld_prop, n_aug, ridge_policy, True
                )) - k_log
                delta += lnc_cur - lnc_prop
            if math.log(rng.uniform()) < delta:
                cells, cur, s_cur = cand_cells, prop, s_prop
                lp_cur, prior_cur, ld_cur = lp_prop, prior_prop, ld_prop
                accept += 1
        if t >= cfg.resolved_burn_in() and (t % thin == 0):
            kept_cells.append(cells.copy())
            kept_corr.append(cur.copy())
    if not kept_corr:
        raise EmptyTrace("no post-burn-in iterations kept")
    cell_samples = np.stack(kept_cells) if kept_cells else np.zeros((len(kept_corr), task.q, 0))
    result = PredictionResult(
        unknown_cols=list(task.unknown_cols),
        cell_samples=cell_samples,
        modal_cells=_modal_cells(cell_samples) if n_unknown else np.zeros((task.q, 0)),
        accept_rate=accept / cfg.n_iter,
        corr_samples=np.stack(kept_corr),
    )
    return result
