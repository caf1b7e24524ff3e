"""Metropolis-within-Gibbs driver.

Block 1 updates the between-columns correlation matrix (and, optionally,
the per-column error standard deviations) against the marginalized
log-posterior, with the Monte-Carlo normalization included in the
acceptance ratio.  Block 2 updates the graph edges and their variances
against the freshly computed partial-correlation matrix.  Everything is
recorded per iteration; a chain is a deterministic function of
(data, config, seed).
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

from .corrpost import (
    _logdet_product_arrays,
    _logsumexp,
    apply_error_adjustment,
)
from .errors import BadInput, ChainDiverged, EmptyTrace
from .graphmodel import edge_log_posterior, partial_from_precision, upper_pairs
from .linalg import DEFAULT_RIDGE_POLICY

__all__ = [
    "ChainConfig",
    "ChainTrace",
    "run_chain",
    "initial_state",
    "hpd_interval",
    "save_trace",
    "load_trace",
]

_SIGMA_FLOOR = 1e-8


@dataclass(frozen=True)
class ChainConfig:
    """Tunable knobs of one chain; defaults target n ~ 300, p <= 12."""

    n_iter: int = 10000
    burn_in: int = None           # None -> 30% of n_iter
    prop_sd_corr: float = 0.05
    prop_sd_sigma: float = 0.05
    prop_sd_gamma: float = 0.05
    k_norm: int = 20
    n_prime: int = None           # None -> n
    seed: int = 0
    likelihood_form: str = "single_term"
    learn_error_variances: bool = False
    prior_corr: str = "uniform"   # or "gaussian_empirical"
    prior_corr_sd: float = 0.1
    use_normalization: bool = True
    standardize_norm_draws: bool = True
    corr_block: str = "joint"     # or "element": per-element sub-blocking
    sigma_max: float = 1.0        # upper support of the uniform prior on sigma
    divergence_window: int = 1000

    def resolved_burn_in(self):
        b = self.burn_in if self.burn_in is not None else int(0.3 * self.n_iter)
        if not 0 <= b < self.n_iter:
            raise BadInput(f"burn_in {b} must satisfy 0 <= burn_in < n_iter")
        return b

    def validate(self):
        if self.n_iter < 1:
            raise BadInput("n_iter must be >= 1")
        self.resolved_burn_in()
        for name in ("prop_sd_corr", "prop_sd_sigma", "prop_sd_gamma"):
            if getattr(self, name) <= 0:
                raise BadInput(f"{name} must be positive")
        if self.k_norm < 2:
            raise BadInput("k_norm must be >= 2")
        if self.likelihood_form not in ("single_term", "two_term"):
            raise BadInput(f"unknown likelihood_form {self.likelihood_form!r}")
        if self.prior_corr not in ("uniform", "gaussian_empirical"):
            raise BadInput(f"unknown prior_corr {self.prior_corr!r}")
        if self.corr_block not in ("joint", "element"):
            raise BadInput(f"unknown corr_block {self.corr_block!r}")
        return self


@dataclass
class ChainTrace:
    """Per-iteration record of one chain.

    ``corr`` holds the raw learnt correlation parameters (upper triangle in
    lexicographic pair order); when error variances are learnt, the matrix
    entering the data likelihood is the error-adjusted one, but the recorded
    parameters and the partial correlations feeding the graph block are the
    raw, error-free values.
    """

    p: int
    corr: np.ndarray           # (n_iter, m)
    edges: np.ndarray          # (n_iter, m) uint8
    variances: np.ndarray      # (n_iter, m) sigma_ij^2
    log_post_corr: np.ndarray  # (n_iter,)
    log_post_graph: np.ndarray  # (n_iter,), the recorded ln p^(t)
    burn_in: int
    gamma: np.ndarray = None   # (n_iter, p) when error variances are learnt
    accept_corr: int = 0
    accept_graph: int = 0      # accepted pair updates
    column_names: list = field(default_factory=list)

    @property
    def n_iter(self):
        return self.corr.shape[0]

    @property
    def n_post(self):
        return self.n_iter - self.burn_in

    def pairs(self):
        return upper_pairs(self.p)

    def corr_matrix(self, t):
        s = np.eye(self.p)
        for idx, (i, j) in enumerate(self.pairs()):
            s[i, j] = s[j, i] = self.corr[t, idx]
        return s


def _assemble(p, pairs, offdiag):
    s = np.eye(p)
    for idx, (i, j) in enumerate(pairs):
        s[i, j] = s[j, i] = offdiag[idx]
    return s


def _try_cholesky(s):
    try:
        return np.linalg.cholesky(s)
    except np.linalg.LinAlgError:
        return None


def _tn_log_normalizer(mean, sd):
    # log of Phi((1-mean)/sd) - Phi((-1-mean)/sd), elementwise
    return np.log(ndtr((1.0 - mean) / sd) - ndtr((-1.0 - mean) / sd))


def _draw_truncated(rng, mean, sd):
    """Rejection-sample a normal onto (-1, 1); cheap at these widths."""
    out = np.empty_like(mean)
    for i in range(mean.size):
        while True:
            x = rng.normal(mean[i], sd)
            if -1.0 < x < 1.0:
                out[i] = x
                break
    return out


class _PosteriorEngine:
    """Caches the data Gram matrix and evaluates the block-1 target."""

    def __init__(self, z, cfg, ridge_policy=DEFAULT_RIDGE_POLICY):
        self.z = z
        self.n, self.p = z.shape
        self.cfg = cfg
        self.policy = ridge_policy
        self.n_prime = cfg.n_prime if cfg.n_prime is not None else self.n

    def log_unnorm(self, s_eff, log_det_s_eff):
        inner, _ = _logdet_product_arrays(self.z, s_eff, log_det_s_eff, self.policy)
        return -(self.p / 2.0) * log_det_s_eff - ((self.n + 1) / 2.0) * inner

    def ln_chat(self, s_eff, lower_eff, log_det_s_eff, g_draws):
        """Log of the K-term normalization estimate under shared draws."""
        n_prime = g_draws.shape[1]
        colored = g_draws @ lower_eff.T
        if self.cfg.standardize_norm_draws and n_prime >= 2:
            mu = colored.mean(axis=1, keepdims=True)
            sd = colored.std(axis=1, keepdims=True)
            colored = (colored - mu) / sd
        k = g_draws.shape[0]
        terms = np.empty(k)
        for i in range(k):
            inner, _ = _logdet_product_arrays(
                colored[i], s_eff, log_det_s_eff, self.policy
            )
            terms[i] = -((n_prime + 1) / 2.0) * inner
        return _logsumexp(terms) - math.log(k)


def initial_state(ds, cfg, ridge_policy=DEFAULT_RIDGE_POLICY):
    """Empirical-correlation start with |rho| >= 0.5 edges and sigma^2 = 0.25.

    Returns (corr_matrix, edges, variances, gamma0).  The empirical matrix
    is nudged onto the SPD cone (ridge then re-normalization to unit
    diagonal) when needed.
    """
    s = ds.empirical_correlation()
    low = _try_cholesky(s)
    if low is None:
        scale = 1.0  # unit trace/dim for a correlation matrix
        eps = ridge_policy.start_scale * scale
        while True:
            try:
                np.linalg.cholesky(s + eps * np.eye(s.shape[0]))
                break
            except np.linalg.LinAlgError:
                eps *= ridge_policy.growth
        s = s + eps * np.eye(s.shape[0])
        d = np.sqrt(np.diagonal(s))
        s = s / np.outer(d, d)
        np.fill_diagonal(s, 1.0)
    p = s.shape[0]
    psi = np.linalg.inv(s)
    rho = partial_from_precision(psi)
    edges = (np.abs(np.triu(rho, 1)) >= 0.5).astype(np.uint8)
    variances = np.zeros((p, p))
    iu = np.triu_indices(p, 1)
    variances[iu] = 0.25
    gamma0 = np.zeros(p)
    return s, edges, variances, gamma0


def run_chain(ds, cfg, ridge_policy=DEFAULT_RIDGE_POLICY):
    """Run the two-block sampler and return the full trace."""
    cfg.validate()
    z = ds.values
    n, p = z.shape
    pairs = upper_pairs(p)
    m = len(pairs)
    rng = np.random.default_rng(cfg.seed)
    engine = _PosteriorEngine(z, cfg, ridge_policy)
    burn_in = cfg.resolved_burn_in()

    s0, edges0, var0, gamma0 = initial_state(ds, cfg, ridge_policy)
    emp_offdiag = np.array([s0[i, j] for i, j in pairs])

    cur = emp_offdiag.copy()
    cur_gamma = gamma0.copy()
    s_cur = _assemble(p, pairs, cur)
    s_cur_eff = (
        apply_error_adjustment(s_cur, cur_gamma)
        if cfg.learn_error_variances
        else s_cur
    )
    low_cur = _try_cholesky(s_cur_eff)
    if low_cur is None:
        raise BadInput("initial correlation state is not positive definite")
    ld_cur = 2.0 * float(np.log(np.diagonal(low_cur)).sum())
    lp_cur = engine.log_unnorm(s_cur_eff, ld_cur)

    def ln_prior(offdiag):
        if cfg.prior_corr == "gaussian_empirical":
            d = offdiag - emp_offdiag
            return -0.5 * float(d @ d) / cfg.prior_corr_sd**2
        return 0.0

    prior_cur = ln_prior(cur)

    g_cur = np.array([edges0[i, j] for i, j in pairs], dtype=np.uint8)
    sig_cur = np.array([math.sqrt(var0[i, j]) for i, j in pairs])

    trace = ChainTrace(
        p=p,
        corr=np.empty((cfg.n_iter, m)),
        edges=np.empty((cfg.n_iter, m), dtype=np.uint8),
        variances=np.empty((cfg.n_iter, m)),
        log_post_corr=np.empty(cfg.n_iter),
        log_post_graph=np.empty(cfg.n_iter),
        burn_in=burn_in,
        gamma=np.empty((cfg.n_iter, p)) if cfg.learn_error_variances else None,
        column_names=list(getattr(ds, "column_names", []) or []),
    )

    psi = np.linalg.inv(s_cur)
    rho = partial_from_precision(psi)
    rho_pairs = np.array([rho[i, j] for i, j in pairs])

    def record(t):
        trace.corr[t] = cur
        trace.edges[t] = g_cur
        trace.variances[t] = sig_cur**2
        trace.log_post_corr[t] = lp_cur
        var_mat = np.zeros((p, p))
        g_mat = np.zeros((p, p))
        for idx, (i, j) in enumerate(pairs):
            var_mat[i, j] = sig_cur[idx] ** 2
            g_mat[i, j] = g_cur[idx]
        trace.log_post_graph[t] = edge_log_posterior(
            g_mat, np.where(var_mat > 0, var_mat, 1.0), rho, cfg.likelihood_form
        )
        if trace.gamma is not None:
            trace.gamma[t] = cur_gamma

    record(0)
    last_accept = 0

    element_groups = (
        [list(range(m))] if cfg.corr_block == "joint" else [[j] for j in range(m)]
    )

    for t in range(1, cfg.n_iter):
        # ---- block 1: correlation (and gamma) update -------------------
        it_draws = None
        if cfg.use_normalization:
            ss = np.random.SeedSequence(entropy=cfg.seed, spawn_key=(1, t))
            it_draws = np.random.default_rng(ss).standard_normal(
                (cfg.k_norm, engine.n_prime, p)
            )
        for group in element_groups:
            prop = cur.copy()
            prop[group] = _draw_truncated(rng, cur[group], cfg.prop_sd_corr)
            if cfg.learn_error_variances:
                prop_gamma = rng.normal(cur_gamma, cfg.prop_sd_gamma)
            else:
                prop_gamma = cur_gamma
            s_prop = _assemble(p, pairs, prop)
            low_raw = _try_cholesky(s_prop)
            if low_raw is None:
                continue  # outside the SPD support: reject outright
            s_prop_eff = (
                apply_error_adjustment(s_prop, prop_gamma)
                if cfg.learn_error_variances
                else s_prop
            )
            low_prop = _try_cholesky(s_prop_eff) if cfg.learn_error_variances else low_raw
            if low_prop is None:
                continue
            ld_prop = 2.0 * float(np.log(np.diagonal(low_prop)).sum())
            lp_prop = engine.log_unnorm(s_prop_eff, ld_prop)
            prior_prop = ln_prior(prop)
            corr_term = float(
                _tn_log_normalizer(cur[group], cfg.prop_sd_corr).sum()
                - _tn_log_normalizer(prop[group], cfg.prop_sd_corr).sum()
            )
            delta = (lp_prop + prior_prop) - (lp_cur + prior_cur) + corr_term
            if cfg.use_normalization:
                lnc_cur = engine.ln_chat(s_cur_eff, low_cur, ld_cur, it_draws)
                lnc_prop = engine.ln_chat(s_prop_eff, low_prop, ld_prop, it_draws)
                delta += lnc_cur - lnc_prop
            if math.log(rng.uniform()) < delta:
                cur = prop
                cur_gamma = prop_gamma
                s_cur, s_cur_eff, low_cur = s_prop, s_prop_eff, low_prop
                lp_cur, prior_cur, ld_cur = lp_prop, prior_prop, ld_prop
                trace.accept_corr += 1
                last_accept = t

        psi = np.linalg.inv(s_cur)
        rho = partial_from_precision(psi)
        rho_pairs = np.array([rho[i, j] for i, j in pairs])

        # ---- block 2: per-pair edge and variance update ----------------
        form = cfg.likelihood_form
        for idx in range(m):
            r = rho_pairs[idx]
            q = min(max(abs(r), 1e-12), 1.0 - 1e-12)
            g_star = 1 if rng.uniform() < q else 0
            sig_star = rng.normal(sig_cur[idx], cfg.prop_sd_sigma)
            if sig_star <= _SIGMA_FLOOR or sig_star > cfg.sigma_max:
                continue  # outside the uniform-positive prior support

            def pair_lp(g, sig):
                v = sig * sig
                term = -0.5 * math.log(2.0 * math.pi * v) - (g - r) ** 2 / (2.0 * v)
                if form == "two_term":
                    term -= (g + r) ** 2 / (2.0 * v)
                return term

            delta = pair_lp(g_star, sig_star) - pair_lp(g_cur[idx], sig_cur[idx])
            # Bernoulli proposal mass depends on rho only, not the current g
            q_cur = q if g_cur[idx] == 1 else 1.0 - q
            q_star = q if g_star == 1 else 1.0 - q
            delta += math.log(q_cur) - math.log(q_star)
            if math.log(rng.uniform()) < delta:
                g_cur[idx] = g_star
                sig_cur[idx] = sig_star
                trace.accept_graph += 1

        record(t)
        if (
            t > burn_in
            and t - last_accept >= cfg.divergence_window
            and cfg.divergence_window > 0
        ):
            raise ChainDiverged(
                f"no block-1 acceptance in {cfg.divergence_window} iterations "
                f"(last acceptance at iteration {last_accept})"
            )
    return trace


def hpd_interval(samples, mass=0.95):
    """Shortest interval containing ceil(mass * N) sorted samples."""
    if not 0.0 < mass < 1.0:
        raise ValueError("mass must lie in (0, 1)")
    xs = np.sort(np.asarray(samples, dtype=float))
    n = xs.size
    if n == 0:
        raise EmptyTrace("no samples")
    k = int(math.ceil(mass * n))
    if k >= n:
        return float(xs[0]), float(xs[-1])
    widths = xs[k - 1:] - xs[: n - k + 1]
    i = int(np.argmin(widths))
    return float(xs[i]), float(xs[i + k - 1])


# ---------------------------------------------------------------------------
# Trace persistence: line-oriented, append-only, bit-exact round trips.
#
# Layout (fields separated by single spaces):
#   # graphcorr-trace v1
#   # p=<p> n_iter=<N> burn_in=<B> learn_error=<0|1> likelihood_form=<form>
#   # columns=<comma-separated names>
#   # pairs=<comma-separated i-j pairs, 1-based, lexicographic>
#   <t> <log_post_corr> <log_post_graph> <m corr> <m edges> <m variances> [<p gamma>]
#   # accept_corr=<int> accept_graph=<int>       (footer, appended at end)
#
# Floats are written with repr(), which round-trips float64 exactly.
# ---------------------------------------------------------------------------


def save_trace(trace, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# graphcorr-trace v1\n")
        learn = 0 if trace.gamma is None else 1
        fh.write(
            f"# p={trace.p} n_iter={trace.n_iter} burn_in={trace.burn_in} "
            f"learn_error={learn}\n"
        )
        names = trace.column_names or [f"x{i+1}" for i in range(trace.p)]
        fh.write("# columns=" + ",".join(names) + "\n")
        fh.write(
            "# pairs=" + ",".join(f"{i+1}-{j+1}" for i, j in trace.pairs()) + "\n"
        )
        for t in range(trace.n_iter):
            parts = [str(t), repr(float(trace.log_post_corr[t])), repr(float(trace.log_post_graph[t]))]
            parts += [repr(float(v)) for v in trace.corr[t]]
            parts += [str(int(v)) for v in trace.edges[t]]
            parts += [repr(float(v)) for v in trace.variances[t]]
            if trace.gamma is not None:
                parts += [repr(float(v)) for v in trace.gamma[t]]
            fh.write(" ".join(parts) + "\n")
        fh.write(f"# accept_corr={trace.accept_corr} accept_graph={trace.accept_graph}\n")


def load_trace(path):
    meta = {}
    names = []
    rows = []
    accept = {"accept_corr": 0, "accept_graph": 0}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("columns="):
                    names = body[len("columns="):].split(",")
                elif body.startswith("pairs="):
                    pass
                else:
                    for tok in body.split():
                        if "=" in tok:
                            key, val = tok.split("=", 1)
                            if key in ("accept_corr", "accept_graph"):
                                accept[key] = int(val)
                            else:
                                meta[key] = val
                continue
            rows.append(line.split(" "))
    if "p" not in meta:
        raise BadInput(f"{path}: not a graphcorr trace file")
    p = int(meta["p"])
    n_iter = int(meta["n_iter"])
    burn_in = int(meta["burn_in"])
    learn = meta.get("learn_error", "0") == "1"
    m = p * (p - 1) // 2
    expected = 3 + m + m + m + (p if learn else 0)
    if len(rows) != n_iter:
        raise BadInput(f"{path}: expected {n_iter} records, found {len(rows)}")
    corr = np.empty((n_iter, m))
    edges = np.empty((n_iter, m), dtype=np.uint8)
    variances = np.empty((n_iter, m))
    lp_corr = np.empty(n_iter)
    lp_graph = np.empty(n_iter)
    gamma = np.empty((n_iter, p)) if learn else None
    for t, parts in enumerate(rows):
        if len(parts) != expected:
            raise BadInput(f"{path}: record {t} has {len(parts)} fields, expected {expected}")
        lp_corr[t] = float(parts[1])
        lp_graph[t] = float(parts[2])
        base = 3
        corr[t] = [float(v) for v in parts[base:base + m]]
        edges[t] = [int(v) for v in parts[base + m:base + 2 * m]]
        variances[t] = [float(v) for v in parts[base + 2 * m:base + 3 * m]]
        if learn:
            gamma[t] = [float(v) for v in parts[base + 3 * m:]]
    return ChainTrace(
        p=p,
        corr=corr,
        edges=edges,
        variances=variances,
        log_post_corr=lp_corr,
        log_post_graph=lp_graph,
        burn_in=burn_in,
        gamma=gamma,
        accept_corr=accept["accept_corr"],
        accept_graph=accept["accept_graph"],
        column_names=names,
    )
