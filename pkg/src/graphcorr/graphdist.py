"""Distances between the posterior series of two learnt graphical models.

All quantities are built from the per-iteration log posteriors ln p^(t) of
the graph given each dataset.  A global scale s (the maximum recorded
log posterior over both chains, all iterations) makes the series
exponentiable as exp(ln p^(t) / s); the Hellinger distance pairs the two
chains iteration by iteration over the post-burn-in stretch, so it is a
trace-level divergence, not a density-space integral.  Everything is
computed through expm1/log-space arithmetic so that finite inputs give
finite outputs.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateUncertainty, EmptyTrace, LengthMismatch

__all__ = [
    "PosteriorSeries",
    "DistanceReport",
    "global_scale",
    "hellinger",
    "bhattacharyya",
    "d_max",
    "delta",
    "log_odds",
    "band_data",
]


@dataclass(frozen=True)
class PosteriorSeries:
    """Minimal trace surrogate: a log-posterior series plus burn-in index."""

    log_post_graph: np.ndarray
    burn_in: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "log_post_graph", np.asarray(self.log_post_graph, dtype=float)
        )


def _series(trace):
    values = np.asarray(trace.log_post_graph, dtype=float)
    if values.size == 0:
        raise EmptyTrace("trace has no iterations")
    return values, int(trace.burn_in)


def _paired_post(trace1, trace2, strict):
    v1, b1 = _series(trace1)
    v2, b2 = _series(trace2)
    p1, p2 = v1[b1:], v2[b2:]
    if p1.size == 0 or p2.size == 0:
        raise EmptyTrace("no post-burn-in iterations")
    if p1.size != p2.size:
        if strict:
            raise LengthMismatch(
                f"post-burn-in lengths differ: {p1.size} vs {p2.size}"
            )
        keep = min(p1.size, p2.size)
        p1, p2 = p1[-keep:], p2[-keep:]
    return p1, p2


def global_scale(trace1, trace2):
    """Maximum recorded log posterior over both chains, all iterations."""
    v1, _ = _series(trace1)
    v2, _ = _series(trace2)
    return float(max(v1.max(), v2.max()))


def _check_scale(s):
    if s == 0.0 or not np.isfinite(s):
        raise DegenerateUncertainty(f"unusable global scale s={s!r}")


def hellinger(trace1, trace2, s, strict_lengths=False):
    """Discretized Hellinger distance between the scaled posterior series.

    sqrt of the post-burn-in average of (sqrt(p1) - sqrt(p2))^2 with
    p^(t) = exp(ln p^(t) / s), paired iteration by iteration.
    """
    _check_scale(s)
    p1, p2 = _paired_post(trace1, trace2, strict_lengths)
    a1, a2 = p1 / s, p2 / s
    hi = np.maximum(a1, a2)
    # (e^{a1/2}-e^{a2/2})^2 = e^{hi} * expm1(-|a1-a2|/2)^2, overflow-free for s>0
    terms = np.exp(hi) * np.expm1(-np.abs(a1 - a2) / 2.0) ** 2
    return float(np.sqrt(terms.mean()))


def bhattacharyya(trace1, trace2, s, strict_lengths=False):
    """-log of the post-burn-in mean of the products of scaled posteriors.

    Implements the squared-integrand form literally: the product under the
    log is (sqrt(p1) sqrt(p2))^2 = p1 * p2.
    """
    _check_scale(s)
    p1, p2 = _paired_post(trace1, trace2, strict_lengths)
    a = (p1 + p2) / s
    amax = float(a.max())
    return -(amax + math.log(float(np.exp(a - amax).mean())))


def d_max(trace, s):
    """Width of the scaled posterior band over all recorded iterations."""
    _check_scale(s)
    v, _ = _series(trace)
    a = v / s
    amax, amin = float(a.max()), float(a.min())
    return float(np.exp(amax) * -np.expm1(amin - amax))


@dataclass(frozen=True)
class DistanceReport:
    """All distance quantities for one pair of chains."""

    hellinger: float
    bhattacharyya: float
    d_max_1: float
    d_max_2: float
    delta: float
    affinity: float
    log_odds_sum: float
    log_odds_mean: float
    scale_s: float
    n_terms: int

    def to_key_value_text(self):
        lines = [
            f"hellinger={self.hellinger!r}",
            f"bhattacharyya={self.bhattacharyya!r}",
            f"d_max_1={self.d_max_1!r}",
            f"d_max_2={self.d_max_2!r}",
            f"delta={self.delta!r}",
            f"affinity={self.affinity!r}",
            f"log_odds_sum={self.log_odds_sum!r}",
            f"log_odds_mean={self.log_odds_mean!r}",
            f"scale_s={self.scale_s!r}",
            f"n_terms={self.n_terms}",
        ]
        return "\n".join(lines) + "\n"

    def to_json_text(self):
        doc = {
            "hellinger": self.hellinger,
            "bhattacharyya": self.bhattacharyya,
            "d_max": [self.d_max_1, self.d_max_2],
            "delta": self.delta,
            "affinity": self.affinity,
            "log_odds": {"sum": self.log_odds_sum, "mean": self.log_odds_mean},
            "scale_s": self.scale_s,
            "n_terms": self.n_terms,
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def log_odds(trace1, trace2, strict_lengths=False):
    """Post-burn-in sum and mean of ln p1^(t) - ln p2^(t)."""
    p1, p2 = _paired_post(trace1, trace2, strict_lengths)
    diff = p1 - p2
    return float(diff.sum()), float(diff.mean())


def delta(trace1, trace2, strict_lengths=False):
    """Uncertainty-normalized distance between two chains, as a full report.

    delta = D_H * |1/D_max(1) - 1/D_max(2)| and affinity = exp(-delta); the
    scale is computed internally from both chains.
    """
    s = global_scale(trace1, trace2)
    _check_scale(s)
    d1 = d_max(trace1, s)
    d2 = d_max(trace2, s)
    if d1 == 0.0 or d2 == 0.0:
        raise DegenerateUncertainty("constant posterior trace: d_max is zero")
    dh = hellinger(trace1, trace2, s, strict_lengths)
    dval = dh * abs(1.0 / d1 - 1.0 / d2)
    lo_sum, lo_mean = log_odds(trace1, trace2, strict_lengths)
    p1, p2 = _paired_post(trace1, trace2, strict_lengths)
    return DistanceReport(
        hellinger=dh,
        bhattacharyya=bhattacharyya(trace1, trace2, s, strict_lengths),
        d_max_1=d1,
        d_max_2=d2,
        delta=dval,
        affinity=math.exp(-dval),
        log_odds_sum=lo_sum,
        log_odds_mean=lo_mean,
        scale_s=s,
        n_terms=int(p1.size),
    )


def band_data(trace1, trace2, s=None, strict_lengths=False):
    """Per-iteration scaled posteriors of both chains for band plotting.

    Returns (iteration indices, scaled chain 1, scaled chain 2) over all
    recorded iterations, truncated from the end to a common length when the
    chains differ (lenient mode only).
    """
    if s is None:
        s = global_scale(trace1, trace2)
    _check_scale(s)
    v1, _ = _series(trace1)
    v2, _ = _series(trace2)
    if v1.size != v2.size:
        if strict_lengths:
            raise LengthMismatch(f"lengths differ: {v1.size} vs {v2.size}")
        keep = min(v1.size, v2.size)
        v1, v2 = v1[-keep:], v2[-keep:]
    t = np.arange(v1.size)
    return t, np.exp(v1 / s), np.exp(v2 / s)
