"""Partial correlations, the edge/variance likelihood, and credible graphs."""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyTrace
from .linalg import DEFAULT_RIDGE_POLICY, spd_inverse

__all__ = [
    "GraphState",
    "CredibleGraph",
    "partial_correlation",
    "partial_from_precision",
    "edge_log_likelihood",
    "edge_log_posterior",
    "credible_graph",
    "upper_pairs",
]

LOG_HALF = math.log(0.5)


def upper_pairs(p):
    """Lexicographically ordered upper-triangle index pairs (i < j)."""
    return [(i, j) for i in range(p) for j in range(i + 1, p)]


def partial_from_precision(psi):
    """Partial correlations -psi_ij / sqrt(psi_ii psi_jj) with unit diagonal."""
    d = np.sqrt(np.diagonal(psi))
    rho = -psi / np.outer(d, d)
    np.fill_diagonal(rho, 1.0)
    # Cauchy-Schwarz bounds |rho| by 1; clip rounding spill only
    return np.clip(rho, -1.0, 1.0)


def partial_correlation(sigma, ridge_policy=DEFAULT_RIDGE_POLICY):
    """Partial-correlation matrix of a correlation state or matrix."""
    s = sigma.s if hasattr(sigma, "s") else np.asarray(sigma, dtype=float)
    return partial_from_precision(spd_inverse(s, ridge_policy))


@dataclass
class GraphState:
    """Binary edges and per-edge variances on the upper triangle."""

    edges: np.ndarray       # (p, p), 0/1, upper triangle meaningful
    variances: np.ndarray   # (p, p), sigma_ij^2 > 0, upper triangle meaningful
    log_post: float = 0.0

    @property
    def p(self):
        return self.edges.shape[0]


def _pair_terms(edges, variances, rho, form):
    iu = np.triu_indices(rho.shape[0], 1)
    g = np.asarray(edges, dtype=float)[iu]
    v = np.asarray(variances, dtype=float)[iu]
    r = rho[iu]
    if np.any(v <= 0.0):
        raise ValueError("edge variances must be positive")
    terms = -0.5 * np.log(2.0 * math.pi * v) - (g - r) ** 2 / (2.0 * v)
    if form == "two_term":
        terms = terms - (g + r) ** 2 / (2.0 * v)
    elif form != "single_term":
        raise ValueError(f"unknown likelihood form {form!r}")
    return terms


def edge_log_likelihood(edges, variances, rho, form="single_term"):
    """Gaussian log-likelihood of the edge and variance parameters given rho.

    The default form penalizes (g_ij - rho_ij)^2 only; the ``two_term``
    variant adds a (g_ij + rho_ij)^2 exponent to every pair.
    """
    return float(_pair_terms(edges, variances, rho, form).sum())


def edge_log_posterior(edges, variances, rho, form="single_term"):
    """Edge log-likelihood plus the flat Bernoulli(0.5) prior mass.

    This is the per-iteration ln p recorded in chain traces and consumed by
    the distance module.
    """
    p = rho.shape[0]
    m = p * (p - 1) // 2
    return edge_log_likelihood(edges, variances, rho, form) + m * LOG_HALF


@dataclass
class CredibleGraph:
    """Edge probabilities after thresholding post-burn-in edge frequencies.

    Entries are the frequencies n_ij where n_ij >= threshold, else 0; the
    boundary case n_ij == threshold is kept.
    """

    edge_prob: np.ndarray
    n_post: int
    threshold: float = 0.05
    column_names: list = field(default_factory=list)

    @property
    def p(self):
        return self.edge_prob.shape[0]

    def edge_list(self):
        """(i, j, prob) for retained edges, 1-based, lexicographic order."""
        out = []
        for i, j in upper_pairs(self.p):
            prob = float(self.edge_prob[i, j])
            if prob > 0.0:
                out.append((i + 1, j + 1, prob))
        return out

    def to_edge_list_text(self):
        lines = [f"{i} {j} {prob:.6f}" for i, j, prob in self.edge_list()]
        return "\n".join(lines) + ("\n" if lines else "")

    def to_dot_text(self):
        names = self.column_names or [str(i + 1) for i in range(self.p)]
        lines = ["graph credible {"]
        for i in range(self.p):
            lines.append(f'  n{i + 1} [label="{names[i]}"];')
        for i, j, prob in self.edge_list():
            lines.append(f'  n{i} -- n{j} [label="{prob:.6f}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json_text(self):
        names = self.column_names or [str(i + 1) for i in range(self.p)]
        doc = {
            "nodes": [{"id": i + 1, "label": names[i]} for i in range(self.p)],
            "edges": [
                {"source": i, "target": j, "probability": f"{prob:.6f}"}
                for i, j, prob in self.edge_list()
            ],
            "metadata": {
                "n_post": self.n_post,
                "threshold": self.threshold,
                "node_count": self.p,
                "edge_count": len(self.edge_list()),
            },
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def credible_graph(trace, threshold=0.05):
    """Assemble the credible graphical model from a completed trace.

    n_ij is the post-burn-in frequency of g_ij = 1; entries below the
    threshold are zeroed (the Heaviside convention keeps the boundary).
    """
    edges = trace.edges[trace.burn_in:]
    if edges.shape[0] < 1:
        raise EmptyTrace("no post-burn-in iterations")
    n_post = edges.shape[0]
    freq = edges.mean(axis=0)
    p = trace.p
    prob = np.zeros((p, p))
    for idx, (i, j) in enumerate(upper_pairs(p)):
        nij = float(freq[idx])
        prob[i, j] = nij if nij >= threshold else 0.0
    return CredibleGraph(
        edge_prob=prob,
        n_post=n_post,
        threshold=threshold,
        column_names=list(getattr(trace, "column_names", []) or []),
    )
