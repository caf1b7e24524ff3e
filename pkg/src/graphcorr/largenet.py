"""MCMC-free graphical-model path for very large networks.

Relevance scores are ranked per item (rank 1 = most relevant feature, ties
averaged), pairwise Spearman correlations of the rank vectors give a
correlation matrix, its ridge-adjusted inverse gives partial correlations,
and a closed-form per-edge posterior with variance rho(1-rho) is
thresholded into the reported subgraph.  Negative partial correlations
contribute their magnitude as edge strength; the sign is kept as an edge
attribute.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.stats

from .errors import BadInput, ConstantRanks, DegenerateClass, DegenerateVariance
from .graphmodel import partial_from_precision, upper_pairs
from .linalg import DEFAULT_RIDGE_POLICY, spd_inverse

__all__ = [
    "RelevanceMatrix",
    "LargeGraph",
    "load_relevance_triples",
    "rank_rows",
    "spearman",
    "spearman_matrix",
    "partial_from_rankcorr",
    "edge_posterior_closed_form",
    "build_large_graph",
    "class_variance_ratio",
]


@dataclass
class RelevanceMatrix:
    """Dense item-by-feature relevance scores with optional class labels."""

    scores: np.ndarray
    item_labels: list = field(default_factory=list)
    item_classes: list = None

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if self.scores.ndim != 2:
            raise BadInput("relevance scores must form a 2-d matrix")
        if not self.item_labels:
            self.item_labels = [f"item{i + 1}" for i in range(self.scores.shape[0])]

    @property
    def n_items(self):
        return self.scores.shape[0]

    @property
    def n_features(self):
        return self.scores.shape[1]


def load_relevance_triples(path, delimiter=None):
    """Load sparse (item, feature, score) triples; absent pairs score 0.

    ``delimiter=None`` splits on any whitespace.  Raises :class:`BadInput`
    with the line number on malformed records.
    """
    items, features = {}, {}
    triples = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(delimiter)
            if len(parts) != 3:
                raise BadInput(f"line {lineno}: expected 'item feature score'")
            item, feat, raw = parts
            try:
                score = float(raw)
            except ValueError:
                raise BadInput(f"line {lineno}: non-numeric score") from None
            items.setdefault(item, len(items))
            features.setdefault(feat, len(features))
            triples.append((items[item], features[feat], score))
    if not triples:
        raise BadInput(f"{path}: no score triples")
    scores = np.zeros((len(items), len(features)))
    for i, j, v in triples:
        scores[i, j] = v
    return RelevanceMatrix(scores=scores, item_labels=list(items))


def rank_rows(rel):
    """Descending average ranks per row: the top score gets rank 1."""
    scores = rel.scores if isinstance(rel, RelevanceMatrix) else np.asarray(rel, float)
    return scipy.stats.rankdata(-scores, axis=1, method="average")


def spearman(rank_i, rank_j):
    """Pearson correlation of two rank vectors (tie-correct by construction)."""
    x = np.asarray(rank_i, dtype=float)
    y = np.asarray(rank_j, dtype=float)
    if x.size != y.size or x.size < 2:
        raise BadInput("rank vectors must share a length >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    vx = float(xc @ xc)
    vy = float(yc @ yc)
    if vx == 0.0 or vy == 0.0:
        raise ConstantRanks("a rank vector has zero variance")
    return float(xc @ yc) / math.sqrt(vx * vy)


def spearman_matrix(ranks):
    """All pairwise Spearman correlations of the rank rows."""
    ranks = np.asarray(ranks, dtype=float)
    sd = ranks.std(axis=1)
    if np.any(sd == 0.0):
        bad = int(np.argmin(sd))
        raise ConstantRanks(f"row {bad} has constant ranks")
    s = np.corrcoef(ranks)
    s = 0.5 * (s + s.T)
    np.fill_diagonal(s, 1.0)
    return np.clip(s, -1.0, 1.0)


def partial_from_rankcorr(s_rank, ridge_policy=DEFAULT_RIDGE_POLICY):
    """Partial correlations from a (rank) correlation matrix."""
    s = np.asarray(s_rank, dtype=float)
    if not np.allclose(np.diagonal(s), 1.0, atol=1e-8):
        raise BadInput("rank-correlation matrix must have unit diagonal")
    return partial_from_precision(spd_inverse(s, ridge_policy))


def edge_posterior_closed_form(rho, form="single_term", strict=False):
    """Pr(edge | rho) with variance rho(1-rho) and a flat edge prior.

    Negative inputs contribute their magnitude.  At rho in {0, 1} the
    variance vanishes; the continuity limits 0 and 1 are returned unless
    ``strict`` is set, in which case :class:`DegenerateVariance` is raised.
    Under the default single-term form this equals
    1 / (1 + exp((1 - 2 rho) / (2 rho (1 - rho)))).
    """
    r = abs(float(rho))
    if r >= 1.0 or r == 0.0:
        if strict:
            raise DegenerateVariance(f"variance rho(1-rho) vanishes at rho={rho}")
        if form == "two_term":
            return 0.0
        return 0.0 if r == 0.0 else 1.0
    v = r * (1.0 - r)
    if form == "single_term":
        return 1.0 / (1.0 + math.exp((1.0 - 2.0 * r) / (2.0 * v)))
    if form == "two_term":
        # both exponents appear for either g; the likelihood ratio is exp(-1/v)
        return 1.0 / (1.0 + math.exp(1.0 / v))
    raise ValueError(f"unknown likelihood form {form!r}")


@dataclass
class LargeGraph:
    """Thresholded edge set over the items that retain at least one edge."""

    n_items: int
    threshold: float
    edges: list          # (i, j, posterior, rho) with i < j, 0-based
    item_labels: list = field(default_factory=list)

    @property
    def nodes(self):
        seen = set()
        for i, j, _, _ in self.edges:
            seen.add(i)
            seen.add(j)
        return sorted(seen)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_edges(self):
        return len(self.edges)

    def to_edge_list_text(self):
        lines = [f"{i + 1} {j + 1} {post:.6f}" for i, j, post, _ in self.edges]
        return "\n".join(lines) + ("\n" if lines else "")

    def to_dot_text(self):
        labels = self.item_labels or [str(i + 1) for i in range(self.n_items)]
        lines = ["graph large {"]
        for i in self.nodes:
            lines.append(f'  n{i + 1} [label="{labels[i]}"];')
        for i, j, post, rho in self.edges:
            lines.append(
                f'  n{i + 1} -- n{j + 1} [label="{post:.6f}", weight="{rho:.6f}"];'
            )
        lines.append("}")
        return "\n".join(lines) + "\n"

    def to_json_text(self):
        labels = self.item_labels or [str(i + 1) for i in range(self.n_items)]
        doc = {
            "nodes": [{"id": i + 1, "label": labels[i]} for i in self.nodes],
            "edges": [
                {
                    "source": i + 1,
                    "target": j + 1,
                    "probability": f"{post:.6f}",
                    "partial_correlation": f"{rho:.6f}",
                }
                for i, j, post, rho in self.edges
            ],
            "metadata": {
                "threshold": self.threshold,
                "item_count": self.n_items,
                "node_count": self.n_nodes,
                "edge_count": self.n_edges,
            },
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def build_large_graph(
    rel, threshold=0.9, form="single_term", ridge_policy=DEFAULT_RIDGE_POLICY
):
    """End-to-end pipeline: ranks, Spearman, partials, closed-form edges.

    Keeps edges whose posterior reaches the threshold; isolated items are
    excluded from the node list.  Deterministic.
    """
    if not 0.0 < threshold < 1.0:
        raise BadInput("threshold must lie in (0, 1)")
    ranks = rank_rows(rel)
    s_rank = spearman_matrix(ranks)
    rho = partial_from_rankcorr(s_rank, ridge_policy)
    edges = []
    for i, j in upper_pairs(rho.shape[0]):
        post = edge_posterior_closed_form(rho[i, j], form)
        if post >= threshold:
            edges.append((i, j, post, float(rho[i, j])))
    labels = rel.item_labels if isinstance(rel, RelevanceMatrix) else []
    n_items = rho.shape[0]
    return LargeGraph(
        n_items=n_items, threshold=threshold, edges=edges, item_labels=labels
    )


def class_variance_ratio(rho, labels, form="single_term"):
    """Per-class ratio of within-class to between-class edge-score variance.

    Pinned definition: for class c, the numerator is the variance of the
    closed-form edge posteriors over item pairs inside c, and the
    denominator is the variance over pairs joining c to any other class.
    Requires at least two classes with two members each; classes whose
    pair sets cannot produce a variance raise :class:`DegenerateClass`.
    """
    rho = np.asarray(rho, dtype=float)
    labels = list(labels)
    if len(labels) != rho.shape[0]:
        raise BadInput("one class label per item is required")
    classes = sorted(set(labels))
    if len(classes) < 2:
        raise DegenerateClass("need at least two classes")
    counts = {c: labels.count(c) for c in classes}
    for c, k in counts.items():
        if k < 2:
            raise DegenerateClass(f"class {c!r} has fewer than 2 members")
    n = rho.shape[0]
    post = np.zeros((n, n))
    for i, j in upper_pairs(n):
        post[i, j] = post[j, i] = edge_posterior_closed_form(rho[i, j], form)
    ratios = {}
    for c in classes:
        inside = [i for i, lab in enumerate(labels) if lab == c]
        outside = [i for i, lab in enumerate(labels) if lab != c]
        intra = [post[i, j] for k, i in enumerate(inside) for j in inside[k + 1:]]
        inter = [post[i, j] for i in inside for j in outside]
        if len(intra) < 2 or len(inter) < 2:
            raise DegenerateClass(f"class {c!r} has too few pairs")
        var_intra = float(np.var(intra))
        var_inter = float(np.var(inter))
        if var_inter == 0.0:
            raise DegenerateClass(f"class {c!r} has zero between-class variance")
        ratios[c] = var_intra / var_inter
    return ratios
