"""Figure rendering for the CLI report paths.

Each helper writes one PNG next to the delimited data it illustrates.
Figures are presentation artifacts; the delimited files remain the
primary, byte-reproducible outputs.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .graphmodel import upper_pairs

__all__ = [
    "save_trace_figure",
    "save_corr_marginals_figure",
    "save_band_figure",
    "save_class_ratio_figure",
    "save_predictive_figure",
]

_DPI = 120


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI, metadata={"Software": "graphcorr"})
    plt.close(fig)
    return path


def save_trace_figure(trace, path):
    """Log-posterior traces of both blocks against the iteration number."""
    fig, axes = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    t = np.arange(trace.n_iter)
    axes[0].plot(t, trace.log_post_corr, lw=0.5, color="tab:blue")
    axes[0].set_ylabel("log posterior (correlation)")
    axes[1].plot(t, trace.log_post_graph, lw=0.5, color="tab:red")
    axes[1].set_ylabel("log posterior (graph)")
    axes[1].set_xlabel("iteration")
    for ax in axes:
        ax.axvline(trace.burn_in, color="grey", ls="--", lw=0.8)
    return _finish(fig, path)


def save_corr_marginals_figure(trace, path, max_panels=12):
    """Histograms of the post-burn-in correlation marginals."""
    pairs = upper_pairs(trace.p)
    k = min(len(pairs), max_panels)
    ncol = min(4, k)
    nrow = (k + ncol - 1) // ncol
    fig, axes = plt.subplots(nrow, ncol, figsize=(3 * ncol, 2.4 * nrow), squeeze=False)
    post = trace.corr[trace.burn_in:]
    for idx in range(k):
        ax = axes[idx // ncol][idx % ncol]
        i, j = pairs[idx]
        ax.hist(post[:, idx], bins=40, color="tab:blue", alpha=0.8)
        ax.set_title(f"S[{i + 1},{j + 1}]", fontsize=9)
    for idx in range(k, nrow * ncol):
        axes[idx // ncol][idx % ncol].axis("off")
    return _finish(fig, path)


def save_band_figure(t, scaled1, scaled2, hell_value, path, labels=("chain 1", "chain 2")):
    """Scaled posterior bands of two chains with the Hellinger value marked."""
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.plot(t, scaled1, lw=0.5, color="tab:red", label=labels[0])
    ax.plot(t, scaled2, lw=0.5, color="tab:blue", label=labels[1])
    ax.set_xlabel("iteration")
    ax.set_ylabel("scaled posterior exp(ln p / s)")
    ax.legend(loc="best", fontsize=8)
    ax.set_title(f"Hellinger distance = {hell_value:.4f}", fontsize=10)
    return _finish(fig, path)


def save_class_ratio_figure(ratios, path):
    """Within/between variance ratio per class as a bar chart."""
    fig, ax = plt.subplots(figsize=(max(4, 0.5 * len(ratios) + 2), 4))
    names = list(ratios)
    ax.bar(range(len(names)), [ratios[c] for c in names], color="tab:green")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=60, ha="right", fontsize=8)
    ax.axhline(1.0, color="grey", ls="--", lw=0.8)
    ax.set_ylabel("intra/inter variance ratio")
    return _finish(fig, path)


def save_predictive_figure(predicted, empirical, column_label, path):
    """Predictive marginal of one column over its held-out distribution."""
    fig, ax = plt.subplots(figsize=(6, 4))
    bins = np.histogram_bin_edges(np.concatenate([predicted, empirical]), bins=40)
    ax.hist(empirical, bins=bins, density=True, alpha=0.6, color="black", label="held out")
    ax.hist(predicted, bins=bins, density=True, alpha=0.6, color="tab:red", label="predicted")
    ax.set_xlabel(column_label)
    ax.legend(fontsize=8)
    return _finish(fig, path)
