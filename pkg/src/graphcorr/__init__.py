"""Bayesian correlation and graphical-model learning with uncertainties.

The package learns the between-columns correlation matrix of a rectangular
dataset by Metropolis-within-Gibbs, derives the credible graphical model
from the sampled partial-correlation structure, and computes an
uncertainty-normalized Hellinger-based distance (and affinity) between the
learnt graphical models of two datasets.  A closed-form path covers very
large networks through Spearman rank correlations.
"""

from .corrpost import (
    CorrelationState,
    ErrorModel,
    NormalizationEstimate,
    adjust_for_error,
    estimate_normalization,
    log_unnorm_posterior,
)
from .dataset import (
    RawDataset,
    StandardizedDataset,
    add_measurement_noise,
    load_delimited,
    prune_dependent_rows,
    simulate,
    standardize,
    subsample_rows,
)
from .errors import (
    BadInput,
    ChainDiverged,
    ConstantRanks,
    DegenerateClass,
    DegenerateUncertainty,
    DegenerateVariance,
    EmptyTrace,
    GraphCorrError,
    LengthMismatch,
    NotPositiveDefinite,
    TooFewRows,
    ZeroVarianceColumn,
)
from .graphdist import (
    DistanceReport,
    PosteriorSeries,
    bhattacharyya,
    d_max,
    delta,
    global_scale,
    hellinger,
    log_odds,
)
from .graphmodel import (
    CredibleGraph,
    GraphState,
    credible_graph,
    edge_log_likelihood,
    edge_log_posterior,
    partial_correlation,
)
from .largenet import (
    LargeGraph,
    RelevanceMatrix,
    build_large_graph,
    class_variance_ratio,
    edge_posterior_closed_form,
    rank_rows,
    spearman,
    spearman_matrix,
)
from .linalg import (
    DEFAULT_RIDGE_POLICY,
    CholeskyFactor,
    RidgePolicy,
    cholesky,
    invert_lower,
    log_det,
    spd_inverse,
)
from .modelcheck import (
    PredictionTask,
    joint_predict,
    modal_correlation,
    predict_conditional,
)
from .sampler import (
    ChainConfig,
    ChainTrace,
    hpd_interval,
    initial_state,
    load_trace,
    run_chain,
    save_trace,
)

__version__ = "0.1.0"
