"""Dataset ingestion, standardization, row pruning, and simulation."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import BadInput, NotPositiveDefinite, TooFewRows, ZeroVarianceColumn
from .linalg import DEFAULT_RIDGE_POLICY, cholesky

__all__ = [
    "RawDataset",
    "StandardizedDataset",
    "load_delimited",
    "write_delimited",
    "standardize",
    "prune_dependent_rows",
    "subsample_rows",
    "simulate",
    "add_measurement_noise",
]


@dataclass
class RawDataset:
    """An n x p matrix of observations with column names."""

    values: np.ndarray
    column_names: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise BadInput("dataset must be a 2-d table")
        if not self.column_names:
            self.column_names = [f"x{j + 1}" for j in range(self.values.shape[1])]
        if len(self.column_names) != self.values.shape[1]:
            raise BadInput("column name count does not match column count")
        if self.values.shape[0] < 2:
            raise BadInput("dataset needs at least 2 rows")
        if not np.isfinite(self.values).all():
            raise BadInput("dataset contains missing or non-finite cells")

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_cols(self):
        return self.values.shape[1]


@dataclass
class StandardizedDataset:
    """Column-wise z-scored data with the means and sds used."""

    values: np.ndarray
    column_means: np.ndarray
    column_sds: np.ndarray
    column_names: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.column_means = np.asarray(self.column_means, dtype=float)
        self.column_sds = np.asarray(self.column_sds, dtype=float)
        if not self.column_names:
            self.column_names = [f"x{j + 1}" for j in range(self.values.shape[1])]

    @property
    def n_rows(self):
        return self.values.shape[0]

    @property
    def n_cols(self):
        return self.values.shape[1]

    def empirical_correlation(self):
        """Empirical between-columns correlation matrix (divisor n)."""
        z = self.values
        c = (z.T @ z) / z.shape[0]
        d = np.sqrt(np.clip(np.diagonal(c), 1e-300, None))
        c = c / np.outer(d, d)
        np.fill_diagonal(c, 1.0)
        return 0.5 * (c + c.T)


def load_delimited(path, delimiter=","):
    """Load a delimited text file: first row column names, decimal points.

    Raises :class:`BadInput` with the offending line number on malformed
    rows or non-numeric cells.
    """
    rows = []
    names = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if names is None:
                names = [c.strip().strip('"') for c in rec]
                continue
            if len(rec) != len(names):
                raise BadInput(f"line {lineno}: expected {len(names)} cells, got {len(rec)}")
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                raise BadInput(f"line {lineno}: non-numeric cell") from None
    if names is None or not rows:
        raise BadInput(f"{path}: no data rows")
    return RawDataset(values=np.array(rows, dtype=float), column_names=names)


def write_delimited(ds, path, delimiter=","):
    """Write a dataset as delimited text with a header row; floats via repr."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(delimiter.join(ds.column_names) + "\n")
        for row in ds.values:
            fh.write(delimiter.join(repr(float(v)) for v in row) + "\n")


def standardize(raw):
    """Column-wise z-scores using the population (divisor n) variance.

    Idempotent: standardizing an already standardized dataset leaves the
    values fixed within rounding.
    """
    x = raw.values
    means = x.mean(axis=0)
    sds = x.std(axis=0)  # numpy default ddof=0 is the divisor-n convention
    for j, s in enumerate(sds):
        if s == 0.0:
            raise ZeroVarianceColumn(j)
    z = (x - means) / sds
    return StandardizedDataset(
        values=z,
        column_means=means,
        column_sds=sds,
        column_names=list(raw.column_names),
    )


def prune_dependent_rows(ds, tol=1e-10):
    """Drop rows that are scalar affine transforms of an earlier row.

    Two rows count as dependent when the absolute Pearson correlation
    between them, as p-vectors, reaches 1 - tol.  Later duplicates are
    removed; the earliest row of each dependent group is kept.

    Returns the pruned dataset and the list of removed row indices.
    """
    z = ds.values
    n = z.shape[0]
    centered = z - z.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    keep = []
    removed = []
    for i in range(n):
        dependent = False
        for j in keep:
            ni, nj = norms[i], norms[j]
            if ni == 0.0 and nj == 0.0:
                dependent = True  # two constant rows are affine copies
                break
            if ni == 0.0 or nj == 0.0:
                continue
            r = float(centered[i] @ centered[j]) / (ni * nj)
            if abs(r) >= 1.0 - tol:
                dependent = True
                break
        if dependent:
            removed.append(i)
        else:
            keep.append(i)
    if len(keep) < 2:
        raise TooFewRows("fewer than 2 independent rows remain")
    pruned = StandardizedDataset(
        values=z[keep],
        column_means=ds.column_means,
        column_sds=ds.column_sds,
        column_names=list(ds.column_names),
    )
    return pruned, removed


def subsample_rows(raw, n, seed):
    """Uniformly subsample n rows without replacement, seed-controlled."""
    if n > raw.n_rows:
        raise BadInput(f"cannot subsample {n} of {raw.n_rows} rows")
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(raw.n_rows, size=n, replace=False))
    return RawDataset(values=raw.values[idx].copy(), column_names=list(raw.column_names))


def simulate(sigma_true, n, seed, column_names=None, ridge_policy=DEFAULT_RIDGE_POLICY):
    """Draw n rows from a zero-mean multivariate normal with the given
    between-columns correlation, via Cholesky coloring of standard-normal
    draws.  Reproducible for a fixed seed.
    """
    sigma = np.asarray(sigma_true, dtype=float)
    p = sigma.shape[0]
    if n < p + 1:
        raise BadInput(f"need n >= p+1 rows, got n={n}, p={p}")
    factor = cholesky(sigma, ridge_policy)
    if factor.ridge_applied > 0.0:
        raise NotPositiveDefinite("simulation requires a strictly SPD correlation matrix")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((n, p))
    return RawDataset(values=g @ factor.lower.T, column_names=column_names or [])


def add_measurement_noise(ds, column, noise_variance, seed):
    """Add independent zero-mean Gaussian noise to one column."""
    if noise_variance < 0:
        raise BadInput("noise variance must be nonnegative")
    values = ds.values.copy()
    if noise_variance > 0:
        rng = np.random.default_rng(seed)
        values[:, column] += rng.normal(0.0, np.sqrt(noise_variance), size=values.shape[0])
    return RawDataset(values=values, column_names=list(ds.column_names))
