"""Ingestion, standardization, pruning, and simulation checks."""

import math

import numpy as np
import pytest

from graphcorr import (
    BadInput,
    RawDataset,
    TooFewRows,
    ZeroVarianceColumn,
    add_measurement_noise,
    load_delimited,
    prune_dependent_rows,
    simulate,
    standardize,
    subsample_rows,
)
from graphcorr.dataset import write_delimited
from graphcorr.reference import TOY_SIGMA


class TestStandardize:
    def test_hand_computed_column(self):
        raw = RawDataset(values=np.array([[1.0], [2.0], [3.0]]))
        std = standardize(raw)
        # mean 2, population variance 2/3
        expected = math.sqrt(1.5)
        np.testing.assert_allclose(std.values[:, 0], [-expected, 0.0, expected], atol=1e-12)
        assert abs(std.column_means[0] - 2.0) < 1e-15
        assert abs(std.column_sds[0] - math.sqrt(2.0 / 3.0)) < 1e-15

    def test_idempotent(self):
        rng = np.random.default_rng(1)
        raw = RawDataset(values=rng.standard_normal((40, 3)))
        once = standardize(raw)
        twice = standardize(RawDataset(values=once.values.copy()))
        np.testing.assert_allclose(once.values, twice.values, atol=1e-12)

    def test_population_divisor(self):
        raw = RawDataset(values=np.array([[0.0, 1.0], [1.0, 3.0], [2.0, 2.0], [3.0, 0.0]]))
        std = standardize(raw)
        # population (divisor n) standard deviation, not ddof=1
        assert np.allclose(std.column_sds, raw.values.std(axis=0, ddof=0))
        assert np.abs(std.values.std(axis=0)).max() == pytest.approx(1.0, abs=1e-12)

    def test_constant_column_raises(self):
        raw = RawDataset(values=np.array([[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]))
        with pytest.raises(ZeroVarianceColumn) as err:
            standardize(raw)
        assert err.value.column == 1


class TestPruneDependentRows:
    def test_scaled_duplicate_removed(self):
        rng = np.random.default_rng(2)
        z = rng.standard_normal((6, 4))
        z[5] = 2.0 * z[1]
        std = standardize(RawDataset(values=z))
        # re-inject dependency after standardization
        std.values[5] = 2.0 * std.values[1]
        pruned, removed = prune_dependent_rows(std)
        assert removed == [5]
        assert pruned.n_rows == 5

    def test_generic_dataset_unchanged(self):
        rng = np.random.default_rng(3)
        std = standardize(RawDataset(values=rng.standard_normal((30, 5))))
        pruned, removed = prune_dependent_rows(std)
        assert removed == []
        assert pruned.n_rows == 30

    def test_three_proportional_rows_keep_first(self):
        rng = np.random.default_rng(4)
        z = rng.standard_normal((5, 6))
        z[2] = -3.0 * z[0]
        z[4] = 0.5 * z[0] + 1.0  # affine shift is dependent after row-centering
        std = standardize(RawDataset(values=z))
        std.values[2] = -3.0 * std.values[0]
        std.values[4] = 0.5 * std.values[0] + 1.0
        pruned, removed = prune_dependent_rows(std)
        assert removed == [2, 4]

    def test_idempotent(self):
        rng = np.random.default_rng(5)
        std = standardize(RawDataset(values=rng.standard_normal((20, 4))))
        once, _ = prune_dependent_rows(std)
        twice, removed = prune_dependent_rows(once)
        assert removed == []
        np.testing.assert_array_equal(once.values, twice.values)

    def test_too_few_rows(self):
        z = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0], [-1.0, -2.0, -3.0]])
        std = standardize(RawDataset(values=z + 1e-9 * np.random.default_rng(0).standard_normal(z.shape)))
        std.values[:] = z
        with pytest.raises(TooFewRows):
            prune_dependent_rows(std)


class TestSimulate:
    def test_identity_large_sample(self):
        raw = simulate(np.eye(4), 100000, seed=10)
        c = np.corrcoef(raw.values.T)
        off = c[~np.eye(4, dtype=bool)]
        assert np.abs(off).max() < 0.02

    def test_toy_sigma_s12(self):
        raw = simulate(TOY_SIGMA, 4000, seed=20)
        c = np.corrcoef(raw.values.T)
        assert abs(c[0, 1] - 0.9914) < 0.02

    def test_deterministic(self):
        a = simulate(TOY_SIGMA, 50, seed=3)
        b = simulate(TOY_SIGMA, 50, seed=3)
        np.testing.assert_array_equal(a.values, b.values)

    def test_convergence_rate(self):
        # empirical correlations approach the target at the 3/sqrt(n) scale
        for n in (1000, 4000):
            raw = simulate(TOY_SIGMA, n, seed=int(n))
            c = np.corrcoef(raw.values.T)
            assert np.abs(c - TOY_SIGMA).max() < 3.0 / math.sqrt(n)

    def test_requires_enough_rows(self):
        with pytest.raises(BadInput):
            simulate(np.eye(5), 4, seed=0)


class TestMeasurementNoise:
    def test_zero_variance_unchanged(self):
        raw = simulate(np.eye(3), 100, seed=1)
        out = add_measurement_noise(raw, 1, 0.0, seed=2)
        np.testing.assert_array_equal(raw.values, out.values)

    def test_unit_noise_doubles_variance(self):
        raw = simulate(np.eye(2), 200000, seed=5)
        noisy = add_measurement_noise(raw, 0, 1.0, seed=6)
        assert abs(noisy.values[:, 0].var() - 2.0) < 0.05
        np.testing.assert_array_equal(noisy.values[:, 1], raw.values[:, 1])

    def test_toy_noise_level_shrinks_correlation(self):
        raw = simulate(TOY_SIGMA, 200000, seed=7)
        noisy = add_measurement_noise(raw, 1, 0.01, seed=8)
        c = np.corrcoef(noisy.values.T)
        assert abs(c[0, 1] - 0.9914 / math.sqrt(1.01)) < 5e-3


class TestDelimitedIO:
    def test_round_trip(self, tmp_path):
        raw = simulate(np.eye(3), 20, seed=9, column_names=["a", "b", "c"])
        path = tmp_path / "data.csv"
        write_delimited(raw, path)
        back = load_delimited(path)
        assert back.column_names == ["a", "b", "c"]
        np.testing.assert_array_equal(back.values, raw.values)

    def test_semicolon_delimiter(self, tmp_path):
        path = tmp_path / "w.csv"
        path.write_text('"x";"y"\n1.5;2\n3;4\n', encoding="utf-8")
        ds = load_delimited(path, delimiter=";")
        assert ds.column_names == ["x", "y"]
        np.testing.assert_array_equal(ds.values, [[1.5, 2.0], [3.0, 4.0]])

    def test_non_numeric_cell_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,y\n1,2\n3,oops\n", encoding="utf-8")
        with pytest.raises(BadInput, match="line 3"):
            load_delimited(path)

    def test_missing_cell_reports_line(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("x,y\n1,2\n3\n", encoding="utf-8")
        with pytest.raises(BadInput, match="line 3"):
            load_delimited(path)


class TestSubsample:
    def test_seeded_and_sorted(self):
        raw = simulate(np.eye(2), 100, seed=1)
        a = subsample_rows(raw, 30, seed=4)
        b = subsample_rows(raw, 30, seed=4)
        np.testing.assert_array_equal(a.values, b.values)
        assert a.n_rows == 30

    def test_too_many_requested(self):
        raw = simulate(np.eye(2), 20, seed=1)
        with pytest.raises(BadInput):
            subsample_rows(raw, 21, seed=0)
