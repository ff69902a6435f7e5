"""Tests for the built-in skewed synthetic benchmark."""

import numpy as np
import pytest

from icreg.benchmark import benchmark_bin_config, benchmark_counts, generate_benchmark
from icreg.data import ShotRegion, balanced_split, bin_stats

EXPECTED_COUNTS = [900, 495, 272, 150, 82, 45, 25, 14, 8, 4, 2, 1]


class TestCounts:
    def test_frozen_count_table(self):
        """Geometric decay 900 * 0.55^b, rounded half-up, floored at one."""
        np.testing.assert_array_equal(benchmark_counts(), EXPECTED_COUNTS)

    def test_total_size(self):
        assert benchmark_counts().sum() == 1998

    def test_floor_keeps_every_bin_populated(self):
        counts = benchmark_counts(base_count=10, ratio=0.3, num_bins=8)
        assert counts.min() >= 1

    def test_validation(self):
        with pytest.raises(ValueError):
            benchmark_counts(base_count=0)
        with pytest.raises(ValueError):
            benchmark_counts(ratio=1.0)
        with pytest.raises(ValueError):
            benchmark_counts(num_bins=0)


class TestGenerate:
    def test_bin_counts_match_plan(self):
        """Binning the generated labels reproduces the count table exactly."""
        ds = generate_benchmark(seed=0)
        stats = bin_stats(ds.labels, benchmark_bin_config())
        np.testing.assert_array_equal(stats.counts, EXPECTED_COUNTS)
        assert len(ds) == 1998

    def test_all_three_regions_present(self):
        ds = generate_benchmark(seed=0)
        stats = bin_stats(ds.labels, benchmark_bin_config())
        regions = set(stats.regions)
        assert {ShotRegion.MANY, ShotRegion.MEDIUM, ShotRegion.FEW} <= regions

    def test_feature_structure(self):
        """Features are [y, y^2]/12 plus N(0, 0.05^2) noise per coordinate."""
        ds = generate_benchmark(seed=0)
        assert ds.features.shape == (1998, 2)
        base = ds.labels / 12.0
        resid0 = ds.features[:, 0] - base
        resid1 = ds.features[:, 1] - base * base
        np.testing.assert_allclose(resid0.std(), 0.05, rtol=0.1)
        np.testing.assert_allclose(resid1.std(), 0.05, rtol=0.1)
        np.testing.assert_allclose(resid0.mean(), 0.0, atol=0.005)

    def test_deterministic_under_seed(self):
        a = generate_benchmark(seed=7)
        b = generate_benchmark(seed=7)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_seeds_differ(self):
        a = generate_benchmark(seed=0)
        b = generate_benchmark(seed=1)
        assert not np.array_equal(a.labels, b.labels)

    def test_labels_stay_inside_bin_range(self):
        ds = generate_benchmark(seed=3)
        assert ds.labels.min() >= 0.0
        assert ds.labels.max() < 12.0


class TestSplitCompatibility:
    def test_balanced_split_keeps_all_regions(self):
        """A 10% balanced split leaves train stats with every region."""
        ds = generate_benchmark(seed=0)
        train, test = balanced_split(ds, 0.1, benchmark_bin_config(), seed=0)
        stats = bin_stats(train.labels, benchmark_bin_config())
        regions = set(stats.regions)
        assert {ShotRegion.MANY, ShotRegion.MEDIUM, ShotRegion.FEW} <= regions
        assert len(train) + len(test) == 1998
