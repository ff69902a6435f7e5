"""Built-in synthetic benchmark with an exponentially skewed label density.

Per-bin sample counts decay geometrically (ratio 0.55 over 12 unit-width
label bins), so the low end of the label range is Many-shot and the high
end Few-shot. Features are a noisy quadratic embedding of the label,
x = [y, y^2] / scale + noise, which keeps nearest-neighbor retrieval
informative about the label while leaving irreducible noise for the
bias/variance curves to expose.
"""

from __future__ import annotations

import numpy as np

from .data import BinConfig, Dataset

BENCH_RATIO = 0.55
BENCH_BINS = 12
BENCH_NOISE = 0.05
BENCH_BASE_COUNT = 900


def benchmark_counts(
    base_count: int = BENCH_BASE_COUNT, ratio: float = BENCH_RATIO, num_bins: int = BENCH_BINS
) -> np.ndarray:
    """Per-bin sample counts: round(base * ratio^b), floored at 1 sample."""
    if base_count < 1 or num_bins < 1 or not 0.0 < ratio < 1.0:
        raise ValueError("base_count and num_bins must be positive, ratio in (0, 1)")
    raw = base_count * ratio ** np.arange(num_bins)
    return np.maximum(1, np.floor(raw + 0.5)).astype(np.int64)


def generate_benchmark(
    seed: int = 0,
    base_count: int = BENCH_BASE_COUNT,
    ratio: float = BENCH_RATIO,
    num_bins: int = BENCH_BINS,
    noise_std: float = BENCH_NOISE,
) -> Dataset:
    """Draw the skewed benchmark: labels uniform within each unit bin [b, b+1).

    Features are [y, y^2] scaled into [0, 1] plus N(0, noise_std^2) noise
    on every coordinate. Deterministic under the seed.
    """
    counts = benchmark_counts(base_count, ratio, num_bins)
    rng = np.random.default_rng(seed)
    parts = [rng.uniform(b, b + 1.0, size=int(c)) for b, c in enumerate(counts)]
    labels = np.concatenate(parts)
    base = labels / float(num_bins)
    features = np.column_stack([base, base * base])
    features = features + rng.normal(0.0, noise_std, size=features.shape)
    return Dataset(features, labels)


def benchmark_bin_config(num_bins: int = BENCH_BINS) -> BinConfig:
    """The bin layout the benchmark was generated with: unit-width label bins."""
    return BinConfig.count(num_bins, lo=0.0, hi=float(num_bins))
