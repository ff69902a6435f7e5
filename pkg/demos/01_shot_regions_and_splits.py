"""Shot regions and balanced splits on a skewed label distribution.

Generates the built-in benchmark (exponentially decaying bin counts),
assigns equal-width label bins, reports which bins are Many/Medium/Few
shot, and draws a balanced train/test split so the test set is roughly
uniform over the label range even though training data is not.
"""

import numpy as np

from icreg.benchmark import benchmark_bin_config, generate_benchmark
from icreg.data import balanced_split, bin_index_of, bin_stats

def main():
    dataset = generate_benchmark(seed=0)
    config = benchmark_bin_config()
    print(f"benchmark: {len(dataset)} samples, features {dataset.features.shape}")

    stats = bin_stats(dataset.labels, config)
    print("\nper-bin training density before any split:")
    print(f"{'bin':>4} {'range':>12} {'count':>6}  region")
    for b in range(stats.num_bins):
        lo, hi = stats.edges[b], stats.edges[b + 1]
        print(f"{b:>4} {f'[{lo:.0f}, {hi:.0f})':>12} {stats.counts[b]:>6}  {stats.regions[b]}")

    train, test = balanced_split(dataset, 0.2, config, seed=0)
    print(f"\nbalanced 20% split: {len(train)} train / {len(test)} test")

    test_counts = np.bincount(bin_index_of(test.labels, stats.edges), minlength=stats.num_bins)
    print("test-set counts per bin (near-uniform where data allows):")
    print("  " + " ".join(f"{c:>3}" for c in test_counts))

    train_stats = bin_stats(train.labels, config)
    print("train counts per bin after the split:")
    print("  " + " ".join(f"{c:>3}" for c in train_stats.counts))
    print("\nregions are decided by train counts: Few < 20 <= Medium <= 100 < Many")

if __name__ == "__main__":
    main()
