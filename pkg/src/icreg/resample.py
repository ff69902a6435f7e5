"""Companion training pools: inverse-density resampling, balanced downsampling,
and SMOTER-style synthetic oversampling of the sparse label region.

The inverse-density pool reverses the label density of the original
training set: bins that dominate the original pool are thinned while
sparse bins are overrepresented, so neighbor retrieval against it is not
biased toward the majority region.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass

import numpy as np

from .data import FEW_BELOW, BinStats, Dataset, ShotRegion, bin_index_of
from .errors import ClampWarning

SMOTER_GROWTH_CAP = 5  # per-bin synthetic budget: 5x the original bin count


class Strategy(enum.Enum):
    VANILLA = "vanilla"
    DOWNSAMPLE = "downsample"
    INVERSE = "inverse"
    SMOTER = "smoter"
    AUGMENTED = "augmented"

    @classmethod
    def parse(cls, name: str) -> "Strategy":
        try:
            return cls(name.strip().lower())
        except ValueError:
            valid = ", ".join(s.value for s in cls)
            raise ValueError(f"unknown strategy {name!r} (expected one of: {valid})") from None


@dataclass(frozen=True)
class ResamplePlan:
    """Record of a resampling run: per-bin target counts, strategy, seed."""

    targets: np.ndarray
    strategy: Strategy
    seed: int


def inverse_targets(counts: np.ndarray) -> np.ndarray:
    """Per-bin targets proportional to 1/count, normalized to the pool size.

    Empty bins get target 0. t_b = round(n * (1/c_b) / sum_b'(1/c_b')).
    """
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    inv = np.zeros_like(counts)
    nz = counts > 0
    inv[nz] = 1.0 / counts[nz]
    weights = inv / inv.sum()
    return np.floor(weights * n + 0.5).astype(np.int64)


def _bin_members(train: Dataset, bins: BinStats) -> list[np.ndarray]:
    idx = bin_index_of(train.labels, bins.edges)
    return [np.flatnonzero(idx == b) for b in range(bins.num_bins)]


def inverse_density_dataset(train: Dataset, bins: BinStats, seed: int) -> Dataset:
    """Resample `train` so per-bin counts are inversely proportional to the originals.

    Bins whose target exceeds their population are sampled with replacement
    (duplicates encode the reweighting); the rest are sampled without.
    Output size is within num_bins of len(train) (rounding slack).
    """
    targets = inverse_targets(bins.counts)
    rng = np.random.default_rng(seed)
    rows: list[np.ndarray] = []
    for members, t in zip(_bin_members(train, bins), targets):
        if t == 0 or len(members) == 0:
            continue
        rows.append(rng.choice(members, size=int(t), replace=int(t) > len(members)))
    return train.subset(np.concatenate(rows))


def downsample_balanced(train: Dataset, bins: BinStats, seed: int) -> Dataset:
    """Cap every nonempty bin at the minimum nonempty bin count (uniform, no replacement)."""
    counts = bins.counts
    c_min = int(counts[counts > 0].min())
    rng = np.random.default_rng(seed)
    rows = [
        rng.choice(members, size=c_min, replace=False)
        for members in _bin_members(train, bins)
        if len(members) > 0
    ]
    return train.subset(np.concatenate(rows))


def smoter_augment(
    train: Dataset, bins: BinStats, seed: int, neighbors_k: int = 5
) -> Dataset:
    """Grow every Few-region bin with interpolated synthetic samples.

    Each Few bin receives min(20 - count, 5 * count) synthetics. A synthetic
    is a convex combination (u ~ Uniform(0,1)) of a Few-region sample and one
    of its `neighbors_k` nearest Few-region samples (Euclidean distance in
    raw feature space). A Few sample with no other Few-region sample to pair
    with is duplicated instead, with a warning.
    """
    members_by_bin = _bin_members(train, bins)
    few_bins = [
        b
        for b in range(bins.num_bins)
        if bins.counts[b] > 0 and bins.regions[b] is ShotRegion.FEW
    ]
    if not few_bins:
        return Dataset(train.features.copy(), train.labels.copy())

    few_rows = np.concatenate([members_by_bin[b] for b in few_bins])
    few_rows = np.sort(few_rows)
    pos_of_row = {int(r): p for p, r in enumerate(few_rows)}
    fx = train.features[few_rows]
    # pairwise Euclidean distances among Few samples, raw feature space
    sq = np.sum(fx * fx, axis=1)
    d2 = np.maximum(sq[:, None] + sq[None, :] - 2.0 * fx @ fx.T, 0.0)

    rng = np.random.default_rng(seed)
    synth_x: list[np.ndarray] = []
    synth_y: list[float] = []
    n_duplicated = 0
    for b in few_bins:
        members = members_by_bin[b]
        quota = min(FEW_BELOW - int(bins.counts[b]), SMOTER_GROWTH_CAP * int(bins.counts[b]))
        made = 0
        turn = 0
        while made < quota:
            s = int(members[turn % len(members)])
            turn += 1
            p = pos_of_row[s]
            order = np.lexsort((few_rows, d2[p]))
            order = order[few_rows[order] != s][:neighbors_k]
            if len(order) == 0:
                synth_x.append(train.features[s].copy())
                synth_y.append(float(train.labels[s]))
                n_duplicated += 1
            else:
                q = int(few_rows[order[rng.integers(len(order))]])
                u = rng.uniform()
                synth_x.append((1.0 - u) * train.features[s] + u * train.features[q])
                synth_y.append(float((1.0 - u) * train.labels[s] + u * train.labels[q]))
            made += 1
    if n_duplicated:
        warnings.warn(
            f"{n_duplicated} synthetic sample(s) are duplicates: isolated Few-region "
            "samples had no neighbor to interpolate with",
            ClampWarning,
            stacklevel=2,
        )
    features = np.vstack([train.features, np.asarray(synth_x)])
    labels = np.concatenate([train.labels, np.asarray(synth_y)])
    return Dataset(features, labels)


def build_pools(
    train: Dataset, strategy: Strategy, bins: BinStats, seed: int
) -> tuple[Dataset, Dataset | None]:
    """Materialize the retrieval pool(s) for a sampling strategy.

    Single-pool strategies return (pool, None); the augmented strategy
    returns (train, inverse-density pool) so retrieval can mix both.
    """
    if strategy is Strategy.VANILLA:
        return train, None
    if strategy is Strategy.DOWNSAMPLE:
        return downsample_balanced(train, bins, seed), None
    if strategy is Strategy.INVERSE:
        return inverse_density_dataset(train, bins, seed), None
    if strategy is Strategy.SMOTER:
        return smoter_augment(train, bins, seed), None
    if strategy is Strategy.AUGMENTED:
        return train, inverse_density_dataset(train, bins, seed)
    raise ValueError(f"unhandled strategy: {strategy}")


def plan_for(strategy: Strategy, bins: BinStats, seed: int) -> ResamplePlan:
    """Per-bin target counts a strategy will produce (for manifests)."""
    counts = np.asarray(bins.counts, dtype=np.int64)
    if strategy in (Strategy.VANILLA, Strategy.AUGMENTED):
        targets = counts.copy()
    elif strategy is Strategy.DOWNSAMPLE:
        c_min = int(counts[counts > 0].min())
        targets = np.where(counts > 0, c_min, 0)
    elif strategy is Strategy.INVERSE:
        targets = inverse_targets(counts)
    elif strategy is Strategy.SMOTER:
        grow = [
            min(FEW_BELOW - int(c), SMOTER_GROWTH_CAP * int(c))
            if c > 0 and r is ShotRegion.FEW
            else 0
            for c, r in zip(counts, bins.regions)
        ]
        targets = counts + np.asarray(grow, dtype=np.int64)
    else:
        raise ValueError(f"unhandled strategy: {strategy}")
    return ResamplePlan(targets=targets, strategy=strategy, seed=seed)
