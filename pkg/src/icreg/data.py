"""Dataset ingestion, label binning, shot-region classification, and balanced splits.

Labels are discretized into equal-width bins; each bin falls into a shot
region according to how many training samples it holds (Few < 20,
Medium 20..100, Many > 100). Test sets are built bin-balanced so that
evaluation is near-uniform over the label range even when training
labels are heavily skewed.
"""

from __future__ import annotations

import csv
import enum
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import ClampWarning, DataError
from .ioutil import atomic_write_text, fmt17

FEW_BELOW = 20    # a bin with fewer training samples than this is Few
MANY_ABOVE = 100  # a bin with more training samples than this is Many


class ShotRegion(enum.Enum):
    MANY = "Many"
    MEDIUM = "Medium"
    FEW = "Few"

    def __str__(self) -> str:
        return self.value


def shot_region(count: int) -> ShotRegion:
    """Classify a per-bin training count: Few < 20, Medium 20..100, Many > 100."""
    if count < 0:
        raise ValueError(f"negative bin count: {count}")
    if count < FEW_BELOW:
        return ShotRegion.FEW
    if count <= MANY_ABOVE:
        return ShotRegion.MEDIUM
    return ShotRegion.MANY


class Sample(NamedTuple):
    features: np.ndarray
    label: float


@dataclass
class Dataset:
    """A feature matrix with scalar labels; the container for every pool.

    features : float64 array of shape (n, d)
    labels   : float64 array of shape (n,)
    """

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {self.features.shape}")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError(
                f"labels shape {self.labels.shape} does not match {self.features.shape[0]} rows"
            )
        if len(self.labels) == 0:
            raise ValueError("dataset is empty")
        if not np.all(np.isfinite(self.features)):
            raise ValueError("features contain NaN or Inf")
        if not np.all(np.isfinite(self.labels)):
            raise ValueError("labels contain NaN or Inf")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def sample(self, i: int) -> Sample:
        return Sample(self.features[i], float(self.labels[i]))

    def subset(self, indices) -> "Dataset":
        indices = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[indices].copy(), self.labels[indices].copy())


@dataclass(frozen=True)
class BinConfig:
    """Equal-width label binning, either by bin count or by bin width.

    The range defaults to [min(labels), max(labels)] when lo/hi are not
    given. An all-equal (degenerate) label range expands to [v, v+1] so
    binning stays total; every label then lands in bin 0.
    """

    num_bins: int | None = None
    bin_width: float | None = None
    lo: float | None = None
    hi: float | None = None

    def __post_init__(self):
        if (self.num_bins is None) == (self.bin_width is None):
            raise ValueError("specify exactly one of num_bins or bin_width")
        if self.num_bins is not None and self.num_bins < 1:
            raise ValueError(f"num_bins must be >= 1, got {self.num_bins}")
        if self.bin_width is not None and not self.bin_width > 0:
            raise ValueError(f"bin_width must be > 0, got {self.bin_width}")
        if self.lo is not None and self.hi is not None and not self.lo <= self.hi:
            raise ValueError(f"invalid range [{self.lo}, {self.hi}]")

    @classmethod
    def count(cls, num_bins: int, lo: float | None = None, hi: float | None = None) -> "BinConfig":
        return cls(num_bins=num_bins, lo=lo, hi=hi)

    @classmethod
    def width(cls, bin_width: float, lo: float | None = None, hi: float | None = None) -> "BinConfig":
        return cls(bin_width=bin_width, lo=lo, hi=hi)

    def resolve_edges(self, labels: np.ndarray) -> np.ndarray:
        """Concrete bin edges for this config over `labels` (strictly increasing)."""
        labels = np.asarray(labels, dtype=np.float64)
        lo = float(labels.min()) if self.lo is None else float(self.lo)
        hi = float(labels.max()) if self.hi is None else float(self.hi)
        if hi <= lo:
            # degenerate range: unit width with the value at the left edge
            hi = lo + 1.0
        if self.num_bins is not None:
            return np.linspace(lo, hi, self.num_bins + 1)
        nb = int(math.floor((hi - lo) / self.bin_width + 1e-9)) + 1
        return lo + self.bin_width * np.arange(nb + 1, dtype=np.float64)


@dataclass
class BinStats:
    """Bin edges with per-bin training counts and the shot region of each bin."""

    edges: np.ndarray
    counts: np.ndarray
    regions: tuple[ShotRegion, ...]

    @property
    def num_bins(self) -> int:
        return len(self.counts)


def bin_index_of(labels, edges: np.ndarray) -> np.ndarray:
    """Vectorized bin assignment: edges[i] <= label < edges[i+1], top edge inclusive.

    Out-of-range labels are clamped to the boundary bins (no warning here;
    assign_bins warns).
    """
    labels = np.atleast_1d(np.asarray(labels, dtype=np.float64))
    nb = len(edges) - 1
    idx = np.searchsorted(edges, labels, side="right") - 1
    return np.clip(idx, 0, nb - 1)


def assign_bins(labels, config: BinConfig) -> tuple[np.ndarray, np.ndarray]:
    """Assign each label to an equal-width bin.

    Returns (indices, edges). Labels outside [edges[0], edges[-1]] are
    clamped to the nearest boundary bin and counted in a ClampWarning.
    """
    labels = np.atleast_1d(np.asarray(labels, dtype=np.float64))
    if not np.all(np.isfinite(labels)):
        raise DataError("labels contain NaN or Inf")
    edges = config.resolve_edges(labels)
    idx = bin_index_of(labels, edges)
    n_clamped = int(np.sum((labels < edges[0]) | (labels > edges[-1])))
    if n_clamped:
        warnings.warn(
            f"{n_clamped} label(s) outside [{edges[0]}, {edges[-1]}] clamped to boundary bins",
            ClampWarning,
            stacklevel=2,
        )
    return idx, edges


def bin_stats(labels, config: BinConfig) -> BinStats:
    """Bin `labels` and compute per-bin counts and shot regions."""
    idx, edges = assign_bins(labels, config)
    nb = len(edges) - 1
    counts = np.bincount(idx, minlength=nb)
    regions = tuple(shot_region(int(c)) for c in counts)
    return BinStats(edges=edges, counts=counts, regions=regions)


def region_of_label(label: float, bins: BinStats) -> ShotRegion:
    """Shot region of the training bin a label falls in (clamped at the boundaries)."""
    idx = int(bin_index_of(label, bins.edges)[0])
    return bins.regions[idx]


def regions_of_labels(labels, bins: BinStats) -> list[ShotRegion]:
    idx = bin_index_of(labels, bins.edges)
    return [bins.regions[i] for i in idx]


def balanced_split(
    dataset: Dataset, test_fraction: float, config: BinConfig, seed: int
) -> tuple[Dataset, Dataset]:
    """Split into train/test so the test set is near-uniform over label bins.

    The per-bin test cap is floor(round(n * test_fraction) / #nonempty bins);
    each nonempty bin contributes min(cap, count - 1) test samples drawn
    uniformly without replacement, so every nonempty bin keeps at least
    one training sample. Deterministic under `seed`.
    """
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {test_fraction}")
    n = len(dataset)
    idx, edges = assign_bins(dataset.labels, config)
    nb = len(edges) - 1
    counts = np.bincount(idx, minlength=nb)
    nonempty = np.flatnonzero(counts)
    target_test = int(n * test_fraction + 0.5)
    cap = target_test // len(nonempty)
    if cap == 0:
        raise DataError(
            f"per-bin test cap is 0 ({target_test} test samples over {len(nonempty)} "
            "nonempty bins); increase test_fraction or use coarser bins"
        )
    rng = np.random.default_rng(seed)
    test_rows: list[np.ndarray] = []
    for b in nonempty:
        members = np.flatnonzero(idx == b)
        take = min(cap, len(members) - 1)
        if take > 0:
            test_rows.append(rng.choice(members, size=take, replace=False))
    test_idx = np.sort(np.concatenate(test_rows)) if test_rows else np.empty(0, dtype=np.intp)
    mask = np.ones(n, dtype=bool)
    mask[test_idx] = False
    train_idx = np.flatnonzero(mask)
    if len(test_idx) == 0:
        raise DataError("balanced split produced an empty test set")
    return dataset.subset(train_idx), dataset.subset(test_idx)


def load_csv(path: str | Path, label_column: str | int, has_header: bool = True) -> Dataset:
    """Load a delimited text file into a Dataset, removing the label column.

    `label_column` is a header name (requires has_header) or a 0-based
    column index. Lines starting with '#' are manifest comments and are
    skipped. Ragged rows, non-numeric cells, and NaN/Inf values are
    rejected with the offending row (1-based, counting the header).
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = [r for r in reader if r and not r[0].lstrip().startswith("#")]
    if not rows:
        raise DataError(f"{path}: file is empty")

    header: list[str] | None = None
    first_data = 0
    if has_header:
        header = [c.strip() for c in rows[0]]
        first_data = 1
    if isinstance(label_column, str):
        if header is None:
            raise DataError("label column given by name but file has no header")
        try:
            label_idx = header.index(label_column)
        except ValueError:
            raise DataError(f"{path}: no column named {label_column!r}") from None
    else:
        label_idx = int(label_column)

    data_rows = rows[first_data:]
    if not data_rows:
        raise DataError(f"{path}: no data rows")
    width = len(data_rows[0])
    if not 0 <= label_idx < width:
        raise DataError(f"{path}: label column {label_idx} out of range for {width} columns")

    feats = np.empty((len(data_rows), width - 1), dtype=np.float64)
    labels = np.empty(len(data_rows), dtype=np.float64)
    for i, row in enumerate(data_rows):
        rowno = i + first_data + 1
        if len(row) != width:
            raise DataError(f"{path}: row {rowno}: expected {width} fields, got {len(row)}")
        try:
            vals = [float(c) for c in row]
        except ValueError as exc:
            raise DataError(f"{path}: row {rowno}: non-numeric cell ({exc})") from None
        if not all(math.isfinite(v) for v in vals):
            bad = next(j for j, v in enumerate(vals) if not math.isfinite(v))
            raise DataError(f"{path}: row {rowno}, column {bad}: NaN/Inf not allowed")
        labels[i] = vals[label_idx]
        feats[i] = vals[:label_idx] + vals[label_idx + 1 :]
    return Dataset(feats, labels)


def save_csv(
    dataset: Dataset, path: str | Path, label_name: str = "label", comment: str | None = None
) -> Path:
    """Write a Dataset as CSV (d feature columns then the label), 17-digit floats.

    An optional comment becomes a leading '# ...' manifest line. Round-trips
    bit-exactly through load_csv(path, label_name).
    """
    d = dataset.feature_dim
    header = [f"f{j}" for j in range(d)] + [label_name]
    lines = [] if comment is None else [f"# {comment}"]
    lines.append(",".join(header))
    for i in range(len(dataset)):
        cells = [fmt17(v) for v in dataset.features[i]] + [fmt17(dataset.labels[i])]
        lines.append(",".join(cells))
    return atomic_write_text(path, "\n".join(lines) + "\n")
