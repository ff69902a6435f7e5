"""Evaluation metrics, shot-region reports, and error-versus-k curves.

Two kinds of curves live here. The analytic bound curve decomposes the
averaging estimator's expected error at context size k into a squared
bias against the k nearest candidate labels plus sigma^2/k + sigma^2
noise terms; on a skewed label distribution it is U-shaped for queries
in the sparse region and flat for queries in the dense region. The
empirical curve runs an actual retrieval + prediction pipeline over a
test set and reports the observed per-region MSE at each k.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .data import BinStats, Dataset, ShotRegion, regions_of_labels
from .predict import GlobalLeastSquares, Prediction, Prompt
from .retrieval import RetrievalIndex, augmented_retrieve, retrieve_context

GM_FLOOR = 1e-10

REGION_ORDER = ("All", "Many", "Medium", "Few")


def _validate_pair(y, y_hat) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.ndim != 1 or y_hat.shape != y.shape:
        raise ValueError(f"mismatched metric inputs: {y.shape} vs {y_hat.shape}")
    if y.size == 0:
        raise ValueError("metrics need at least one sample")
    if not (np.all(np.isfinite(y)) and np.all(np.isfinite(y_hat))):
        raise ValueError("metric inputs must be finite")
    return y, y_hat


def metric_mae(y, y_hat) -> float:
    y, y_hat = _validate_pair(y, y_hat)
    return float(np.mean(np.abs(y - y_hat)))


def metric_mse(y, y_hat) -> float:
    y, y_hat = _validate_pair(y, y_hat)
    return float(np.mean((y - y_hat) ** 2))


def metric_rmse(y, y_hat) -> float:
    return float(np.sqrt(metric_mse(y, y_hat)))


def metric_gm(y, y_hat) -> float:
    """Geometric mean of absolute errors, each floored at 1e-10.

    Computed in log space; the floor keeps exact hits from collapsing the
    whole product to zero.
    """
    y, y_hat = _validate_pair(y, y_hat)
    err = np.maximum(np.abs(y - y_hat), GM_FLOOR)
    return float(np.exp(np.mean(np.log(err))))


@dataclass(frozen=True)
class MetricRow:
    """All four error metrics plus the sample count they were computed on."""

    count: int
    mae: float
    mse: float
    rmse: float
    gm: float


def metric_row(y, y_hat) -> MetricRow:
    return MetricRow(
        count=int(np.asarray(y).shape[0]),
        mae=metric_mae(y, y_hat),
        mse=metric_mse(y, y_hat),
        rmse=metric_rmse(y, y_hat),
        gm=metric_gm(y, y_hat),
    )


@dataclass
class RegionMetrics:
    """Per shot-region metric rows; a region with no samples maps to None."""

    rows: dict[str, MetricRow | None]

    def count(self, region: str) -> int:
        row = self.rows[region]
        return 0 if row is None else row.count

    def get(self, region: str, metric: str) -> float | None:
        row = self.rows[region]
        return None if row is None else getattr(row, metric)


def per_region_report(y, y_hat, labels, bins: BinStats) -> RegionMetrics:
    """Metrics overall and per shot region of each sample's label bin.

    Regions come from the *training* bin statistics, so a test sample in a
    sparsely trained part of the label range lands in Few even though the
    test set itself may be balanced.
    """
    y, y_hat = _validate_pair(y, y_hat)
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != y.shape:
        raise ValueError("labels must align with y")
    sample_regions = regions_of_labels(labels, bins)
    rows: dict[str, MetricRow | None] = {"All": metric_row(y, y_hat)}
    for region in (ShotRegion.MANY, ShotRegion.MEDIUM, ShotRegion.FEW):
        mask = np.array([r is region for r in sample_regions])
        rows[region.value] = metric_row(y[mask], y_hat[mask]) if mask.any() else None
    return RegionMetrics(rows=rows)


# ---------------------------------------------------------------------------
# analytic bound curves


@dataclass
class BoundCurve:
    """Eq-style decomposition of averaging error as context size grows."""

    k: np.ndarray
    bias2: np.ndarray
    variance: np.ndarray
    total: np.ndarray
    sigma: float

    def argmin_k(self) -> int:
        return int(self.k[int(np.argmin(self.total))])


def ideal_sort(query_label: float, labels) -> np.ndarray:
    """Candidates ordered by distance to the query's own label (ideal retrieval)."""
    labels = np.asarray(labels, dtype=np.float64)
    order = np.lexsort((np.arange(labels.shape[0]), np.abs(labels - query_label)))
    return labels[order]


def bound_curve(query_label: float, candidates, sigma: float, k_max: int) -> BoundCurve:
    """Bias/variance decomposition of averaging the k nearest candidate labels.

    For each k in 1..k_max: bias2 = (y - mean of first k candidates)^2,
    variance = sigma^2/k, total = bias2 + sigma^2/k + sigma^2. Candidates
    must already be sorted by ascending |label - query_label|.
    """
    candidates = np.asarray(candidates, dtype=np.float64)
    if candidates.ndim != 1 or candidates.size == 0:
        raise ValueError("candidates must be a non-empty vector")
    if not 1 <= k_max <= candidates.size:
        raise ValueError(f"k_max must be in 1..{candidates.size}")
    gaps = np.abs(candidates - query_label)
    if np.any(np.diff(gaps) < 0):
        raise ValueError("candidates must be sorted by ascending label distance")
    k = np.arange(1, k_max + 1)
    means = np.cumsum(candidates[:k_max]) / k
    bias2 = (query_label - means) ** 2
    variance = sigma**2 / k
    total = bias2 + variance + sigma**2
    return BoundCurve(k=k, bias2=bias2, variance=variance, total=total, sigma=float(sigma))


def estimate_sigma(train: Dataset, bins: BinStats | None = None) -> float:
    """Noise scale for bound curves: standard deviation of global OLS residuals."""
    model = GlobalLeastSquares.fit(train)
    residuals = train.labels - (train.features @ model.coef + model.intercept)
    return float(np.std(residuals))


# ---------------------------------------------------------------------------
# empirical curves


class CurvePoint(NamedTuple):
    k: int
    region: str
    mse: float | None
    count: int


def empirical_error_curve(
    test: Dataset,
    train_index: RetrievalIndex,
    inverse_index: RetrievalIndex | None,
    predictor: Callable[[Prompt], Prediction],
    k_list: Sequence[int],
    bins: BinStats,
) -> list[CurvePoint]:
    """Observed per-region MSE versus context size.

    With only a train index, each query retrieves its k nearest train
    samples; with an inverse-density index as well, the context is split
    half and half between the two pools (k must be even). Rows cover
    every k for all of All/Many/Medium/Few, empty regions with mse None.
    """
    points: list[CurvePoint] = []
    for k in k_list:
        if k < 1:
            raise ValueError("every k must be >= 1")
        if inverse_index is not None and k % 2 != 0:
            raise ValueError(f"augmented retrieval splits k evenly; k={k} is odd")
        predictions = np.empty(len(test))
        for i in range(len(test)):
            query = test.features[i]
            if inverse_index is None:
                ctx = retrieve_context(train_index, query, k)
            else:
                ctx = augmented_retrieve(train_index, inverse_index, query, k // 2, k // 2)
            prompt = Prompt(ctx.features, ctx.labels, query)
            predictions[i] = predictor(prompt).value
        report = per_region_report(test.labels, predictions, test.labels, bins)
        for region in REGION_ORDER:
            row = report.rows[region]
            points.append(
                CurvePoint(
                    k=int(k),
                    region=region,
                    mse=None if row is None else row.mse,
                    count=0 if row is None else row.count,
                )
            )
    return points


# ---------------------------------------------------------------------------
# seed aggregation


@dataclass(frozen=True)
class SummaryCell:
    """Across-seed mean and population standard deviation of one metric."""

    mean: float
    std: float
    n_seeds: int


@dataclass
class EvalReport:
    """Per-seed region metrics plus their across-seed summary."""

    per_seed: dict[int, RegionMetrics]
    manifest: dict[str, object] = field(default_factory=dict)

    @property
    def seeds(self) -> list[int]:
        return sorted(self.per_seed)

    def summary(self) -> dict[str, dict[str, SummaryCell | None]]:
        out: dict[str, dict[str, SummaryCell | None]] = {}
        for region in REGION_ORDER:
            cells: dict[str, SummaryCell | None] = {}
            for metric in ("mae", "mse", "rmse", "gm"):
                values = [
                    self.per_seed[s].get(region, metric)
                    for s in self.seeds
                    if self.per_seed[s].rows[region] is not None
                ]
                if values:
                    arr = np.asarray(values, dtype=np.float64)
                    cells[metric] = SummaryCell(
                        mean=float(arr.mean()), std=float(arr.std()), n_seeds=len(values)
                    )
                else:
                    cells[metric] = None
            out[region] = cells
        return out
