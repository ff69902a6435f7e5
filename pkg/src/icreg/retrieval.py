"""Neighbor retrieval for prompt construction.

Features are embedded as the concatenation of two views: a standardized
copy and a Yeo-Johnson power-transformed copy (itself restandardized), so
similarity search sees both the raw scale and a symmetrized shape of each
dimension. Retrieval is cosine k-nearest-neighbor over that embedding,
optionally drawing from two pools at once (train + inverse-density).
"""

from __future__ import annotations

import enum
import hashlib
import json
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .data import Dataset
from .errors import ClampWarning
from .ioutil import atomic_write_text, fmt17

LAMBDA_LO = -5.0
LAMBDA_HI = 5.0
LAMBDA_TOL = 1e-4

_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def yeo_johnson(x: np.ndarray, lam: float) -> np.ndarray:
    """Yeo-Johnson power transform of `x` with exponent `lam`.

    Defined piecewise: for x >= 0 it is ((x+1)^lam - 1)/lam (log1p(x) at
    lam = 0); for x < 0 it is -(((1-x)^(2-lam) - 1)/(2-lam)) (-log1p(-x)
    at lam = 2). Monotone in x for every lam.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    with np.errstate(over="ignore", invalid="ignore"):
        if abs(lam) < np.spacing(1.0):
            out[pos] = np.log1p(x[pos])
        else:
            out[pos] = (np.power(x[pos] + 1.0, lam) - 1.0) / lam
        if abs(lam - 2.0) < np.spacing(1.0):
            out[~pos] = -np.log1p(-x[~pos])
        else:
            out[~pos] = -(np.power(1.0 - x[~pos], 2.0 - lam) - 1.0) / (2.0 - lam)
    return out


def yeo_johnson_loglik(lam: float, x: np.ndarray) -> float:
    """Profile log-likelihood of `lam` under a Gaussian model of the transformed data."""
    x = np.asarray(x, dtype=np.float64)
    z = yeo_johnson(x, lam)
    if not np.all(np.isfinite(z)):
        return -np.inf
    var = z.var()
    if var <= 0.0:
        return -np.inf
    n = x.shape[0]
    jacobian = (lam - 1.0) * np.sum(np.sign(x) * np.log1p(np.abs(x)))
    return float(-0.5 * n * np.log(var) + jacobian)


def golden_section_max(f, lo: float, hi: float, tol: float = LAMBDA_TOL) -> float:
    """Maximize a unimodal scalar function on [lo, hi] to bracket width `tol`."""
    a, b = float(lo), float(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def fit_lambda(x: np.ndarray) -> float:
    """Yeo-Johnson exponent maximizing the profile log-likelihood on [-5, 5]."""
    return golden_section_max(lambda lam: yeo_johnson_loglik(lam, x), LAMBDA_LO, LAMBDA_HI)


@dataclass
class FeatureTransform:
    """Fitted per-dimension scaling: standardize + power-transform views.

    Transforming a d-vector yields a 2d-vector: [standardized | power
    transformed then standardized]. Dimensions that were constant in the
    fitting data carry a flag and map to 0 in the corresponding view.
    """

    means: np.ndarray
    stds: np.ndarray
    std_flags: np.ndarray
    lambdas: np.ndarray
    post_means: np.ndarray
    post_stds: np.ndarray
    post_flags: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.means.shape[0]

    @property
    def output_dim(self) -> int:
        return 2 * self.input_dim

    def transform(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        squeeze = features.ndim == 1
        if squeeze:
            features = features[None, :]
        if features.ndim != 2 or features.shape[1] != self.input_dim:
            raise ValueError(
                f"expected features with {self.input_dim} dimensions, got shape {features.shape}"
            )
        if not np.all(np.isfinite(features)):
            raise ValueError("features must be finite")
        std_view = (features - self.means) / self.stds
        std_view[:, self.std_flags] = 0.0
        power = np.column_stack(
            [yeo_johnson(features[:, j], float(self.lambdas[j])) for j in range(self.input_dim)]
        )
        power_view = (power - self.post_means) / self.post_stds
        power_view[:, self.post_flags] = 0.0
        out = np.hstack([std_view, power_view])
        return out[0] if squeeze else out

    def fingerprint(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    def to_json(self) -> str:
        payload = {
            "format": "feature-transform-v1",
            "means": [fmt17(v) for v in self.means],
            "stds": [fmt17(v) for v in self.stds],
            "std_flags": [bool(v) for v in self.std_flags],
            "lambdas": [fmt17(v) for v in self.lambdas],
            "post_means": [fmt17(v) for v in self.post_means],
            "post_stds": [fmt17(v) for v in self.post_stds],
            "post_flags": [bool(v) for v in self.post_flags],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    def save(self, path: str) -> None:
        atomic_write_text(path, self.to_json())

    @classmethod
    def from_json(cls, text: str) -> "FeatureTransform":
        payload = json.loads(text)
        if payload.get("format") != "feature-transform-v1":
            raise ValueError("not a serialized feature transform")

        def arr(key):
            return np.asarray([float(v) for v in payload[key]], dtype=np.float64)

        def flags(key):
            return np.asarray(payload[key], dtype=bool)

        return cls(
            means=arr("means"),
            stds=arr("stds"),
            std_flags=flags("std_flags"),
            lambdas=arr("lambdas"),
            post_means=arr("post_means"),
            post_stds=arr("post_stds"),
            post_flags=flags("post_flags"),
        )

    @classmethod
    def load(cls, path: str) -> "FeatureTransform":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())


def fit_transform(features: np.ndarray) -> FeatureTransform:
    """Fit the two-view transform on a feature matrix (needs at least 2 rows)."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2:
        raise ValueError("features must be 2-D")
    if features.shape[0] < 2:
        raise ValueError("fitting a transform requires at least 2 rows")
    if not np.all(np.isfinite(features)):
        raise ValueError("features must be finite")
    d = features.shape[1]
    means = features.mean(axis=0)
    stds = features.std(axis=0)
    std_flags = stds == 0.0
    stds = np.where(std_flags, 1.0, stds)
    lambdas = np.empty(d, dtype=np.float64)
    for j in range(d):
        lambdas[j] = 1.0 if std_flags[j] else fit_lambda(features[:, j])
    power = np.column_stack([yeo_johnson(features[:, j], float(lambdas[j])) for j in range(d)])
    post_means = power.mean(axis=0)
    post_stds = power.std(axis=0)
    post_flags = post_stds == 0.0
    post_stds = np.where(post_flags, 1.0, post_stds)
    return FeatureTransform(
        means=means,
        stds=stds,
        std_flags=std_flags,
        lambdas=lambdas,
        post_means=post_means,
        post_stds=post_stds,
        post_flags=post_flags,
    )


class Metric(enum.Enum):
    COSINE = "cosine"
    EUCLIDEAN = "euclidean"


class NeighborList(NamedTuple):
    """Rows into the source pool plus their similarity scores, best first."""

    rows: np.ndarray
    scores: np.ndarray


@dataclass
class RetrievalIndex:
    """Searchable snapshot of a pool: transformed vectors + the pool itself."""

    pool: Dataset
    transform: FeatureTransform
    metric: Metric
    tag: str
    vectors: np.ndarray = field(repr=False, default=None)
    _norms: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.vectors is None:
            self.vectors = self.transform.transform(self.pool.features)
        if self._norms is None:
            self._norms = np.linalg.norm(self.vectors, axis=1)

    def __len__(self) -> int:
        return self.vectors.shape[0]


def build_index(
    pool: Dataset,
    transform: FeatureTransform,
    metric: Metric = Metric.COSINE,
    tag: str = "train",
) -> RetrievalIndex:
    return RetrievalIndex(pool=pool, transform=transform, metric=metric, tag=tag)


def _clamp_k(k: int, available: int, what: str) -> int:
    if k < 0:
        raise ValueError("k must be non-negative")
    if k > available:
        warnings.warn(
            f"requested {k} neighbors from {what} with only {available} rows; clamping",
            ClampWarning,
            stacklevel=3,
        )
        return available
    return k


def knn(index: RetrievalIndex, query: np.ndarray, k: int) -> NeighborList:
    """The k rows of the index most similar to `query`, best first.

    Scores are cosine similarities (or negated Euclidean distances), and
    ties break toward the lower row number. k larger than the pool clamps
    with a warning.
    """
    k = _clamp_k(k, len(index), f"pool {index.tag!r}")
    if k == 0:
        return NeighborList(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
    q = index.transform.transform(np.asarray(query, dtype=np.float64))
    if index.metric is Metric.COSINE:
        qn = np.linalg.norm(q)
        denom = index._norms * qn
        with np.errstate(invalid="ignore", divide="ignore"):
            scores = np.where(denom > 0.0, (index.vectors @ q) / denom, -1.0)
    else:
        diff = index.vectors - q
        scores = -np.sqrt(np.sum(diff * diff, axis=1))
    order = np.argsort(-scores, kind="stable")[:k]
    return NeighborList(order.astype(np.int64), scores[order])


@dataclass
class ContextSet:
    """Retrieved in-context examples for one query, in prompt order."""

    features: np.ndarray
    labels: np.ndarray
    sources: tuple[str, ...]
    query: np.ndarray
    scores: np.ndarray

    def __len__(self) -> int:
        return self.labels.shape[0]


def retrieve_context(index: RetrievalIndex, query: np.ndarray, k: int) -> ContextSet:
    """Single-pool retrieval: the k nearest pool samples as a context."""
    hits = knn(index, query, k)
    return ContextSet(
        features=index.pool.features[hits.rows].copy(),
        labels=index.pool.labels[hits.rows].copy(),
        sources=(index.tag,) * len(hits.rows),
        query=np.asarray(query, dtype=np.float64).copy(),
        scores=hits.scores.copy(),
    )


def augmented_retrieve(
    train_index: RetrievalIndex,
    inverse_index: RetrievalIndex,
    query: np.ndarray,
    k_train: int = 10,
    k_inverse: int = 10,
) -> ContextSet:
    """Two-pool retrieval: k_train nearest train samples followed by
    k_inverse nearest inverse-density samples.

    Both indexes must share one fitted transform. Duplicates across the two
    blocks are kept; k_inverse = 0 degenerates to single-pool retrieval.
    """
    if train_index.transform.fingerprint() != inverse_index.transform.fingerprint():
        raise ValueError("augmented retrieval requires both indexes to share one transform")
    a = retrieve_context(train_index, query, k_train)
    if k_inverse == 0:
        return a
    b = retrieve_context(inverse_index, query, k_inverse)
    return ContextSet(
        features=np.vstack([a.features, b.features]),
        labels=np.concatenate([a.labels, b.labels]),
        sources=a.sources + b.sources,
        query=a.query,
        scores=np.concatenate([a.scores, b.scores]),
    )
