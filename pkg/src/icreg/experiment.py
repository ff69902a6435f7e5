"""Config-driven experiment pipeline: split, resample, retrieve, predict, report.

One ExperimentConfig fully determines a run. Per seed: re-split the
dataset, rebuild pools and indexes, predict every test point, and compute
per-region metrics; seeds are then aggregated into an EvalReport whose
CSVs are byte-reproducible (17-significant-digit floats, no timestamps,
manifest comment carrying the config hash and seed list).
"""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .analysis import REGION_ORDER, EvalReport, RegionMetrics, per_region_report
from .data import BinConfig, BinStats, Dataset, balanced_split, bin_stats, load_csv
from .errors import UsageError
from .ioutil import fmt17, write_csv
from .predict import (
    ExternalPredictor,
    ExternalPredictorSpec,
    GlobalLeastSquares,
    Prompt,
    chunked,
    predict_average,
    predict_ridge,
)
from .resample import Strategy, build_pools
from .retrieval import augmented_retrieve, build_index, fit_transform, retrieve_context
from .transformer import ICLModel, as_predictor, load_checkpoint

PREDICTOR_KINDS = ("average", "ridge", "ols", "icl", "external")

METRIC_COLUMNS = ("mae", "mse", "rmse", "gm")


def worker_count() -> int:
    """Worker threads for per-query prediction, from ICREG_WORKERS (default 1)."""
    raw = os.environ.get("ICREG_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise UsageError(f"ICREG_WORKERS must be an integer, got {raw!r}") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; hashable into a short manifest fingerprint."""

    dataset: str
    label_column: str | int = "label"
    has_header: bool = True
    num_bins: int | None = None
    bin_width: float | None = None
    bin_lo: float | None = None
    bin_hi: float | None = None
    test_fraction: float = 0.2
    strategy: Strategy = Strategy.AUGMENTED
    k_train: int = 10
    k_inverse: int = 10
    predictor: str = "average"
    checkpoint: str | None = None
    external_spec: str | None = None
    chunk_dim: int | None = None
    sigma_override: float | None = None
    k_max: int = 50
    seeds: tuple[int, ...] = (0, 1, 2)
    out_dir: str = "runs"

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        if not self.seeds:
            raise UsageError("seeds must be non-empty")
        if (self.num_bins is None) == (self.bin_width is None):
            raise UsageError("specify exactly one of num_bins or bin_width")
        if self.predictor not in PREDICTOR_KINDS:
            raise UsageError(
                f"unknown predictor {self.predictor!r} (expected one of: {', '.join(PREDICTOR_KINDS)})"
            )
        if self.predictor == "icl" and not self.checkpoint:
            raise UsageError("predictor 'icl' requires a checkpoint path")
        if self.predictor == "external" and not self.external_spec:
            raise UsageError("predictor 'external' requires an external_spec path")
        if self.k_train < 0 or self.k_inverse < 0 or self.k_train + self.k_inverse < 1:
            raise UsageError("k_train/k_inverse must be non-negative and sum to at least 1")
        if self.chunk_dim is not None and self.chunk_dim < 1:
            raise UsageError("chunk_dim must be >= 1")
        if not 0.0 < self.test_fraction < 1.0:
            raise UsageError("test_fraction must be in (0, 1)")

    def bin_config(self) -> BinConfig:
        if self.num_bins is not None:
            return BinConfig.count(self.num_bins, lo=self.bin_lo, hi=self.bin_hi)
        return BinConfig.width(self.bin_width, lo=self.bin_lo, hi=self.bin_hi)

    def config_hash(self) -> str:
        """Fingerprint of the experiment identity; out_dir is excluded because
        it changes where results land, not what they are."""
        payload = asdict(self)
        payload.pop("out_dir")
        payload["strategy"] = self.strategy.value
        payload["seeds"] = list(self.seeds)
        blob = json.dumps(payload, sort_keys=True)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:12]

    def manifest(self) -> dict[str, object]:
        return {
            "config": self.config_hash(),
            "dataset": self.dataset,
            "strategy": self.strategy.value,
            "k_train": self.k_train,
            "k_inverse": self.k_inverse,
            "predictor": self.predictor,
            "bins": f"count={self.num_bins}" if self.num_bins is not None else f"width={self.bin_width}",
            "seeds": list(self.seeds),
        }

    def manifest_line(self) -> str:
        return f"config={self.config_hash()} seeds={','.join(str(s) for s in self.seeds)}"


@dataclass
class SeedResult:
    """One seed's slice of a run, kept for curves and debugging."""

    seed: int
    bins: BinStats
    metrics: RegionMetrics
    predictions: np.ndarray
    train: Dataset = field(repr=False, default=None)
    test: Dataset = field(repr=False, default=None)


def _add_context(exc: Exception, seed: int, stage: str) -> Exception:
    # Equivalent to add_note, but assigns __notes__ directly so the
    # annotation also exists on interpreters predating PEP 678.
    note = f"[seed {seed}, stage {stage}]"
    notes = getattr(exc, "__notes__", None)
    if notes is None:
        notes = []
        try:
            exc.__notes__ = notes
        except AttributeError:
            return exc
    notes.append(note)
    return exc


def _make_predictor(
    config: ExperimentConfig, train: Dataset, model: ICLModel | None
) -> tuple[Callable[[Prompt], object], Callable[[], None]]:
    kind = config.predictor
    close = lambda: None  # noqa: E731
    if kind == "average":
        base = predict_average
    elif kind == "ridge":
        base = predict_ridge
    elif kind == "ols":
        base = GlobalLeastSquares.fit(train)
    elif kind == "icl":
        base = as_predictor(model)
    else:
        spec = ExternalPredictorSpec.from_file(config.external_spec)
        ext = ExternalPredictor(spec)
        base, close = ext, ext.close
        if config.chunk_dim is None and spec.input_dim is not None:
            base = chunked(base, spec.input_dim)
    if config.chunk_dim is not None:
        base = chunked(base, config.chunk_dim)
    return base, close


def run_seed(
    config: ExperimentConfig, dataset: Dataset, seed: int, model: ICLModel | None = None
) -> SeedResult:
    """One full pipeline pass under a single seed."""
    stage = "split"
    try:
        train, test = balanced_split(dataset, config.test_fraction, config.bin_config(), seed)
        stage = "bins"
        bins = bin_stats(train.labels, config.bin_config())
        stage = "pools"
        pool_a, pool_b = build_pools(train, config.strategy, bins, seed)
        stage = "transform"
        transform = fit_transform(train.features)
        stage = "index"
        index_a = build_index(pool_a, transform, tag=config.strategy.value)
        index_b = build_index(pool_b, transform, tag="inverse") if pool_b is not None else None
        stage = "predictor"
        predictor, close = _make_predictor(config, train, model)
        stage = "predict"
        k_single = config.k_train + config.k_inverse

        def predict_one(i: int) -> float:
            query = test.features[i]
            if index_b is not None:
                ctx = augmented_retrieve(index_a, index_b, query, config.k_train, config.k_inverse)
            else:
                ctx = retrieve_context(index_a, query, k_single)
            return predictor(Prompt(ctx.features, ctx.labels, query)).value

        workers = worker_count()
        try:
            if workers > 1 and config.predictor != "external":
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    predictions = np.fromiter(
                        pool.map(predict_one, range(len(test))), dtype=np.float64, count=len(test)
                    )
            else:
                predictions = np.fromiter(
                    (predict_one(i) for i in range(len(test))), dtype=np.float64, count=len(test)
                )
        finally:
            close()
        stage = "metrics"
        metrics = per_region_report(test.labels, predictions, test.labels, bins)
    except Exception as exc:
        raise _add_context(exc, seed, stage)
    return SeedResult(
        seed=seed, bins=bins, metrics=metrics, predictions=predictions, train=train, test=test
    )


def run_experiment(
    config: ExperimentConfig, dataset: Dataset | None = None
) -> tuple[EvalReport, list[SeedResult]]:
    """Run every seed and aggregate; loads the dataset if not supplied."""
    if dataset is None:
        dataset = load_csv(config.dataset, config.label_column, config.has_header)
    model = load_checkpoint(config.checkpoint) if config.predictor == "icl" else None
    results = [run_seed(config, dataset, seed, model) for seed in config.seeds]
    report = EvalReport(
        per_seed={r.seed: r.metrics for r in results}, manifest=config.manifest()
    )
    return report, results


def _cell(value) -> str:
    return "" if value is None else fmt17(value)


def write_report(report: EvalReport, config: ExperimentConfig, out_dir: str) -> dict[str, str]:
    """Emit per-seed and summary CSVs plus an aligned text table.

    Returns the written paths keyed by artifact name. Identical config and
    seeds yield byte-identical files.
    """
    os.makedirs(out_dir, exist_ok=True)
    comment = config.manifest_line()
    paths: dict[str, str] = {}

    rows = []
    for seed in report.seeds:
        metrics = report.per_seed[seed]
        for region in REGION_ORDER:
            row = metrics.rows[region]
            rows.append(
                [
                    str(seed),
                    region,
                    str(0 if row is None else row.count),
                    *(_cell(None if row is None else getattr(row, m)) for m in METRIC_COLUMNS),
                ]
            )
    per_seed_path = os.path.join(out_dir, "report_per_seed.csv")
    write_csv(per_seed_path, ["seed", "region", "count", *METRIC_COLUMNS], rows, comment=comment)
    paths["per_seed"] = per_seed_path

    summary = report.summary()
    header = ["region", "n_seeds"]
    for m in METRIC_COLUMNS:
        header += [f"{m}_mean", f"{m}_std"]
    rows = []
    for region in REGION_ORDER:
        cells = summary[region]
        n_seeds = max((c.n_seeds for c in cells.values() if c is not None), default=0)
        row = [region, str(n_seeds)]
        for m in METRIC_COLUMNS:
            c = cells[m]
            row += [_cell(None if c is None else c.mean), _cell(None if c is None else c.std)]
        rows.append(row)
    summary_path = os.path.join(out_dir, "report_summary.csv")
    write_csv(summary_path, header, rows, comment=comment)
    paths["summary"] = summary_path

    table_path = os.path.join(out_dir, "report_summary.txt")
    _write_table(table_path, summary, comment)
    paths["table"] = table_path
    return paths


def _write_table(path: str, summary: dict, comment: str) -> None:
    from .ioutil import atomic_write_text

    lines = [f"# {comment}"]
    head = f"{'region':<8}" + "".join(f"{m.upper():>22}" for m in METRIC_COLUMNS)
    lines.append(head)
    for region in REGION_ORDER:
        cells = summary[region]
        parts = [f"{region:<8}"]
        for m in METRIC_COLUMNS:
            c = cells[m]
            parts.append(f"{'-':>22}" if c is None else f"{c.mean:>12.4f} ± {c.std:<7.4f}")
        lines.append("".join(parts))
    atomic_write_text(path, "\n".join(lines) + "\n")
