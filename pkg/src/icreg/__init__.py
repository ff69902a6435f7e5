"""Retrieval-based in-context regression on imbalanced label distributions.

The library splits skewed datasets into balanced test sets, builds
inverse-density companion pools, retrieves nearest-neighbor contexts
through a standardize + power-transform embedding, and feeds them to
interchangeable prediction heads, including a small from-scratch
in-context transformer. Analysis utilities expose per-shot-region
metrics and analytic bias/variance error curves.
"""

from .analysis import (
    BoundCurve,
    EvalReport,
    MetricRow,
    RegionMetrics,
    bound_curve,
    empirical_error_curve,
    estimate_sigma,
    ideal_sort,
    metric_gm,
    metric_mae,
    metric_mse,
    metric_rmse,
    per_region_report,
)
from .benchmark import generate_benchmark, benchmark_bin_config
from .data import (
    BinConfig,
    BinStats,
    Dataset,
    ShotRegion,
    assign_bins,
    balanced_split,
    bin_stats,
    load_csv,
    region_of_label,
    save_csv,
    shot_region,
)
from .errors import ClampWarning, DataError, ExternalPredictorError, UsageError
from .experiment import ExperimentConfig, run_experiment, write_report
from .predict import (
    ExternalPredictor,
    ExternalPredictorSpec,
    GlobalLeastSquares,
    Prediction,
    Prompt,
    chunked,
    external_predict,
    predict_average,
    predict_ols_global,
    predict_ridge,
)
from .resample import (
    Strategy,
    build_pools,
    downsample_balanced,
    inverse_density_dataset,
    smoter_augment,
)
from .retrieval import (
    ContextSet,
    FeatureTransform,
    Metric,
    RetrievalIndex,
    augmented_retrieve,
    build_index,
    fit_transform,
    knn,
    retrieve_context,
)
from .transformer import (
    FunctionClass,
    ICLConfig,
    ICLModel,
    TaskSampler,
    evaluate_incontext,
    forward,
    gradient_check,
    init_model,
    load_checkpoint,
    loss_mse,
    save_checkpoint,
    train,
    train_step,
)

__version__ = "0.1.0"

__all__ = [
    "BinConfig",
    "BinStats",
    "BoundCurve",
    "ClampWarning",
    "ContextSet",
    "DataError",
    "Dataset",
    "EvalReport",
    "ExperimentConfig",
    "ExternalPredictor",
    "ExternalPredictorError",
    "ExternalPredictorSpec",
    "FeatureTransform",
    "FunctionClass",
    "GlobalLeastSquares",
    "ICLConfig",
    "ICLModel",
    "Metric",
    "MetricRow",
    "Prediction",
    "Prompt",
    "RegionMetrics",
    "RetrievalIndex",
    "ShotRegion",
    "Strategy",
    "TaskSampler",
    "UsageError",
    "assign_bins",
    "augmented_retrieve",
    "balanced_split",
    "benchmark_bin_config",
    "bin_stats",
    "bound_curve",
    "build_index",
    "build_pools",
    "chunked",
    "downsample_balanced",
    "empirical_error_curve",
    "estimate_sigma",
    "evaluate_incontext",
    "external_predict",
    "fit_transform",
    "forward",
    "generate_benchmark",
    "gradient_check",
    "ideal_sort",
    "init_model",
    "inverse_density_dataset",
    "knn",
    "load_checkpoint",
    "load_csv",
    "loss_mse",
    "metric_gm",
    "metric_mae",
    "metric_mse",
    "metric_rmse",
    "per_region_report",
    "predict_average",
    "predict_ols_global",
    "predict_ridge",
    "region_of_label",
    "retrieve_context",
    "run_experiment",
    "save_checkpoint",
    "save_csv",
    "shot_region",
    "smoter_augment",
    "train",
    "train_step",
    "write_report",
]
