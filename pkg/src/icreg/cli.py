"""Command-line front end for reproducible experiments.

Every command reads an optional INI config file; explicit flags override
config keys. Exit codes are a stable contract for scripting: 0 success,
1 usage error, 2 data error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import os
import sys
from dataclasses import asdict, replace

import numpy as np

from .analysis import REGION_ORDER, bound_curve, estimate_sigma, ideal_sort
from .benchmark import (
    BENCH_BASE_COUNT,
    BENCH_BINS,
    BENCH_NOISE,
    BENCH_RATIO,
    generate_benchmark,
)
from .data import (
    ShotRegion,
    balanced_split,
    bin_index_of,
    bin_stats,
    load_csv,
    save_csv,
    regions_of_labels,
)
from .errors import DataError, UsageError
from .experiment import (
    PREDICTOR_KINDS,
    ExperimentConfig,
    run_experiment,
    write_report,
)
from .ioutil import fmt17, write_csv
from .resample import Strategy
from .svgplot import plot_csv
from .transformer import (
    FunctionClass,
    ICLConfig,
    TaskSampler,
    evaluate_incontext,
    load_checkpoint,
    save_checkpoint,
    train,
)


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(p) for p in text.replace(",", " ").split())
    except ValueError:
        raise UsageError(f"seeds must be integers, got {text!r}") from None


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def _parse_label_column(text: str):
    stripped = text.strip()
    return int(stripped) if stripped.lstrip("-").isdigit() else stripped


# (section, key) in the INI file -> (ExperimentConfig field, converter)
_CONFIG_KEYS = {
    ("data", "dataset"): ("dataset", str),
    ("data", "label_column"): ("label_column", _parse_label_column),
    ("data", "has_header"): ("has_header", _parse_bool),
    ("bins", "count"): ("num_bins", int),
    ("bins", "width"): ("bin_width", float),
    ("bins", "lo"): ("bin_lo", float),
    ("bins", "hi"): ("bin_hi", float),
    ("split", "test_fraction"): ("test_fraction", float),
    ("retrieval", "strategy"): ("strategy", Strategy.parse),
    ("retrieval", "k_train"): ("k_train", int),
    ("retrieval", "k_inverse"): ("k_inverse", int),
    ("predictor", "kind"): ("predictor", str),
    ("predictor", "checkpoint"): ("checkpoint", str),
    ("predictor", "external_spec"): ("external_spec", str),
    ("predictor", "chunk_dim"): ("chunk_dim", int),
    ("analysis", "sigma"): ("sigma_override", float),
    ("analysis", "k_max"): ("k_max", int),
    ("run", "seeds"): ("seeds", _parse_seeds),
    ("run", "out_dir"): ("out_dir", str),
}

_FLAG_FIELDS = (
    "dataset",
    "label_column",
    "num_bins",
    "bin_width",
    "bin_lo",
    "bin_hi",
    "test_fraction",
    "strategy",
    "k_train",
    "k_inverse",
    "predictor",
    "checkpoint",
    "external_spec",
    "chunk_dim",
    "sigma_override",
    "k_max",
    "seeds",
    "out_dir",
)


def load_config_file(path: str) -> dict:
    if not os.path.exists(path):
        raise UsageError(f"no such config file: {path}")
    parser = configparser.ConfigParser()
    try:
        parser.read(path)
    except configparser.Error as exc:
        raise UsageError(f"{path}: {exc}") from None
    values: dict = {}
    for section in parser.sections():
        for key, raw in parser.items(section):
            spec = _CONFIG_KEYS.get((section, key))
            if spec is None:
                raise UsageError(f"{path}: unknown config key [{section}] {key}")
            field, convert = spec
            try:
                values[field] = convert(raw)
            except (ValueError, UsageError) as exc:
                raise UsageError(f"{path}: [{section}] {key}: {exc}") from None
    return values


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(load_config_file(args.config))
    for field in _FLAG_FIELDS:
        flag = getattr(args, field, None)
        if flag is not None:
            values[field] = flag
    if getattr(args, "no_header", False):
        values["has_header"] = False
    if isinstance(values.get("strategy"), str):
        try:
            values["strategy"] = Strategy.parse(values["strategy"])
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if "dataset" not in values:
        raise UsageError("a dataset path is required (--dataset or [data] dataset)")
    if "num_bins" not in values and "bin_width" not in values:
        raise UsageError("a bin layout is required (--bins or --bin-width)")
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file; flags override its keys")
    p.add_argument("--dataset", help="CSV file with features and a label column")
    p.add_argument("--label-column", type=_parse_label_column, dest="label_column",
                   help="label column name, or 0-based index")
    p.add_argument("--no-header", action="store_true", help="the CSV has no header row")
    p.add_argument("--bins", type=int, dest="num_bins", help="number of equal-width label bins")
    p.add_argument("--bin-width", type=float, dest="bin_width", help="label bin width")
    p.add_argument("--lo", type=float, dest="bin_lo", help="lower edge of the bin range")
    p.add_argument("--hi", type=float, dest="bin_hi", help="upper edge of the bin range")
    p.add_argument("--test-fraction", type=float, dest="test_fraction")
    p.add_argument("--strategy", choices=[s.value for s in Strategy])
    p.add_argument("--k-train", type=int, dest="k_train", help="neighbors from the train pool")
    p.add_argument("--k-inverse", type=int, dest="k_inverse",
                   help="neighbors from the inverse-density pool")
    p.add_argument("--predictor", choices=list(PREDICTOR_KINDS))
    p.add_argument("--checkpoint", help="model checkpoint for predictor=icl")
    p.add_argument("--external-spec", dest="external_spec",
                   help="JSON spec for predictor=external")
    p.add_argument("--chunk-dim", type=int, dest="chunk_dim",
                   help="ensemble features over chunks of this width")
    p.add_argument("--sigma", type=float, dest="sigma_override",
                   help="noise scale override for bound curves")
    p.add_argument("--k-max", type=int, dest="k_max", help="largest k for bound curves")
    p.add_argument("--seeds", type=_parse_seeds, help="comma-separated seed list")
    p.add_argument("--out-dir", dest="out_dir")


def cmd_split(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    dataset = load_csv(config.dataset, config.label_column, config.has_header)
    os.makedirs(config.out_dir, exist_ok=True)
    rows = []
    for seed in config.seeds:
        train, test = balanced_split(dataset, config.test_fraction, config.bin_config(), seed)
        note = f"{config.manifest_line()} seed={seed}"
        save_csv(train, os.path.join(config.out_dir, f"train_s{seed}.csv"),
                 comment=f"{note} role=train")
        save_csv(test, os.path.join(config.out_dir, f"test_s{seed}.csv"),
                 comment=f"{note} role=test")
        bins = bin_stats(train.labels, config.bin_config())
        test_counts = np.bincount(
            bin_index_of(test.labels, bins.edges), minlength=bins.num_bins
        )
        for b in range(bins.num_bins):
            rows.append(
                [
                    str(seed),
                    str(b),
                    fmt17(bins.edges[b]),
                    fmt17(bins.edges[b + 1]),
                    str(int(bins.counts[b])),
                    str(int(test_counts[b])),
                    str(bins.regions[b]),
                ]
            )
    manifest_path = os.path.join(config.out_dir, "split_manifest.csv")
    write_csv(
        manifest_path,
        ["seed", "bin", "lo", "hi", "train_count", "test_count", "region"],
        rows,
        comment=config.manifest_line(),
    )
    print(f"wrote {len(config.seeds)} split(s) and {manifest_path}")
    return 0


def cmd_run(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    report, _ = run_experiment(config)
    paths = write_report(report, config, config.out_dir)
    print(f"wrote {paths['per_seed']}, {paths['summary']}, {paths['table']}")
    return 0


def cmd_bound(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    dataset = load_csv(config.dataset, config.label_column, config.has_header)
    seed = config.seeds[0]
    train, test = balanced_split(dataset, config.test_fraction, config.bin_config(), seed)
    bins = bin_stats(train.labels, config.bin_config())
    sigma = config.sigma_override if config.sigma_override is not None else estimate_sigma(train)
    k_max = min(config.k_max, len(train))
    test_bins = bin_index_of(test.labels, bins.edges)
    test_regions = regions_of_labels(test.labels, bins)
    os.makedirs(config.out_dir, exist_ok=True)
    written = []
    for region in (ShotRegion.MANY, ShotRegion.MEDIUM, ShotRegion.FEW):
        members = np.flatnonzero([r is region for r in test_regions])
        if members.size == 0:
            print(f"notice: no {region} test points; skipping its bound curve", file=sys.stderr)
            continue
        member_counts = bins.counts[test_bins[members]]
        gap = np.abs(member_counts - np.median(member_counts))
        pick = int(members[np.lexsort((members, gap))[0]])
        query_label = float(test.labels[pick])
        curve = bound_curve(query_label, ideal_sort(query_label, train.labels), sigma, k_max)
        rows = [
            [str(int(k)), fmt17(b2), fmt17(v), fmt17(t)]
            for k, b2, v, t in zip(curve.k, curve.bias2, curve.variance, curve.total)
        ]
        path = os.path.join(config.out_dir, f"bound_{region.value.lower()}.csv")
        write_csv(
            path,
            ["k", "bias2", "variance", "total"],
            rows,
            comment=(
                f"{config.manifest_line()} seed={seed} region={region} "
                f"query_label={fmt17(query_label)} sigma={fmt17(sigma)}"
            ),
        )
        written.append(path)
    print("wrote " + ", ".join(written) if written else "no curves written")
    return 0


def cmd_ablate(args: argparse.Namespace) -> int:
    config = _experiment_config(args)
    dataset = load_csv(config.dataset, config.label_column, config.has_header)
    per_strategy: dict[Strategy, dict] = {}
    for strategy in Strategy:
        sub = replace(config, strategy=strategy,
                      out_dir=os.path.join(config.out_dir, strategy.value))
        report, _ = run_experiment(sub, dataset)
        write_report(report, sub, sub.out_dir)
        per_strategy[strategy] = report.summary()
    rows = []
    for region in REGION_ORDER:
        entries = []
        for strategy in Strategy:
            cell = per_strategy[strategy][region]["mse"]
            entries.append((strategy.value, None if cell is None else cell.mean))
        entries.sort(key=lambda e: (e[1] is None, e[1] if e[1] is not None else 0.0, e[0]))
        for rank, (name, mse) in enumerate(entries, start=1):
            rows.append([region, name, "" if mse is None else fmt17(mse), str(rank)])
    path = os.path.join(config.out_dir, "ablate_comparison.csv")
    write_csv(path, ["region", "strategy", "mse_mean", "rank"], rows,
              comment=config.manifest_line())
    print(f"wrote {path}")
    return 0


def _icl_hash(cfg: ICLConfig, function_class: str, noise_std: float) -> str:
    payload = asdict(cfg)
    payload["function_class"] = function_class
    payload["noise_std"] = noise_std
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]


def cmd_train_icl(args: argparse.Namespace) -> int:
    try:
        cfg = ICLConfig(
            input_dim=args.input_dim,
            embed_dim=args.embed_dim,
            layers=args.layers,
            heads=args.heads,
            n_max=args.n_max,
            learning_rate=args.lr,
            batch_size=args.batch_size,
            steps=args.steps,
            seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    sampler = TaskSampler(
        input_dim=args.input_dim,
        function_class=FunctionClass(args.function_class),
        noise_std=args.noise_std,
        seed=args.seed,
    )
    os.makedirs(args.out_dir, exist_ok=True)
    model, losses = train(cfg, sampler, checkpoint_dir=args.out_dir, log_every=args.log_every)
    checkpoint_path = os.path.join(args.out_dir, "checkpoint.npz")
    save_checkpoint(model, checkpoint_path)
    tag = _icl_hash(cfg, args.function_class, args.noise_std)
    loss_path = os.path.join(args.out_dir, "loss.csv")
    write_csv(
        loss_path,
        ["step", "loss"],
        [[str(i + 1), fmt17(v)] for i, v in enumerate(losses)],
        comment=f"config={tag} seeds={args.seed}",
    )
    print(f"wrote {checkpoint_path} and {loss_path}")
    return 0


def cmd_eval_icl(args: argparse.Namespace) -> int:
    model = load_checkpoint(args.checkpoint)
    sampler = TaskSampler(
        input_dim=model.config.input_dim,
        function_class=FunctionClass(args.function_class),
        noise_std=args.noise_std,
        seed=args.seed,
    )
    k_list = [int(k) for k in args.k_list.replace(",", " ").split()]
    points = evaluate_incontext(model, sampler, k_list, tasks_per_point=args.tasks)
    tag = _icl_hash(model.config, args.function_class, args.noise_std)
    write_csv(
        args.out,
        ["k", "model_mse", "averaging_mse"],
        [[str(p.k), fmt17(p.model_mse), fmt17(p.baseline_mse)] for p in points],
        comment=f"config={tag} seeds={args.seed}",
    )
    print(f"wrote {args.out}")
    return 0


def cmd_plot(args: argparse.Namespace) -> int:
    output = args.output or os.path.splitext(args.input)[0] + ".svg"
    plot_csv(args.input, output)
    print(f"wrote {output}")
    return 0


def cmd_gen_bench(args: argparse.Namespace) -> int:
    dataset = generate_benchmark(
        seed=args.seed,
        base_count=args.base_count,
        ratio=args.ratio,
        num_bins=args.bins,
        noise_std=args.noise,
    )
    payload = dict(seed=args.seed, base_count=args.base_count, ratio=args.ratio,
                   bins=args.bins, noise=args.noise)
    tag = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:12]
    save_csv(dataset, args.out, comment=f"config={tag} seeds={args.seed}")
    print(f"wrote {args.out} ({len(dataset)} samples)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="icreg",
        description="Retrieval-based in-context regression experiments on imbalanced labels.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("split", help="write balanced train/test CSVs per seed")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("run", help="run the full pipeline and write metric reports")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bound", help="write analytic bias/variance bound curves per region")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("ablate", help="run every sampling strategy and rank them")
    _add_experiment_flags(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("train-icl", help="train the in-context transformer on synthetic tasks")
    p.add_argument("--input-dim", type=int, required=True, dest="input_dim")
    p.add_argument("--embed-dim", type=int, default=64, dest="embed_dim")
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--heads", type=int, default=2)
    p.add_argument("--n-max", type=int, default=40, dest="n_max")
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--batch-size", type=int, default=64, dest="batch_size")
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--function-class", choices=[f.value for f in FunctionClass],
                   default="linear", dest="function_class")
    p.add_argument("--noise-std", type=float, default=0.0, dest="noise_std")
    p.add_argument("--log-every", type=int, default=0, dest="log_every")
    p.add_argument("--out-dir", default="runs/icl", dest="out_dir")
    p.set_defaults(func=cmd_train_icl)

    p = sub.add_parser("eval-icl", help="evaluate a checkpoint: error vs context length")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--k-list", default="1,2,5,10,20", dest="k_list")
    p.add_argument("--tasks", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--function-class", choices=[f.value for f in FunctionClass],
                   default="linear", dest="function_class")
    p.add_argument("--noise-std", type=float, default=0.0, dest="noise_std")
    p.add_argument("--out", default="icl_eval.csv")
    p.set_defaults(func=cmd_eval_icl)

    p = sub.add_parser("plot", help="chart a curve CSV as a static SVG")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("gen-bench", help="generate the built-in skewed benchmark CSV")
    p.add_argument("--out", default="benchmark.csv")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--base-count", type=int, default=BENCH_BASE_COUNT, dest="base_count")
    p.add_argument("--ratio", type=float, default=BENCH_RATIO)
    p.add_argument("--bins", type=int, default=BENCH_BINS)
    p.add_argument("--noise", type=float, default=BENCH_NOISE)
    p.set_defaults(func=cmd_gen_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 0
        return 0 if code == 0 else 1
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        raise
    except Exception as exc:
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
