"""A full experiment through the library API, matching `icreg run`.

One ExperimentConfig drives everything: balanced splits per seed, pool
building, retrieval, prediction, per-region metrics, and byte-stable
report files. This runs the augmented and vanilla strategies on the
built-in benchmark and prints the Few/Many trade-off the report files
capture.

Writes reports under ./demo_runs/.
"""

import warnings

from icreg.benchmark import generate_benchmark
from icreg.experiment import ExperimentConfig, run_experiment, write_report
from icreg.resample import Strategy

def main():
    dataset = generate_benchmark(seed=0)
    common = dict(
        dataset="builtin://benchmark",
        num_bins=12,
        bin_lo=0.0,
        bin_hi=12.0,
        test_fraction=0.2,
        predictor="average",
        seeds=(0, 1, 2),
    )
    runs = {
        "augmented 10+10": ExperimentConfig(
            strategy=Strategy.AUGMENTED, k_train=10, k_inverse=10, **common
        ),
        "vanilla k=20": ExperimentConfig(
            strategy=Strategy.VANILLA, k_train=20, k_inverse=0, **common
        ),
    }

    summaries = {}
    for name, config in runs.items():
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report, _ = run_experiment(config, dataset)
        out_dir = f"demo_runs/{config.strategy.value}"
        paths = write_report(report, config, out_dir)
        summaries[name] = report.summary()
        print(f"{name}: config {config.config_hash()} -> {paths['summary']}")

    print(f"\n{'region':<8}" + "".join(f"{name:>18}" for name in runs))
    for region in ("All", "Many", "Medium", "Few"):
        row = [f"{region:<8}"]
        for name in runs:
            cell = summaries[name][region]["mse"]
            row.append(f"{cell.mean:>18.4f}" if cell else f"{'-':>18}")
        print("".join(row) + "   (MSE, mean of 3 seeds)")

    print("\nthe augmented pool trades Many-region accuracy for a large")
    print("Few-region gain: rare-label queries see far fewer majority neighbors")
    print("rerun this script: the report CSVs are byte-identical across runs")

if __name__ == "__main__":
    main()
