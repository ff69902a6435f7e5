"""Shared fixtures: toy datasets and the one session-wide trained transformer.

The trained-model fixture is expensive (several minutes of CPU) and is
only built when a test actually requests it, so fast unit runs that
deselect the slow tests never pay for it.
"""

import time

import numpy as np
import pytest

from icreg import (
    BinConfig,
    Dataset,
    ICLConfig,
    TaskSampler,
    bin_stats,
    generate_benchmark,
    train,
)

# Training recipe for the in-context transformer used by the slow tests.
# Chosen to clear the learning-signal gate within the 15-minute budget on
# a single core; see test_acceptance.py.
ICL_TRAIN_STEPS = 5000
ICL_TRAIN_CONFIG = dict(
    input_dim=5,
    embed_dim=64,
    layers=2,
    heads=2,
    n_max=20,
    learning_rate=3e-3,
    batch_size=64,
    steps=ICL_TRAIN_STEPS,
    seed=0,
)


def make_skewed_dataset(counts, seed=0, feature_dim=2, label_spread=1.0):
    """A dataset whose label bins have exactly the requested counts.

    Bin b covers [b, b+1); labels are spread inside each bin and features
    are a noisy linear image of the label so retrieval has signal.
    """
    rng = np.random.default_rng(seed)
    labels = []
    for b, c in enumerate(counts):
        labels.extend((b + rng.uniform(0.0, label_spread, size=c)).tolist())
    labels = np.asarray(labels)
    features = np.column_stack(
        [labels + rng.normal(0, 0.1, len(labels)) for _ in range(feature_dim)]
    )
    return Dataset(features, labels)


@pytest.fixture
def skewed_90_9_1():
    return make_skewed_dataset([90, 9, 1], seed=7)


@pytest.fixture
def skewed_bins_90_9_1(skewed_90_9_1):
    return bin_stats(skewed_90_9_1.labels, BinConfig.count(3, lo=0.0, hi=3.0))


@pytest.fixture(scope="session")
def bench():
    """The built-in skewed benchmark, generated once per session."""
    return generate_benchmark(seed=0)


@pytest.fixture(scope="session")
def trained_icl():
    """Train the toy in-context transformer once for every slow test.

    Returns (model, loss_curve, wall_seconds). Deterministic: fixed
    config and seeds, single thread.
    """
    cfg = ICLConfig(**ICL_TRAIN_CONFIG)
    sampler = TaskSampler(input_dim=cfg.input_dim, seed=0)
    t0 = time.perf_counter()
    model, losses = train(cfg, sampler)
    wall = time.perf_counter() - t0
    return model, losses, wall
