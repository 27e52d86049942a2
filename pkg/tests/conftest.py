"""Shared fixtures: the pinned experiment fixture and its strategy runs.

Everything expensive (source training, the strategy-by-ratio-by-seed run
matrix) is computed once per session and reused across test modules.
"""

import numpy as np
import pytest

from unlearnlab import data, metrics, nn, unlearn

FIXTURE_SEEDS = (0, 1, 2, 3, 4)
FIXTURE_RATIOS = (0.05, 0.10, 0.15, 0.20)
FIXTURE_HIDDEN = (48, 32)
TOP_K = 45
TOP_K_EPSILON = 1.5
RANDOM_RATIO = 0.05
RANDOM_EPSILON = 2.0

TRAIN_CONFIG = dict(lam=0.0, max_epochs=250, batch_size=64, learning_rate=1e-3,
                    patience=15, min_delta=0.0002)
UNLEARN_CONFIG = dict(lam=0.1, max_epochs=100, batch_size=64, learning_rate=2e-3,
                      patience=2, min_delta=0.003)
RETRAIN_CONFIG = dict(lam=0.0, max_epochs=100, batch_size=64, learning_rate=1e-3,
                      patience=2, min_delta=0.003)


@pytest.fixture(scope="session")
def fixture_dataset():
    return data.generate_blobs(class_count=10, per_class=500, dims=32,
                               spread=0.5, seed=1234)


@pytest.fixture(scope="session")
def fixture_sources(fixture_dataset):
    """Seed -> source model trained to convergence on the full dataset."""
    sources = {}
    for seed in FIXTURE_SEEDS:
        dims = [fixture_dataset.dims, *FIXTURE_HIDDEN, fixture_dataset.class_count]
        net = nn.init_random(dims, seed)
        cfg = unlearn.UnlearnConfig(**TRAIN_CONFIG)
        sources[seed], _, _ = unlearn.train_source(net, fixture_dataset, cfg, seed)
    return sources


def make_plan(strategy, source, ds, seed):
    if strategy == "top-k":
        probe = unlearn.pick_sensitivity_sample(ds, seed)
        sens = unlearn.sensitivity(
            source, ds.features[probe:probe + 1], ds.labels[probe:probe + 1]
        )
        return unlearn.select_top_k(sens, TOP_K, TOP_K_EPSILON)
    return unlearn.select_random_k(
        nn.param_count(source), RANDOM_RATIO, seed, RANDOM_EPSILON
    )


@pytest.fixture(scope="session")
def fixture_runs(fixture_dataset, fixture_sources):
    """(strategy, ratio, seed) -> outcome for top-k, random-k, and retrain,
    plus the before-accuracies per (ratio, seed) and the wall time the
    whole matrix took to produce."""
    from time import perf_counter

    started = perf_counter()
    ds = fixture_dataset
    runs = {}
    before = {}
    for seed in FIXTURE_SEEDS:
        source = fixture_sources[seed]
        for ratio in FIXTURE_RATIOS:
            sp = data.split(ds, ratio, seed)
            X_ul = ds.features[sp.unlearn_indices]
            y_ul = ds.labels[sp.unlearn_indices]
            X_re = ds.features[sp.remain_indices]
            y_re = ds.labels[sp.remain_indices]
            before[(ratio, seed)] = (
                metrics.accuracy(source, X_ul, y_ul),
                metrics.accuracy(source, X_re, y_re),
            )
            for strategy in ("top-k", "random-k"):
                plan = make_plan(strategy, source, ds, seed)
                cfg = unlearn.UnlearnConfig(epsilon=plan.epsilon, **UNLEARN_CONFIG)
                runs[(strategy, ratio, seed)] = unlearn.unlearn_finetune(
                    source, ds, sp, cfg, plan, seed=seed
                )
            runs[("retrain", ratio, seed)] = unlearn.run_baseline(
                "retrain", source, ds, sp,
                unlearn.UnlearnConfig(**RETRAIN_CONFIG), seed=seed,
            )
    return {"runs": runs, "before": before,
            "build_seconds": perf_counter() - started}


@pytest.fixture()
def small_dataset():
    return data.generate_blobs(class_count=3, per_class=30, dims=8,
                               spread=0.5, seed=9)


@pytest.fixture()
def small_source(small_dataset):
    net = nn.init_random([8, 12, 3], seed=5)
    cfg = unlearn.UnlearnConfig(lam=0.0, max_epochs=60, batch_size=16,
                                learning_rate=1e-2, patience=10, min_delta=0.001)
    source, _, _ = unlearn.train_source(net, small_dataset, cfg, seed=5)
    return source


def spearman(a, b):
    ra = np.argsort(np.argsort(np.asarray(a))).astype(float)
    rb = np.argsort(np.argsort(np.asarray(b))).astype(float)
    ra -= ra.mean()
    rb -= rb.mean()
    return float((ra * rb).sum() / np.sqrt((ra ** 2).sum() * (rb ** 2).sum()))
