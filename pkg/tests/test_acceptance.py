"""Acceptance gate: every criterion at its stated tolerance, one pass/fail
line each.

Criteria 5-8 evaluate the pinned fixture run matrix (session-scoped in
conftest): synthetic blobs with C=10, 5000 samples, 32 dims, a
two-hidden-layer MLP, ratios {5, 10, 15, 20}% x seeds {0..4}.
"""

import json
import math
import time

import numpy as np
import pytest

from unlearnlab import data, degree, metrics, nn, unlearn
from unlearnlab.experiment import ExperimentConfig, run_experiment
from conftest import FIXTURE_RATIOS, FIXTURE_SEEDS, spearman


def report(number, name, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {number:>2} ({name}): {status} {detail}".rstrip())
    assert ok, f"criterion {number} ({name}) failed: {detail}"


class TestCriterion1GradientOracle:
    def test_backward_matches_central_differences(self):
        started = time.perf_counter()
        net = nn.init_random([4, 8, 4], seed=7)  # 4*8+8 + 8*4+4 = 76 params
        rng = np.random.default_rng(1)
        X = rng.normal(size=(3, 4))
        y = np.array([0, 2, 3])
        grads = nn.backward(net, X, y).grads
        vec = nn.flatten_params(net)
        h = 1e-5
        worst = 0.0
        for i in range(vec.size):
            up, down = vec.copy(), vec.copy()
            up[i] += h
            down[i] -= h
            pu, pd = net.copy(), net.copy()
            nn.assign_params(pu, up)
            nn.assign_params(pd, down)
            fd = (nn.cross_entropy(pu, X, y) - nn.cross_entropy(pd, X, y)) / (2 * h)
            err = abs(fd - grads[i]) / max(abs(fd), 1e-8)
            worst = max(worst, err)
        elapsed = time.perf_counter() - started
        report(1, "gradient oracle",
               worst <= 1e-6 and elapsed < 10.0,
               f"max rel err {worst:.2e}, {elapsed:.2f}s")


class TestCriterion2JsDivergence:
    def test_unit_suite(self):
        rng = np.random.default_rng(2)
        ok_zero = unlearn.js_divergence([0.3, 0.3, 0.4], [0.3, 0.3, 0.4]) == 0.0
        ok_one = unlearn.js_divergence([1.0, 0.0], [0.0, 1.0]) == 1.0
        ok_sym = True
        ok_bounds = True
        for _ in range(1000):
            k = int(rng.integers(2, 10))
            p = rng.dirichlet(np.ones(k))
            q = rng.dirichlet(np.ones(k))
            a, b = unlearn.js_divergence(p, q), unlearn.js_divergence(q, p)
            ok_sym &= abs(a - b) < 1e-12
            ok_bounds &= 0.0 <= a <= 1.0
        report(2, "divergence unit suite",
               ok_zero and ok_one and ok_sym and ok_bounds)


class TestCriterion3MetricFormulas:
    def test_reference_identities(self):
        fr = metrics.forgetting_rate(1.0, 0.8001)
        accel = metrics.acceleration_ratio(76.97, 1190.15)
        ok = abs(fr - 0.1999) <= 0.0005 and abs(accel - 15.46) <= 0.01
        report(3, "metric formula suite", ok,
               f"FR={fr:.5f}, acceleration={accel:.4f}")


class TestCriterion4SensitivityFidelity:
    def test_rank_correlation(self):
        started = time.perf_counter()
        ds = data.generate_blobs(3, 40, 6, 0.5, seed=5)
        net = nn.init_random([6, 4, 3], seed=2)  # 43 params
        cfg = unlearn.UnlearnConfig(lam=0.0, max_epochs=120, batch_size=16,
                                    learning_rate=5e-3, patience=10,
                                    min_delta=0.0005)
        trained, _, _ = unlearn.train_source(net, ds, cfg, seed=2)
        x, y = ds.features[:1], ds.labels[:1]
        scores = unlearn.sensitivity(trained, x, y).scores
        vec = nn.flatten_params(trained)
        base = nn.cross_entropy(trained, x, y)
        brute = np.zeros(vec.size)
        for i in range(vec.size):
            bumped = vec.copy()
            bumped[i] += 0.05 * bumped[i]
            probe = trained.copy()
            nn.assign_params(probe, bumped)
            brute[i] = abs(nn.cross_entropy(probe, x, y) - base)
        rho = spearman(scores, brute)
        elapsed = time.perf_counter() - started
        report(4, "sensitivity fidelity",
               rho >= 0.8 and elapsed < 60.0,
               f"spearman {rho:.3f}, {elapsed:.1f}s")


class TestCriterion5FrozenInvariance:
    def test_unselected_parameters_bit_identical(self, fixture_runs):
        runs = fixture_runs["runs"]
        checked = 0
        ok = True
        for (strategy, ratio, seed), outcome in runs.items():
            if strategy not in ("top-k", "random-k"):
                continue
            total = outcome.start_params.size
            frozen = np.setdiff1d(np.arange(total), outcome.plan.selected)
            final = nn.flatten_params(outcome.model)
            ok &= np.array_equal(final[frozen], outcome.start_params[frozen])
            checked += 1
        report(5, "frozen-parameter invariance", ok and checked == 40,
               f"{checked} runs, all N scalars checked")


class TestCriterion6Directionality:
    def test_median_forgetting_with_retention(self, fixture_runs):
        runs = fixture_runs["runs"]
        before = fixture_runs["before"]
        ok = True
        details = []
        for strategy in ("top-k", "random-k"):
            for ratio in FIXTURE_RATIOS:
                b_ul = np.median([before[(ratio, s)][0] for s in FIXTURE_SEEDS])
                b_re = np.median([before[(ratio, s)][1] for s in FIXTURE_SEEDS])
                a_ul = np.median([runs[(strategy, ratio, s)].acc_ul
                                  for s in FIXTURE_SEEDS])
                a_re = np.median([runs[(strategy, ratio, s)].acc_re
                                  for s in FIXTURE_SEEDS])
                cell_ok = a_ul < b_ul and a_re >= 0.9 * b_re
                ok &= cell_ok
                details.append(f"{strategy}@{ratio:g}: {b_ul:.4f}->{a_ul:.4f}")
        elapsed = fixture_runs["build_seconds"]
        ok &= elapsed < 1800.0
        report(6, "unlearning directionality", ok,
               f"{'; '.join(details)}; matrix built in {elapsed:.0f}s")


class TestCriterion7Speedup:
    def test_acceleration_and_epochs(self, fixture_runs):
        runs = fixture_runs["runs"]
        ratio = FIXTURE_RATIOS[0]
        accel_hits = 0
        epoch_hits = 0
        ratios = []
        for seed in FIXTURE_SEEDS:
            top = runs[("top-k", ratio, seed)]
            retrain = runs[("retrain", ratio, seed)]
            r = metrics.acceleration_ratio(top.wall_time_s, retrain.wall_time_s)
            ratios.append(round(r, 2))
            accel_hits += r > 1.0
            epoch_hits += top.epochs_run <= retrain.epochs_run
        report(7, "speedup", accel_hits >= 4 and epoch_hits >= 4,
               f"acceleration {ratios}, epochs ok {epoch_hits}/5")


class TestCriterion8WarmStart:
    def test_perturbed_loss_below_random_init(self, fixture_dataset, fixture_runs):
        ds = fixture_dataset
        runs = fixture_runs["runs"]
        ok = True
        worst = -np.inf
        for (strategy, ratio, seed), outcome in runs.items():
            if strategy not in ("top-k", "random-k"):
                continue
            sp = data.split(ds, ratio, seed)
            X_re = ds.features[sp.remain_indices]
            y_re = ds.labels[sp.remain_indices]
            perturbed = outcome.model.copy()
            nn.assign_params(perturbed, outcome.start_params)
            ce_perturbed = nn.cross_entropy(perturbed, X_re, y_re)
            rand = nn.init_random(perturbed.dims(), seed + 1000)
            ce_random = nn.cross_entropy(rand, X_re, y_re)
            ok &= ce_perturbed <= ce_random
            worst = max(worst, ce_perturbed - ce_random)
        report(8, "warm start", ok, f"max CE(w') - CE(rand) = {worst:.3f}")


class TestCriterion9DegreeSanity:
    def test_probe_on_fixture_pair(self, fixture_dataset, fixture_sources,
                                   fixture_runs):
        ds = fixture_dataset
        source = fixture_sources[0]
        ratio, seed = FIXTURE_RATIOS[0], 0
        unlearned = fixture_runs["runs"][("top-k", ratio, seed)].model
        sp = data.split(ds, ratio, seed)
        X_ul = ds.features[sp.unlearn_indices]
        y_ul = ds.labels[sp.unlearn_indices]

        # identical models: degree is exactly zero
        idle_gen = degree.init_generator(ds.dims, 32, 16, 0.5, seed=0)
        self_report = degree.evaluate_degree(source, source, idle_gen, ds, sp,
                                             tau=0.05)
        zero_ok = self_report.degree == 0.0

        cfg = degree.DegreeConfig(eta=0.03, epochs=60, batch_size=64,
                                  delta_max=2.0, tau=0.05, learning_rate=5e-3,
                                  hidden=32, bottleneck=16, seed=0)
        gen, trace = degree.train_generator(source, unlearned, X_ul, y_ul,
                                            cfg, None)
        rep = degree.evaluate_degree(source, unlearned, gen, ds, sp, cfg.tau,
                                     trace)
        noise = degree.generator_noise(gen, X_ul)
        bound_ok = np.abs(noise).max() <= cfg.delta_max
        upper = 1.0 - 1.0 / ds.class_count
        range_ok = (0.0 <= rep.degree <= upper) == rep.in_expected_range
        report(9, "degree sanity",
               zero_ok and rep.constraint_satisfied and rep.degree > 0
               and bound_ok and range_ok,
               f"degree {rep.degree:+.4f}, constraint "
               f"{rep.constraint_satisfied}, max|noise| {np.abs(noise).max():.3f}")


class TestCriterion10Determinism:
    def test_identical_config_identical_outcomes(self, tmp_path):
        raw = {
            "dataset": {"kind": "blobs", "class_count": 3, "per_class": 40,
                        "dims": 8, "spread": 0.5, "seed": 11},
            "model": {"hidden": [12]},
            "train": {"max_epochs": 25, "batch_size": 16, "optimizer": "adam",
                      "learning_rate": 5e-3, "patience": 5, "min_delta": 0.002},
            "unlearn": {"lambda": 0.1, "epsilon": 1.0, "max_epochs": 8,
                        "batch_size": 16, "optimizer": "adam",
                        "learning_rate": 5e-3, "patience": 2,
                        "min_delta": 0.003, "js_reference": "source"},
            "baseline_learning_rate": 1e-3,
            "ratios": [0.2],
            "seeds": [3],
            "strategies": [{"name": "top-k", "K": 5, "epsilon": 1.0},
                           {"name": "retrain"}],
            "degree": {"enabled": False},
        }
        cfg_a = ExperimentConfig.from_dict({**raw, "out_dir": str(tmp_path / "a")})
        cfg_b = ExperimentConfig.from_dict({**raw, "out_dir": str(tmp_path / "b")})
        manifest_a = run_experiment(cfg_a)
        manifest_b = run_experiment(cfg_b)
        ok = manifest_a["config_hash"] == manifest_b["config_hash"]
        for run in manifest_a["runs"]:
            a = json.loads((tmp_path / "a" / run["outcome"]).read_text())
            b = json.loads((tmp_path / "b" / run["outcome"]).read_text())
            a.pop("wall_time_s")
            b.pop("wall_time_s")
            ok &= json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
        report(10, "determinism", ok,
               f"{len(manifest_a['runs'])} outcome pairs compared")


class TestPerEpochTimeProperty:
    def test_masked_epochs_cheaper_than_retrain_epochs(self, fixture_runs):
        # Per-epoch wall time of the perturbation strategies stays below the
        # retraining baseline at the fixture's default ratio (mean over seeds).
        runs = fixture_runs["runs"]
        ratio = FIXTURE_RATIOS[0]
        retrain_pe = np.mean([
            runs[("retrain", ratio, s)].wall_time_s
            / runs[("retrain", ratio, s)].epochs_run
            for s in FIXTURE_SEEDS
        ])
        for strategy in ("top-k", "random-k"):
            strategy_pe = np.mean([
                runs[(strategy, ratio, s)].wall_time_s
                / runs[(strategy, ratio, s)].epochs_run
                for s in FIXTURE_SEEDS
            ])
            print(f"per-epoch {strategy}: {strategy_pe * 1e3:.1f}ms "
                  f"vs retrain {retrain_pe * 1e3:.1f}ms")
            assert strategy_pe < retrain_pe


class TestConvergenceEpochsProperty:
    def test_top_k_converges_in_no_more_epochs(self, fixture_runs):
        # Majority vote across seeds at every ratio.
        runs = fixture_runs["runs"]
        for ratio in FIXTURE_RATIOS:
            votes = sum(
                runs[("top-k", ratio, s)].epochs_run
                <= runs[("retrain", ratio, s)].epochs_run
                for s in FIXTURE_SEEDS
            )
            assert votes >= 3, f"ratio {ratio}: only {votes}/5 seeds"
