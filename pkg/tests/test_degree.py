"""Degree-probe tests: bounded noise generation, frozen-discriminator
training, and the degree report."""

import numpy as np
import pytest

from unlearnlab import data, degree, metrics, nn, unlearn


@pytest.fixture()
def probe_pair(small_dataset, small_source):
    """(source, unlearned, split) on the small dataset."""
    sp = data.split(small_dataset, 0.3, seed=1)
    cfg = unlearn.UnlearnConfig(lam=0.0, max_epochs=8, batch_size=16,
                                learning_rate=1e-2)
    out = unlearn.run_baseline("retrain", small_source, small_dataset, sp, cfg,
                               seed=2)
    return small_source, out.model, sp


class TestPerturbData:
    def test_zero_weight_generator_is_identity(self):
        gen = degree.init_generator(6, 8, 4, delta_max=0.5, seed=0,
                                    feature_range=(0.0, 1.0))
        nn.assign_params(gen.net, np.zeros(nn.param_count(gen.net)))
        X = np.random.default_rng(1).random((5, 6))
        np.testing.assert_array_equal(degree.perturb_data(gen, X), X)

    def test_zero_budget_is_identity(self):
        gen = degree.init_generator(6, 8, 4, delta_max=0.0, seed=3)
        X = np.random.default_rng(2).normal(size=(5, 6))
        np.testing.assert_array_equal(degree.perturb_data(gen, X), X)

    def test_noise_bounded_by_budget(self):
        gen = degree.init_generator(10, 16, 8, delta_max=0.2, seed=4)
        X = np.random.default_rng(3).normal(size=(200, 10)) * 5
        noise = degree.generator_noise(gen, X)
        assert np.abs(noise).max() <= 0.2

    def test_clamped_to_feature_range(self):
        gen = degree.init_generator(4, 8, 4, delta_max=0.9, seed=5,
                                    feature_range=(0.0, 1.0))
        X = np.random.default_rng(4).random((50, 4))
        perturbed = degree.perturb_data(gen, X)
        assert perturbed.min() >= 0.0 and perturbed.max() <= 1.0

    def test_dimension_mismatch(self):
        gen = degree.init_generator(4, 8, 4, delta_max=0.1, seed=6)
        with pytest.raises(nn.ShapeError):
            degree.perturb_data(gen, np.zeros((3, 7)))


class TestTrainGenerator:
    def test_zero_learning_rate_leaves_generator_unchanged(self, probe_pair,
                                                           small_dataset):
        source, unlearned, sp = probe_pair
        X_ul = small_dataset.features[sp.unlearn_indices]
        y_ul = small_dataset.labels[sp.unlearn_indices]
        cfg = degree.DegreeConfig(eta=0.03, epochs=1, batch_size=8,
                                  delta_max=0.5, tau=0.05, learning_rate=1e-12,
                                  hidden=8, bottleneck=4, seed=7)
        init = degree.init_generator(small_dataset.dims, 8, 4, 0.5, 7)
        gen, _ = degree.train_generator(source, unlearned, X_ul, y_ul, cfg, None)
        np.testing.assert_allclose(nn.flatten_params(gen.net),
                                   nn.flatten_params(init.net), atol=1e-9)

    def test_discriminators_stay_frozen(self, probe_pair, small_dataset):
        source, unlearned, sp = probe_pair
        X_ul = small_dataset.features[sp.unlearn_indices]
        y_ul = small_dataset.labels[sp.unlearn_indices]
        src_before = nn.flatten_params(source)
        ul_before = nn.flatten_params(unlearned)
        cfg = degree.DegreeConfig(eta=0.03, epochs=5, batch_size=8,
                                  delta_max=0.5, tau=0.05, learning_rate=5e-3,
                                  hidden=8, bottleneck=4, seed=8)
        degree.train_generator(source, unlearned, X_ul, y_ul, cfg, None)
        assert np.array_equal(nn.flatten_params(source), src_before)
        assert np.array_equal(nn.flatten_params(unlearned), ul_before)

    def test_deterministic_per_seed(self, probe_pair, small_dataset):
        source, unlearned, sp = probe_pair
        X_ul = small_dataset.features[sp.unlearn_indices]
        y_ul = small_dataset.labels[sp.unlearn_indices]
        cfg = degree.DegreeConfig(eta=0.03, epochs=3, batch_size=8,
                                  delta_max=0.5, tau=0.05, learning_rate=5e-3,
                                  hidden=8, bottleneck=4, seed=9)
        a, trace_a = degree.train_generator(source, unlearned, X_ul, y_ul, cfg, None)
        b, trace_b = degree.train_generator(source, unlearned, X_ul, y_ul, cfg, None)
        assert np.array_equal(nn.flatten_params(a.net), nn.flatten_params(b.net))
        assert trace_a == trace_b

    def test_eta_zero_keeps_source_accurate(self, probe_pair, small_dataset):
        # Degenerate objective: only the keep-the-source-accurate term.
        source, unlearned, sp = probe_pair
        X_ul = small_dataset.features[sp.unlearn_indices]
        y_ul = small_dataset.labels[sp.unlearn_indices]
        cfg = degree.DegreeConfig(eta=0.0, epochs=15, batch_size=16,
                                  delta_max=1.0, tau=0.05, learning_rate=5e-3,
                                  hidden=16, bottleneck=8, seed=3)
        init = degree.init_generator(small_dataset.dims, 16, 8, 1.0, 3)
        acc_init = metrics.accuracy(source, degree.perturb_data(init, X_ul), y_ul)
        gen, _ = degree.train_generator(source, unlearned, X_ul, y_ul, cfg, None)
        acc_trained = metrics.accuracy(source, degree.perturb_data(gen, X_ul), y_ul)
        assert acc_trained >= acc_init

    def test_divergence_guard(self, probe_pair, small_dataset):
        source, unlearned, sp = probe_pair
        X_ul = small_dataset.features[sp.unlearn_indices]
        y_ul = small_dataset.labels[sp.unlearn_indices]
        # an absurd eta drives the objective to a large negative value
        cfg = degree.DegreeConfig(eta=1e6, epochs=50, batch_size=16,
                                  delta_max=2.0, tau=0.05, learning_rate=5e-2,
                                  hidden=16, bottleneck=8, seed=1)
        with pytest.raises(nn.NumericError):
            degree.train_generator(source, unlearned, X_ul, y_ul, cfg, None)


class TestEvaluateDegree:
    def test_identical_models_give_exactly_zero(self, small_source, small_dataset):
        sp = data.split(small_dataset, 0.3, seed=2)
        gen = degree.init_generator(small_dataset.dims, 8, 4, 0.3, seed=2)
        report = degree.evaluate_degree(small_source, small_source, gen,
                                        small_dataset, sp, tau=0.05)
        assert report.degree == 0.0

    def test_degree_is_exact_accuracy_difference(self, probe_pair, small_dataset):
        source, unlearned, sp = probe_pair
        gen = degree.init_generator(small_dataset.dims, 8, 4, 0.3, seed=4)
        report = degree.evaluate_degree(source, unlearned, gen, small_dataset,
                                        sp, tau=0.05)
        assert report.degree == report.acc_m_on_dp - report.acc_mul_on_dp

    def test_pure_arithmetic(self):
        assert degree.unlearning_degree(0.85, 0.10) == pytest.approx(0.75, abs=1e-15)

    def test_constraint_flag(self, probe_pair, small_dataset):
        source, unlearned, sp = probe_pair
        gen = degree.init_generator(small_dataset.dims, 8, 4, 0.0, seed=5)
        report = degree.evaluate_degree(source, unlearned, gen, small_dataset,
                                        sp, tau=0.05)
        # zero budget: perturbed set equals the unlearning set exactly
        assert report.acc_m_on_dp == report.acc_m_on_dul
        assert report.constraint_satisfied

    def test_out_of_range_warns_not_clamps(self, small_dataset):
        # an anti-trained pair: unlearned model better than source on Dp
        weak = nn.init_random([small_dataset.dims, 4, 3], seed=11)
        cfg = unlearn.UnlearnConfig(lam=0.0, max_epochs=40, batch_size=16,
                                    learning_rate=1e-2)
        strong, _, _ = unlearn.train_source(
            nn.init_random([small_dataset.dims, 12, 3], seed=1),
            small_dataset, cfg, seed=1)
        sp = data.split(small_dataset, 0.3, seed=3)
        gen = degree.init_generator(small_dataset.dims, 8, 4, 0.0, seed=6)
        with pytest.warns(UserWarning):
            report = degree.evaluate_degree(weak, strong, gen, small_dataset,
                                            sp, tau=0.05)
        assert report.degree < 0.0
        assert not report.in_expected_range

    def test_report_json_fields(self, probe_pair, small_dataset):
        source, unlearned, sp = probe_pair
        gen = degree.init_generator(small_dataset.dims, 8, 4, 0.2, seed=7)
        report = degree.evaluate_degree(source, unlearned, gen, small_dataset,
                                        sp, tau=0.05, loss_trace=[0.5, 0.4])
        payload = report.to_json_dict()
        assert set(payload) == {
            "degree", "acc_M_on_Dp", "acc_M_on_DUL", "acc_MUL_on_Dp",
            "acc_MUL_on_DRE", "constraint_satisfied", "in_expected_range",
            "loss_trace",
        }
        assert payload["loss_trace"] == [0.5, 0.4]


class TestSampleDump:
    def test_before_after_csv(self, tmp_path, small_dataset):
        gen = degree.init_generator(small_dataset.dims, 8, 4, 0.3, seed=8)
        path = tmp_path / "samples.csv"
        degree.dump_perturbed_samples(gen, small_dataset.features, path, count=4)
        lines = path.read_text().splitlines()
        assert lines[0].startswith("sample,kind,f0")
        assert len(lines) == 1 + 2 * 4
        assert lines[1].split(",")[1] == "before"
        assert lines[2].split(",")[1] == "after"
