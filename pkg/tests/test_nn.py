"""Network-engine tests: forward/backward correctness, the flat parameter
view, optimizer steps, initialization, and checkpoint round-trips."""

import numpy as np
import pytest

from unlearnlab import nn
from unlearnlab.optim import make_optimizer, optimizer_step


def tiny_net(seed=3, dims=(2, 4, 2)):
    return nn.init_random(list(dims), seed)


def loss_of_vector(net, vec, X, y):
    probe = net.copy()
    nn.assign_params(probe, vec)
    return nn.cross_entropy(probe, X, y)


class TestForward:
    def test_zero_network_is_uniform(self):
        net = tiny_net(dims=(3, 5))
        nn.assign_params(net, np.zeros(nn.param_count(net)))
        probs = nn.forward(net, np.random.default_rng(0).normal(size=(4, 3)))
        np.testing.assert_allclose(probs, 0.2, atol=1e-12)

    def test_dominant_logit_wins_argmax(self):
        net = nn.Network([nn.DenseLayer(np.zeros((3, 4)), np.zeros(4))])
        net.layers[0].weights[0, 2] = 50.0
        probs = nn.forward(net, np.array([[1.0, 0.0, 0.0]]))
        assert probs.argmax() == 2

    def test_matches_straight_line_reimplementation(self):
        # Dependency-free second implementation of the same arithmetic.
        net = tiny_net(seed=11, dims=(5, 7, 4, 3))
        X = np.random.default_rng(42).normal(size=(6, 5))
        w0, b0 = net.layers[0].weights, net.layers[0].bias
        w1, b1 = net.layers[1].weights, net.layers[1].bias
        w2, b2 = net.layers[2].weights, net.layers[2].bias
        h1 = np.maximum(X @ w0 + b0, 0.0)
        h2 = np.maximum(h1 @ w1 + b1, 0.0)
        logits = h2 @ w2 + b2
        shifted = logits - logits.max(axis=1, keepdims=True)
        expect = np.exp(shifted) / np.exp(shifted).sum(axis=1, keepdims=True)
        np.testing.assert_allclose(nn.forward(net, X), expect, atol=1e-12)

    def test_rows_sum_to_one(self):
        net = tiny_net(seed=2, dims=(4, 9, 6))
        X = np.random.default_rng(1).normal(size=(50, 4)) * 20
        probs = nn.forward(net, X)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)
        assert (probs > 0).all()

    def test_shape_errors(self):
        net = tiny_net()
        with pytest.raises(nn.ShapeError):
            nn.forward(net, np.zeros((3, 5)))
        with pytest.raises(nn.ShapeError):
            nn.forward(net, np.zeros((0, 2)))

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_nonfinite_input_raises(self):
        net = tiny_net()
        with pytest.raises(nn.NumericError):
            nn.forward(net, np.array([[np.inf, 1.0]]))


class TestBackward:
    def test_matches_central_finite_differences(self):
        net = tiny_net(seed=3, dims=(2, 4, 2))
        rng = np.random.default_rng(0)
        X = rng.normal(size=(1, 2))
        y = np.array([1])
        grads = nn.backward(net, X, y).grads
        vec = nn.flatten_params(net)
        h = 1e-5
        for i in range(vec.size):
            up, down = vec.copy(), vec.copy()
            up[i] += h
            down[i] -= h
            fd = (loss_of_vector(net, up, X, y) - loss_of_vector(net, down, X, y)) / (2 * h)
            assert abs(fd - grads[i]) <= 1e-6 * max(abs(fd), 1e-8) + 1e-8

    def test_all_zero_mask_freezes_everything(self):
        net = tiny_net(seed=4, dims=(3, 6, 3))
        X = np.random.default_rng(2).normal(size=(5, 3))
        y = np.array([0, 1, 2, 0, 1])
        grads = nn.backward(net, X, y, mask=np.zeros(nn.param_count(net))).grads
        assert (grads == 0.0).all()

    def test_duplicated_sample_equals_single(self):
        net = tiny_net(seed=5, dims=(3, 5, 2))
        x = np.random.default_rng(3).normal(size=(1, 3))
        y = np.array([1])
        single = nn.backward(net, x, y).grads
        doubled = nn.backward(net, np.vstack([x, x]), np.array([1, 1])).grads
        np.testing.assert_allclose(doubled, single, atol=1e-15)

    def test_masked_entries_exactly_zero(self):
        net = tiny_net(seed=6, dims=(4, 8, 3))
        total = nn.param_count(net)
        mask = np.zeros(total)
        sel = np.random.default_rng(4).choice(total, size=10, replace=False)
        mask[sel] = 1.0
        X = np.random.default_rng(5).normal(size=(6, 4))
        y = np.array([0, 1, 2, 0, 1, 2])
        grads = nn.backward(net, X, y, mask).grads
        frozen = np.setdiff1d(np.arange(total), sel)
        assert (grads[frozen] == 0.0).all()
        full = nn.backward(net, X, y).grads
        np.testing.assert_allclose(grads[sel], full[sel], rtol=1e-12)

    def test_masked_matches_full_on_selected_for_gather_path(self):
        # Force the sparse gather branch with a large layer.
        net = tiny_net(seed=8, dims=(150, 150, 4))
        total = nn.param_count(net)
        mask = np.zeros(total)
        sel = np.random.default_rng(8).choice(150 * 150, size=37, replace=False)
        mask[sel] = 1.0
        X = np.random.default_rng(9).normal(size=(8, 150))
        y = np.array([0, 1, 2, 3, 0, 1, 2, 3])
        grads = nn.backward(net, X, y, mask).grads
        full = nn.backward(net, X, y).grads
        np.testing.assert_allclose(grads[sel], full[sel], rtol=1e-12)
        assert (grads[mask == 0] == 0.0).all()

    def test_label_out_of_range(self):
        net = tiny_net()
        with pytest.raises(ValueError):
            nn.backward(net, np.zeros((1, 2)), np.array([5]))

    def test_gradient_record_source_tag(self):
        net = tiny_net()
        X = np.zeros((1, 2))
        assert nn.backward(net, X, np.array([0])).source == "single-sample"
        X2 = np.zeros((2, 2))
        assert nn.backward(net, X2, np.array([0, 1])).source == "batch-mean"


class TestInputGradients:
    def test_ce_input_gradient_matches_finite_differences(self):
        net = tiny_net(seed=7, dims=(3, 6, 3))
        rng = np.random.default_rng(6)
        X = rng.normal(size=(2, 3))
        y = np.array([0, 2])
        loss, dX = nn.ce_and_input_gradient(net, X, y)
        assert loss == pytest.approx(nn.cross_entropy(net, X, y), abs=1e-12)
        h = 1e-6
        for b in range(X.shape[0]):
            for j in range(X.shape[1]):
                up, down = X.copy(), X.copy()
                up[b, j] += h
                down[b, j] -= h
                fd = (nn.cross_entropy(net, up, y) - nn.cross_entropy(net, down, y)) / (2 * h)
                assert fd == pytest.approx(dX[b, j], rel=1e-4, abs=1e-8)

    def test_per_sample_grad_norms_match_naive_loop(self):
        net = tiny_net(seed=9, dims=(3, 5, 3))
        rng = np.random.default_rng(7)
        X = rng.normal(size=(4, 3))
        y = np.array([0, 1, 2, 1])
        fast = nn.per_sample_grad_sq_norms(net, X, y)
        for b in range(4):
            g = nn.backward(net, X[b:b + 1], y[b:b + 1]).grads
            assert fast[b] == pytest.approx(float((g ** 2).sum()), rel=1e-10)


class TestOptimizer:
    def test_sgd_basic_step(self):
        state = make_optimizer("sgd", 0.1)
        p = np.array([1.0])
        optimizer_step(state, p, np.array([0.5]))
        assert p[0] == pytest.approx(0.95, abs=1e-15)

    def test_adam_first_step_magnitude_is_learning_rate(self):
        # Bias-corrected first step: |dp| = lr * |g| / (|g| + eps).
        state = make_optimizer("adam", 1e-3)
        p = np.array([2.0, -1.0])
        optimizer_step(state, p, np.array([0.5, -0.25]))
        np.testing.assert_allclose(np.abs(p - np.array([2.0, -1.0])), 1e-3, atol=1e-6)

    def test_zero_gradient_leaves_sgd_unchanged(self):
        state = make_optimizer("sgd", 0.1)
        p = np.array([1.5, -2.5, 0.0])
        before = p.copy()
        optimizer_step(state, p, np.zeros(3))
        assert np.array_equal(p, before)

    def test_adam_zero_grad_coordinates_bit_identical(self):
        state = make_optimizer("adam", 1e-2)
        p = np.array([1.5, -2.5, 3.5])
        g = np.array([0.3, 0.0, -0.2])
        before = p.copy()
        for _ in range(20):
            optimizer_step(state, p, g)
        assert p[1] == before[1]
        assert p[0] != before[0] and p[2] != before[2]

    def test_sparse_step_matches_dense_under_constant_mask(self):
        rng = np.random.default_rng(12)
        p_dense = rng.normal(size=20)
        p_sparse = p_dense.copy()
        idx = np.array([2, 5, 11, 17])
        dense_state = make_optimizer("adam", 1e-2)
        sparse_state = make_optimizer("adam", 1e-2)
        for step in range(15):
            g = np.zeros(20)
            g[idx] = rng.normal(size=idx.size)
            optimizer_step(dense_state, p_dense, g)
            optimizer_step(sparse_state, p_sparse, g, indices=idx)
        np.testing.assert_array_equal(p_dense, p_sparse)

    def test_nonfinite_update_raises(self):
        state = make_optimizer("sgd", 1.0)
        with pytest.raises(nn.NumericError):
            optimizer_step(state, np.array([1.0]), np.array([np.inf]))


class TestInitRandom:
    def test_same_seed_bit_identical(self):
        a = nn.init_random([6, 10, 4], seed=42)
        b = nn.init_random([6, 10, 4], seed=42)
        assert np.array_equal(nn.flatten_params(a), nn.flatten_params(b))

    def test_different_seeds_differ_almost_everywhere(self):
        for pair in range(10):
            a = nn.flatten_params(nn.init_random([6, 10, 4], seed=pair))
            b = nn.flatten_params(nn.init_random([6, 10, 4], seed=pair + 100))
            weight_entries = a != 0  # biases are zero in both
            differ = (a != b) & weight_entries
            assert differ.sum() >= 0.99 * weight_entries.sum()

    def test_biases_exactly_zero(self):
        net = nn.init_random([5, 8, 3], seed=7)
        for layer in net.layers:
            assert (layer.bias == 0.0).all()

    def test_glorot_bound(self):
        net = nn.init_random([30, 20, 5], seed=3)
        for layer in net.layers:
            fi, fo = layer.weights.shape
            bound = np.sqrt(6.0 / (fi + fo))
            assert (np.abs(layer.weights) <= bound).all()


class TestParameterStore:
    def test_flatten_unflatten_roundtrip(self):
        net = tiny_net(seed=13, dims=(4, 6, 3))
        store = nn.ParameterStore.from_network(net)
        rebuilt = store.to_network()
        assert np.array_equal(nn.flatten_params(rebuilt), store.values)

    def test_index_map_is_bijection(self):
        net = tiny_net(seed=14, dims=(3, 5, 2))
        store = nn.ParameterStore.from_network(net)
        seen = set()
        for i in range(store.total_count):
            loc = store.locate(i)
            key = (loc.layer, loc.kind, loc.row, loc.col)
            assert key not in seen
            seen.add(key)
            if loc.kind == "weight":
                assert store.flat_index(loc.layer, "weight", loc.row, loc.col) == i
            else:
                assert store.flat_index(loc.layer, "bias", col=loc.col) == i
        assert len(seen) == store.total_count

    def test_locate_matches_layer_arrays(self):
        net = tiny_net(seed=15, dims=(3, 4, 2))
        store = nn.ParameterStore.from_network(net)
        for i in (0, 5, 12, store.total_count - 1):
            loc = store.locate(i)
            layer = net.layers[loc.layer]
            if loc.kind == "weight":
                assert store.values[i] == layer.weights[loc.row, loc.col]
            else:
                assert store.values[i] == layer.bias[loc.col]


class TestTrainingProperties:
    def test_masked_training_never_touches_frozen_params(self):
        net = tiny_net(seed=16, dims=(4, 7, 3))
        total = nn.param_count(net)
        mask = np.zeros(total)
        sel = np.random.default_rng(10).choice(total, size=8, replace=False)
        mask[sel] = 1.0
        frozen = np.setdiff1d(np.arange(total), sel)
        before = nn.flatten_params(net)
        rng = np.random.default_rng(11)
        X = rng.normal(size=(30, 4))
        y = rng.integers(0, 3, size=30)
        params = nn.flatten_params(net)
        state = make_optimizer("adam", 1e-2)
        for _ in range(25):
            grads = nn.backward(net, X, y, mask).grads
            optimizer_step(state, params, grads)
            nn.assign_params(net, params)
        after = nn.flatten_params(net)
        assert np.array_equal(after[frozen], before[frozen])
        assert not np.array_equal(after[sel], before[sel])

    def test_training_is_deterministic(self):
        def run():
            net = tiny_net(seed=17, dims=(4, 6, 3))
            rng = np.random.default_rng(20)
            X = rng.normal(size=(40, 4))
            y = rng.integers(0, 3, size=40)
            params = nn.flatten_params(net)
            state = make_optimizer("adam", 1e-3)
            for _ in range(10):
                grads = nn.backward(net, X, y).grads
                optimizer_step(state, params, grads)
                nn.assign_params(net, params)
            return nn.flatten_params(net)

        assert np.array_equal(run(), run())


class TestCheckpoint:
    def test_roundtrip_bit_exact(self, tmp_path):
        net = tiny_net(seed=18, dims=(5, 9, 4))
        path = tmp_path / "model.json"
        nn.save_checkpoint(net, path)
        loaded = nn.load_checkpoint(path)
        assert np.array_equal(nn.flatten_params(loaded), nn.flatten_params(net))
        assert loaded.dims() == net.dims()
        assert loaded.activations() == net.activations()

    def test_version_check(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"version": 99, "dims": [2, 2], '
                        '"activations": ["identity"], "params": []}')
        with pytest.raises(ValueError):
            nn.load_checkpoint(path)
