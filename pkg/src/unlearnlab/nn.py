"""Dense feedforward network engine with explicit forward and backward passes.

Every learnable scalar is addressable through a single flat index space
(layer by layer: weight matrix row-major, then bias vector).  Selection,
masking, and perturbation all operate on that flat view, so the backward
pass accepts a per-scalar mask and skips gradient work for frozen regions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

PROB_FLOOR = 1e-12
LEAKY_SLOPE = 0.2
CHECKPOINT_VERSION = 1

# Masked weight gradients fall back to entry-by-entry gathering only for
# large, sparsely-selected matrices; below that the full matmul plus a
# mask multiply is faster.
_GATHER_FRACTION = 0.25
_GATHER_MIN_SIZE = 16384

_ACTIVATIONS = ("relu", "leaky_relu", "tanh", "identity")


class ShapeError(ValueError):
    """Input or parameter dimensions do not line up."""


class NumericError(ArithmeticError):
    """A forward or backward pass produced non-finite values."""


@dataclass
class DenseLayer:
    weights: np.ndarray  # (fan_in, fan_out)
    bias: np.ndarray     # (fan_out,)
    activation: str = "identity"

    def copy(self) -> "DenseLayer":
        return DenseLayer(self.weights.copy(), self.bias.copy(), self.activation)


@dataclass
class Network:
    layers: list

    @property
    def input_dim(self) -> int:
        return int(self.layers[0].weights.shape[0])

    @property
    def output_dim(self) -> int:
        return int(self.layers[-1].weights.shape[1])

    @property
    def class_count(self) -> int:
        return self.output_dim

    def dims(self) -> list:
        return [self.input_dim] + [int(l.weights.shape[1]) for l in self.layers]

    def activations(self) -> list:
        return [l.activation for l in self.layers]

    def copy(self) -> "Network":
        return Network([l.copy() for l in self.layers])


def validate_network(net: Network) -> None:
    """Check dimension chaining, activation tags, and finiteness."""
    if not net.layers:
        raise ShapeError("network has no layers")
    for i, layer in enumerate(net.layers):
        w, b = layer.weights, layer.bias
        if w.ndim != 2 or b.ndim != 1 or b.shape[0] != w.shape[1]:
            raise ShapeError(f"layer {i}: weight/bias shapes inconsistent")
        if layer.activation not in _ACTIVATIONS:
            raise ShapeError(f"layer {i}: unknown activation {layer.activation!r}")
        if i > 0 and w.shape[0] != net.layers[i - 1].weights.shape[1]:
            raise ShapeError(f"layer {i}: input dim does not chain")
        if not (np.isfinite(w).all() and np.isfinite(b).all()):
            raise NumericError(f"layer {i}: non-finite parameters")


def init_random(dims, seed: int, activations=None) -> Network:
    """Seeded Glorot-uniform weights, zero biases.

    ``dims`` is [input, hidden..., output]; the default activation plan is
    ReLU for hidden layers and identity for the output layer.
    """
    dims = [int(d) for d in dims]
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ShapeError(f"invalid layer dims {dims}")
    if activations is None:
        activations = ["relu"] * (len(dims) - 2) + ["identity"]
    if len(activations) != len(dims) - 1:
        raise ShapeError("one activation tag per layer required")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out, act in zip(dims[:-1], dims[1:], activations):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        layers.append(DenseLayer(w, np.zeros(fan_out), act))
    return Network(layers)


# --- activations -------------------------------------------------------


def _activate(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    if kind == "leaky_relu":
        return np.where(z > 0.0, z, LEAKY_SLOPE * z)
    if kind == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(z.dtype)
    if kind == "leaky_relu":
        return np.where(z > 0.0, 1.0, LEAKY_SLOPE)
    if kind == "tanh":
        return 1.0 - a * a
    return np.ones_like(z)


# --- forward -----------------------------------------------------------


def _check_batch(net: Network, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"batch must be 2-D, got shape {X.shape}")
    if X.shape[0] < 1:
        raise ShapeError("batch is empty")
    if X.shape[1] != net.input_dim:
        raise ShapeError(
            f"batch has {X.shape[1]} features, network expects {net.input_dim}"
        )
    return X


def forward_output(net: Network, X) -> np.ndarray:
    """Raw network output (final post-activation values, pre-softmax)."""
    a = _check_batch(net, X)
    for layer in net.layers:
        a = _activate(a @ layer.weights + layer.bias, layer.activation)
    return a


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(net: Network, X) -> np.ndarray:
    """Class-probability matrix: softmax over the network output.

    Rows sum to 1 within 1e-9; probabilities are floored at PROB_FLOOR so
    downstream logs stay finite.
    """
    out = forward_output(net, X)
    if not np.isfinite(out).all():
        raise NumericError("non-finite activation in forward pass")
    return np.maximum(softmax(out), PROB_FLOOR)


def _forward_cache(net: Network, X: np.ndarray):
    """Forward pass keeping per-layer inputs and pre-activations."""
    acts = [X]
    pres = []
    a = X
    for layer in net.layers:
        z = a @ layer.weights + layer.bias
        a = _activate(z, layer.activation)
        pres.append(z)
        acts.append(a)
    return acts, pres


def _check_labels(labels, class_count: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 1:
        raise ShapeError("labels must be 1-D")
    if labels.size and (labels.min() < 0 or labels.max() >= class_count):
        raise ValueError(
            f"label out of range [0, {class_count}): {labels.min()}..{labels.max()}"
        )
    return labels.astype(np.int64)


def _onehot(labels: np.ndarray, class_count: int) -> np.ndarray:
    out = np.zeros((labels.shape[0], class_count))
    out[np.arange(labels.shape[0]), labels] = 1.0
    return out


def cross_entropy(net: Network, X, labels) -> float:
    """Mean cross-entropy of the softmax output against integer labels."""
    labels = _check_labels(labels, net.class_count)
    probs = forward(net, X)
    return float(-np.log(probs[np.arange(len(labels)), labels]).mean())


# --- flat parameter view -----------------------------------------------


def param_count(net: Network) -> int:
    return sum(l.weights.size + l.bias.size for l in net.layers)


def _layer_offsets(net: Network):
    """Per layer: (weight offset, bias offset, fan_in, fan_out)."""
    out = []
    off = 0
    for layer in net.layers:
        fi, fo = layer.weights.shape
        out.append((off, off + fi * fo, fi, fo))
        off += fi * fo + fo
    return out


def flatten_params(net: Network) -> np.ndarray:
    chunks = []
    for layer in net.layers:
        chunks.append(layer.weights.ravel())
        chunks.append(layer.bias)
    return np.concatenate(chunks)


def assign_params(net: Network, vec: np.ndarray) -> None:
    if vec.shape != (param_count(net),):
        raise ShapeError(
            f"parameter vector has length {vec.shape}, expected {param_count(net)}"
        )
    for (w_off, b_off, fi, fo), layer in zip(_layer_offsets(net), net.layers):
        layer.weights[:] = vec[w_off:w_off + fi * fo].reshape(fi, fo)
        layer.bias[:] = vec[b_off:b_off + fo]


@dataclass(frozen=True)
class ParamLocation:
    layer: int
    kind: str  # 'weight' | 'bias'
    row: int   # -1 for bias entries
    col: int


class ParameterStore:
    """Flat, indexable snapshot of every scalar parameter plus its layout.

    The flat index space is a bijection over [0, N): layer by layer, weight
    entries in row-major order followed by the bias vector.
    """

    def __init__(self, values, shapes, activations):
        self.values = np.asarray(values, dtype=np.float64).copy()
        self.shapes = [(int(fi), int(fo)) for fi, fo in shapes]
        self.activations = list(activations)
        self._offsets = []
        off = 0
        for fi, fo in self.shapes:
            self._offsets.append((off, off + fi * fo, fi, fo))
            off += fi * fo + fo
        self.total_count = off
        if self.values.shape != (self.total_count,):
            raise ShapeError(
                f"value vector length {self.values.shape} does not match "
                f"layout size {self.total_count}"
            )

    @classmethod
    def from_network(cls, net: Network) -> "ParameterStore":
        return cls(
            flatten_params(net),
            [l.weights.shape for l in net.layers],
            net.activations(),
        )

    def copy(self) -> "ParameterStore":
        return ParameterStore(self.values, self.shapes, self.activations)

    def locate(self, index: int) -> ParamLocation:
        if not 0 <= index < self.total_count:
            raise IndexError(f"flat index {index} out of range [0, {self.total_count})")
        for li, (w_off, b_off, fi, fo) in enumerate(self._offsets):
            if index < b_off:
                row, col = divmod(index - w_off, fo)
                return ParamLocation(li, "weight", int(row), int(col))
            if index < b_off + fo:
                return ParamLocation(li, "bias", -1, int(index - b_off))
        raise IndexError(index)  # unreachable

    def flat_index(self, layer: int, kind: str, row: int = -1, col: int = 0) -> int:
        w_off, b_off, fi, fo = self._offsets[layer]
        if kind == "weight":
            if not (0 <= row < fi and 0 <= col < fo):
                raise IndexError(f"weight ({row}, {col}) outside layer {layer}")
            return w_off + row * fo + col
        if kind == "bias":
            if not 0 <= col < fo:
                raise IndexError(f"bias {col} outside layer {layer}")
            return b_off + col
        raise ValueError(f"unknown kind {kind!r}")

    def apply_to(self, net: Network) -> None:
        if [tuple(l.weights.shape) for l in net.layers] != self.shapes:
            raise ShapeError("network layer shapes do not match this store")
        assign_params(net, self.values)

    def to_network(self) -> Network:
        dims = [self.shapes[0][0]] + [fo for _, fo in self.shapes]
        net = init_random(dims, seed=0, activations=self.activations)
        assign_params(net, self.values)
        return net


# --- backward ----------------------------------------------------------


@dataclass
class GradientRecord:
    grads: np.ndarray
    source: str  # 'single-sample' | 'batch-mean'


class CompiledMask:
    """Preprocessed per-layer view of a flat parameter mask.

    Fine-tuning applies the same mask on every step, so per-layer mask
    slices, selected indices, and the overall selected-index list are
    resolved once instead of per batch.
    """

    def __init__(self, net: Network, mask):
        mask = np.asarray(mask, dtype=np.float64)
        if mask.shape != (param_count(net),):
            raise ShapeError(
                f"mask length {mask.shape} does not match parameter count "
                f"{param_count(net)}"
            )
        self.mask = mask
        self.indices = np.flatnonzero(mask)
        self.layers = []
        self.lowest = len(net.layers)
        for li, (w_off, b_off, fi, fo) in enumerate(_layer_offsets(net)):
            wm = (mask[w_off:b_off] != 0).astype(np.float64)
            bm = (mask[b_off:b_off + fo] != 0).astype(np.float64)
            w_sel = np.flatnonzero(wm)
            rows, cols = np.divmod(w_sel, fo)
            gather = (
                fi * fo >= _GATHER_MIN_SIZE
                and 0 < w_sel.size < _GATHER_FRACTION * fi * fo
            )
            any_w = w_sel.size > 0
            any_b = bool(bm.any())
            self.layers.append(
                (wm, bm, w_sel, rows, cols, gather, any_w, any_b)
            )
            if (any_w or any_b) and self.lowest > li:
                self.lowest = li


def _compiled(net: Network, mask) -> CompiledMask:
    if mask is None or isinstance(mask, CompiledMask):
        return mask
    return CompiledMask(net, mask)


def _layer_grads(grads, offset, a_in, d_z, layer_sel):
    w_off, b_off, fi, fo = offset
    if layer_sel is None:
        grads[w_off:b_off] = (a_in.T @ d_z).ravel()
        grads[b_off:b_off + fo] = d_z.sum(axis=0)
        return
    wm, bm, w_sel, rows, cols, gather, any_w, any_b = layer_sel
    if any_b:
        grads[b_off:b_off + fo] = d_z.sum(axis=0) * bm
    if not any_w:
        return
    if gather:
        grads[w_off + w_sel] = np.einsum("bi,bi->i", a_in[:, rows], d_z[:, cols])
    else:
        grads[w_off:b_off] = (a_in.T @ d_z).ravel() * wm


def _backprop(net, acts, pres, d_out, mask: CompiledMask, need_input_grad=False):
    """Walk the layers backwards from a gradient on the final output.

    Delta propagation stops below the lowest layer holding a selected
    parameter (unless the input gradient is requested), and weight
    gradients are only materialised for selected entries.
    """
    offsets = _layer_offsets(net)
    grads = np.zeros(param_count(net))
    n_layers = len(net.layers)
    if mask is None or need_input_grad:
        stop = 0
    else:
        stop = mask.lowest
    d_post = d_out
    d_input = None
    for li in range(n_layers - 1, stop - 1, -1):
        layer = net.layers[li]
        d_z = d_post * _activation_grad(pres[li], acts[li + 1], layer.activation)
        _layer_grads(grads, offsets[li], acts[li], d_z,
                     None if mask is None else mask.layers[li])
        if li > stop:
            d_post = d_z @ layer.weights.T
        elif need_input_grad and li == 0:
            d_input = d_z @ layer.weights.T
    return grads, d_input


def _ce_backward_stats(net: Network, X, labels, mask):
    """Hot-path step: CE gradient plus the batch's accuracy and mean CE.

    Skips input validation; callers vet their arrays once up front."""
    acts, pres = _forward_cache(net, X)
    out = acts[-1]
    if not np.isfinite(out).all():
        raise NumericError("non-finite activation in forward pass")
    probs = softmax(out)
    picked = probs[np.arange(labels.shape[0]), labels]
    acc = float((out.argmax(axis=1) == labels).mean())
    ce = float(-np.log(np.maximum(picked, PROB_FLOOR)).mean())
    d_out = (probs - _onehot(labels, net.class_count)) / X.shape[0]
    grads, _ = _backprop(net, acts, pres, d_out, mask)
    return grads, acc, ce


def backward(net: Network, X, labels, mask=None) -> GradientRecord:
    """Gradient of the mean softmax cross-entropy for every scalar parameter.

    ``mask`` (length N, or a CompiledMask) freezes parameters: entries
    where the mask is zero come back as exactly 0.0 and their gradient
    work is skipped.
    """
    X = _check_batch(net, X)
    labels = _check_labels(labels, net.class_count)
    if labels.shape[0] != X.shape[0]:
        raise ShapeError("label count does not match batch size")
    grads, _, _ = _ce_backward_stats(net, X, labels, _compiled(net, mask))
    return GradientRecord(grads, "single-sample" if X.shape[0] == 1 else "batch-mean")


def backward_from_output_grad(net: Network, X, d_out, mask=None) -> GradientRecord:
    """Parameter gradients for an arbitrary upstream gradient on the output."""
    X = _check_batch(net, X)
    d_out = np.asarray(d_out, dtype=np.float64)
    if d_out.shape != (X.shape[0], net.output_dim):
        raise ShapeError("upstream gradient shape does not match network output")
    mask = _compiled(net, mask)
    acts, pres = _forward_cache(net, X)
    grads, _ = _backprop(net, acts, pres, d_out, mask)
    return GradientRecord(grads, "single-sample" if X.shape[0] == 1 else "batch-mean")


def prob_grad_to_output_grad(probs: np.ndarray, d_probs: np.ndarray) -> np.ndarray:
    """Chain a gradient on softmax probabilities back to the pre-softmax output."""
    inner = (d_probs * probs).sum(axis=1, keepdims=True)
    return probs * (d_probs - inner)


def ce_and_input_gradient(net: Network, X, labels):
    """Mean cross-entropy and its gradient with respect to the input batch.

    Used to drive generators against frozen networks: no parameter
    gradients are formed, only the delta chain down to the input.
    """
    X = _check_batch(net, X)
    labels = _check_labels(labels, net.class_count)
    acts, pres = _forward_cache(net, X)
    probs = np.maximum(softmax(acts[-1]), PROB_FLOOR)
    loss = float(-np.log(probs[np.arange(len(labels)), labels]).mean())
    d_post = (softmax(acts[-1]) - _onehot(labels, net.class_count)) / X.shape[0]
    for li in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[li]
        d_z = d_post * _activation_grad(pres[li], acts[li + 1], layer.activation)
        d_post = d_z @ layer.weights.T
    return loss, d_post


def per_sample_grad_sq_norms(net: Network, X, labels) -> np.ndarray:
    """Squared L2 norm of each sample's own cross-entropy gradient.

    Uses the rank-1 structure of dense-layer gradients: the per-sample
    weight gradient is an outer product, so its squared Frobenius norm is
    (||input||^2 + 1) * ||delta||^2 per layer (the +1 covers the bias).
    """
    X = _check_batch(net, X)
    labels = _check_labels(labels, net.class_count)
    acts, pres = _forward_cache(net, X)
    d_post = softmax(acts[-1]) - _onehot(labels, net.class_count)
    norms = np.zeros(X.shape[0])
    for li in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[li]
        d_z = d_post * _activation_grad(pres[li], acts[li + 1], layer.activation)
        norms += ((acts[li] ** 2).sum(axis=1) + 1.0) * (d_z ** 2).sum(axis=1)
        if li > 0:
            d_post = d_z @ layer.weights.T
    return norms


# --- checkpoints -------------------------------------------------------


def save_checkpoint(net: Network, path) -> None:
    """Versioned JSON checkpoint; float repr round-trips bit-exactly."""
    payload = {
        "version": CHECKPOINT_VERSION,
        "dims": net.dims(),
        "activations": net.activations(),
        "params": flatten_params(net).tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_checkpoint(path) -> Network:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')!r}")
    net = init_random(payload["dims"], seed=0, activations=payload["activations"])
    assign_params(net, np.asarray(payload["params"], dtype=np.float64))
    return net
