"""Adversarial unlearning-degree probe.

A small dense autoencoder learns bounded noise for the unlearning samples,
trained against the frozen (source, unlearned) model pair: keep the source
model accurate on the perturbed data while degrading the unlearned model.
The resulting accuracy gap on the perturbed set is the unlearning degree.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import nn
from .metrics import accuracy
from .optim import make_optimizer, optimizer_step

DIVERGENCE_FLOOR = -50.0  # objective below this aborts generator training


@dataclass
class Generator:
    net: nn.Network          # encoder/decoder stack ending in tanh
    delta_max: float         # noise budget: outputs land in [-delta_max, delta_max]
    feature_range: tuple = None  # clamp range for perturbed data, None = unclamped

    def copy(self) -> "Generator":
        return Generator(self.net.copy(), self.delta_max, self.feature_range)


@dataclass
class DegreeConfig:
    eta: float = 0.03          # weight of the degrade-the-unlearned-model term
    epochs: int = 30
    batch_size: int = 64
    delta_max: float = 0.1
    tau: float = 0.05          # tolerated source-model accuracy shift
    learning_rate: float = 1e-3
    hidden: int = 32
    bottleneck: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.delta_max < 0:
            raise ValueError("delta_max must be nonnegative")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("invalid epoch/batch settings")


@dataclass
class DegreeReport:
    degree: float
    acc_m_on_dp: float
    acc_m_on_dul: float
    acc_mul_on_dp: float
    acc_mul_on_dre: float
    constraint_satisfied: bool
    loss_trace: list = field(default_factory=list)
    in_expected_range: bool = True

    def to_json_dict(self) -> dict:
        return {
            "degree": self.degree,
            "acc_M_on_Dp": self.acc_m_on_dp,
            "acc_M_on_DUL": self.acc_m_on_dul,
            "acc_MUL_on_Dp": self.acc_mul_on_dp,
            "acc_MUL_on_DRE": self.acc_mul_on_dre,
            "constraint_satisfied": self.constraint_satisfied,
            "in_expected_range": self.in_expected_range,
            "loss_trace": list(self.loss_trace),
        }


def init_generator(input_dim: int, hidden: int, bottleneck: int,
                   delta_max: float, seed: int,
                   feature_range=None) -> Generator:
    """Dense autoencoder input -> hidden -> bottleneck -> hidden -> input,
    leaky-ReLU encoder, ReLU decoder, tanh output scaled by the budget."""
    net = nn.init_random(
        [input_dim, hidden, bottleneck, hidden, input_dim],
        seed,
        activations=["leaky_relu", "leaky_relu", "relu", "tanh"],
    )
    return Generator(net, delta_max, feature_range)


def generator_noise(gen: Generator, X) -> np.ndarray:
    """Bounded noise for a batch: delta_max * tanh-squashed decoder output."""
    return gen.delta_max * nn.forward_output(gen.net, X)


def perturb_data(gen: Generator, X) -> np.ndarray:
    """X plus generated noise, clamped to the feature range when one is set."""
    X = np.asarray(X, dtype=np.float64)
    perturbed = X + generator_noise(gen, X)
    if gen.feature_range is not None:
        lo, hi = gen.feature_range
        perturbed = np.clip(perturbed, lo, hi)
    return perturbed


def train_generator(source: nn.Network, unlearned: nn.Network,
                    X_ul, y_ul, config: DegreeConfig,
                    feature_range=None):
    """Fit the noise generator against the frozen model pair.

    Minimizes CE(source on perturbed, labels) - eta * CE(unlearned on
    perturbed, labels); both classifiers stay untouched.  Returns the
    generator and its per-epoch objective trace.
    """
    X_ul = np.asarray(X_ul, dtype=np.float64)
    y_ul = np.asarray(y_ul)
    if X_ul.shape[0] < 1:
        raise ValueError("generator training needs at least one sample")
    gen = init_generator(
        X_ul.shape[1], config.hidden, config.bottleneck,
        config.delta_max, config.seed, feature_range,
    )
    opt = make_optimizer("adam", config.learning_rate)
    params = nn.flatten_params(gen.net)
    rng = np.random.default_rng(config.seed)
    n = X_ul.shape[0]
    trace = []
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        batches = 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            Xb, yb = X_ul[idx], y_ul[idx]
            squashed = nn.forward_output(gen.net, Xb)   # in (-1, 1)
            raw = Xb + gen.delta_max * squashed
            if feature_range is not None:
                lo, hi = feature_range
                perturbed = np.clip(raw, lo, hi)
                gate = ((raw > lo) & (raw < hi)).astype(np.float64)
            else:
                perturbed = raw
                gate = 1.0
            loss_m, d_m = nn.ce_and_input_gradient(source, perturbed, yb)
            loss_u, d_u = nn.ce_and_input_gradient(unlearned, perturbed, yb)
            loss = loss_m - config.eta * loss_u
            if loss < DIVERGENCE_FLOOR:
                raise nn.NumericError(
                    f"generator objective diverged to {loss:.3g} at epoch {epoch}"
                )
            d_out = (d_m - config.eta * d_u) * gate * gen.delta_max
            grads = nn.backward_from_output_grad(gen.net, Xb, d_out).grads
            optimizer_step(opt, params, grads)
            nn.assign_params(gen.net, params)
            epoch_loss += loss
            batches += 1
        trace.append(epoch_loss / batches)
    return gen, trace


def unlearning_degree(acc_m_on_dp: float, acc_mul_on_dp: float) -> float:
    """Source-model accuracy minus unlearned-model accuracy on perturbed data."""
    return acc_m_on_dp - acc_mul_on_dp


def evaluate_degree(source: nn.Network, unlearned: nn.Network, gen: Generator,
                    ds, sp, tau: float, loss_trace=None) -> DegreeReport:
    """Full-set accuracies, the degree, and the constraint flag.

    The degree is reported even when the constraint fails (flagged), and
    values outside [0, 1 - 1/C] warn but are never clamped.
    """
    X_ul = ds.features[sp.unlearn_indices]
    y_ul = ds.labels[sp.unlearn_indices]
    X_re = ds.features[sp.remain_indices]
    y_re = ds.labels[sp.remain_indices]
    perturbed = perturb_data(gen, X_ul)

    acc_m_dp = accuracy(source, perturbed, y_ul)
    acc_m_dul = accuracy(source, X_ul, y_ul)
    acc_mul_dp = accuracy(unlearned, perturbed, y_ul)
    acc_mul_dre = accuracy(unlearned, X_re, y_re)
    degree = unlearning_degree(acc_m_dp, acc_mul_dp)
    upper = 1.0 - 1.0 / source.class_count
    in_range = 0.0 <= degree <= upper
    if not in_range:
        warnings.warn(
            f"unlearning degree {degree:.4f} outside expected range [0, {upper:.4f}]",
            stacklevel=2,
        )
    return DegreeReport(
        degree=degree,
        acc_m_on_dp=acc_m_dp,
        acc_m_on_dul=acc_m_dul,
        acc_mul_on_dp=acc_mul_dp,
        acc_mul_on_dre=acc_mul_dre,
        constraint_satisfied=abs(acc_m_dp - acc_m_dul) <= tau,
        loss_trace=list(loss_trace) if loss_trace is not None else [],
        in_expected_range=in_range,
    )


def dump_perturbed_samples(gen: Generator, X_ul, path, count: int = 16) -> None:
    """CSV of the first ``count`` samples before/after perturbation."""
    X_ul = np.asarray(X_ul, dtype=np.float64)
    take = min(count, X_ul.shape[0])
    before = X_ul[:take]
    after = perturb_data(gen, before)
    dims = X_ul.shape[1]
    header = (
        ["sample", "kind"] + [f"f{i}" for i in range(dims)]
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(take):
            fh.write(f"{i},before," + ",".join(f"{v:.6g}" for v in before[i]) + "\n")
            fh.write(f"{i},after," + ",".join(f"{v:.6g}" for v in after[i]) + "\n")
