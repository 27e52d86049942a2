"""Unlearning strategies over a trained network.

Sensitivity scoring, parameter selection (top-k / random-k / mixed),
multiplicative perturbation, divergence-guided fine-tuning on the
remaining data, and the layer-wise baselines (eu-k, cf-k, retrain).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from time import perf_counter

import numpy as np

from . import nn
from .data import Dataset, DatasetSplit
from .optim import make_optimizer, optimizer_step

DEFAULT_EPSILON = 0.05
DEFAULT_LAMBDA = 0.1
DEFAULT_TOP_K = 45
DEFAULT_RANDOM_RATIO = 0.05

PERTURBATION_STRATEGIES = ("top-k", "random-k", "mixed")
BASELINE_STRATEGIES = ("eu-k", "cf-k", "retrain")


@dataclass
class SensitivityMap:
    scores: np.ndarray           # (N,) nonnegative
    sample_policy: str           # 'single-sample' | 'batch-mean'


@dataclass
class PerturbationPlan:
    selected: np.ndarray         # sorted flat parameter indices
    epsilon: float
    strategy: str                # 'top-k' | 'random-k' | 'mixed'
    ratio: float = None          # requested k for random-k / mixed
    top_count: int = None        # requested K for top-k / mixed

    def __post_init__(self):
        self.selected = np.asarray(self.selected, dtype=np.int64)


@dataclass
class UnlearnConfig:
    lam: float = DEFAULT_LAMBDA
    epsilon: float = DEFAULT_EPSILON
    max_epochs: int = 100
    batch_size: int = 64
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    patience: int = 5
    min_delta: float = 0.001     # accuracy improvement threshold (fraction)
    js_reference: str = "source"  # which frozen model guides fine-tuning

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        if self.max_epochs < 0:
            raise ValueError("max_epochs must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.patience < 1:
            raise ValueError("patience must be >= 1")
        if self.optimizer not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.js_reference not in ("source", "retrain"):
            raise ValueError(f"unknown divergence reference {self.js_reference!r}")


@dataclass
class UnlearnOutcome:
    model: nn.Network
    wall_time_s: float
    epochs_run: int
    loss_trace: list             # per epoch: (cross-entropy term, divergence term)
    strategy: str
    perturbed_count: int
    acc_trace: list              # per epoch: (acc on remaining, acc on unlearning)
    acc_ul: float
    acc_re: float
    epsilon: float
    lam: float
    k_or_k: object = None        # K (int), k (float), [K, k], layer count, or None
    plan: PerturbationPlan = field(default=None, repr=False)
    start_params: np.ndarray = field(default=None, repr=False)  # post-perturbation vector

    def to_json_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "K_or_k": self.k_or_k,
            "epsilon": self.epsilon,
            "lambda": self.lam,
            "epochs_run": self.epochs_run,
            "wall_time_s": self.wall_time_s,
            "perturbed_count": self.perturbed_count,
            "loss_trace": [[ce, js] for ce, js in self.loss_trace],
            "acc_trace": [[re, ul] for re, ul in self.acc_trace],
            "acc_ul": self.acc_ul,
            "acc_re": self.acc_re,
        }


# --- divergence --------------------------------------------------------


def js_divergence(p, q) -> float:
    """Jensen-Shannon divergence in bits between two probability vectors.

    Symmetric, bounded to [0, 1], and exactly zero when p == q.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.ndim != 1 or p.shape != q.shape:
        raise nn.ShapeError(f"distribution shapes differ: {p.shape} vs {q.shape}")
    for name, vec in (("p", p), ("q", q)):
        if (vec < 0).any():
            raise ValueError(f"{name} has negative entries")
        if abs(vec.sum() - 1.0) > 1e-6:
            raise ValueError(f"{name} does not sum to 1 (sum={vec.sum()})")
    m = 0.5 * (p + q)
    ratio_p = np.divide(p, m, out=np.ones_like(p), where=p > 0)
    ratio_q = np.divide(q, m, out=np.ones_like(q), where=q > 0)
    js = 0.5 * ((p * np.log2(ratio_p)).sum() + (q * np.log2(ratio_q)).sum())
    return float(min(max(js, 0.0), 1.0))


def js_divergence_rows(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Row-wise Jensen-Shannon divergence in bits (no per-row validation)."""
    M = 0.5 * (P + Q)
    ratio_p = np.divide(P, M, out=np.ones_like(P), where=P > 0)
    ratio_q = np.divide(Q, M, out=np.ones_like(Q), where=Q > 0)
    js = 0.5 * ((P * np.log2(ratio_p)).sum(axis=1) + (Q * np.log2(ratio_q)).sum(axis=1))
    return np.clip(js, 0.0, 1.0)


# --- sensitivity and selection -----------------------------------------


def sensitivity(net: nn.Network, X, y, policy: str = "single-sample") -> SensitivityMap:
    """Per-scalar sensitivity: absolute cross-entropy gradient magnitude.

    Under the single-sample policy only the first row of the batch is used;
    batch-mean averages gradients over the batch before taking magnitudes.
    """
    if policy not in ("single-sample", "batch-mean"):
        raise ValueError(f"unknown sensitivity policy {policy!r}")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.atleast_1d(np.asarray(y))
    if policy == "single-sample":
        X, y = X[:1], y[:1]
    rec = nn.backward(net, X, y)
    return SensitivityMap(np.abs(rec.grads), policy)


def pick_sensitivity_sample(ds: Dataset, seed: int) -> int:
    """Index of the sensitivity probe sample: first of a seeded shuffle."""
    return int(np.random.default_rng(seed).permutation(ds.n)[0])


def select_top_k(sens: SensitivityMap, k_count: int, epsilon: float = DEFAULT_EPSILON) -> PerturbationPlan:
    """The K highest-scoring flat indices; ties resolved to lower index."""
    total = sens.scores.shape[0]
    if not 1 <= k_count <= total:
        raise ValueError(f"K={k_count} outside [1, {total}]")
    order = np.argsort(-sens.scores, kind="stable")
    selected = np.sort(order[:k_count])
    return PerturbationPlan(selected, epsilon, "top-k", top_count=k_count)


def select_random_k(total_params: int, ratio: float, seed: int,
                    epsilon: float = DEFAULT_EPSILON) -> PerturbationPlan:
    """A uniform sample of round(ratio * N) distinct indices."""
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    count = round(ratio * total_params)
    if count < 1:
        raise ValueError(f"ratio {ratio} selects zero of {total_params} parameters")
    rng = np.random.default_rng(seed)
    selected = np.sort(rng.choice(total_params, size=count, replace=False))
    return PerturbationPlan(selected, epsilon, "random-k", ratio=ratio)


def select_mixed(sens: SensitivityMap, k_count: int, ratio: float, seed: int,
                 epsilon: float = DEFAULT_EPSILON) -> PerturbationPlan:
    """Random-k budget with the top-K indices guaranteed to be included."""
    total = sens.scores.shape[0]
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    budget = round(ratio * total)
    if budget < 1:
        raise ValueError(f"ratio {ratio} selects zero of {total} parameters")
    if k_count < 0 or k_count > budget:
        raise ValueError(f"K={k_count} exceeds the random budget {budget}")
    rng = np.random.default_rng(seed)
    if k_count == 0:
        selected = np.sort(rng.choice(total, size=budget, replace=False))
    else:
        top = select_top_k(sens, k_count, epsilon).selected
        if budget == k_count:
            selected = top
        else:
            pool = np.setdiff1d(np.arange(total), top)
            extra = rng.choice(pool, size=budget - k_count, replace=False)
            selected = np.sort(np.concatenate([top, extra]))
    return PerturbationPlan(selected, epsilon, "mixed", ratio=ratio, top_count=k_count)


def perturb(store: nn.ParameterStore, plan: PerturbationPlan) -> nn.ParameterStore:
    """Scale each selected scalar by (1 + epsilon); all others bit-identical."""
    if plan.selected.size and (
        plan.selected.min() < 0 or plan.selected.max() >= store.total_count
    ):
        raise ValueError("plan indices outside the parameter store")
    out = store.copy()
    sel = plan.selected
    out.values[sel] = out.values[sel] + plan.epsilon * out.values[sel]
    return out


def plan_mask(plan: PerturbationPlan, total_params: int) -> np.ndarray:
    mask = np.zeros(total_params)
    mask[plan.selected] = 1.0
    return mask


def last_layers_mask(net: nn.Network, layer_count: int) -> np.ndarray:
    """Mask selecting every parameter in the final ``layer_count`` layers."""
    depth = len(net.layers)
    if not 1 <= layer_count <= depth:
        raise ValueError(f"layer count {layer_count} exceeds network depth {depth}")
    mask = np.zeros(nn.param_count(net))
    offsets = nn._layer_offsets(net)
    for li in range(depth - layer_count, depth):
        w_off, b_off, fi, fo = offsets[li]
        mask[w_off:b_off + fo] = 1.0
    return mask


# --- fine-tuning engine --------------------------------------------------


def _accuracy_from_probs(probs: np.ndarray, labels: np.ndarray) -> float:
    return float((probs.argmax(axis=1) == labels).mean())


def _mean_ce_from_probs(probs: np.ndarray, labels: np.ndarray) -> float:
    return float(-np.log(probs[np.arange(len(labels)), labels]).mean())


def _js_param_grad(net, X_batch, ref_probs, mask):
    """Parameter gradient of the mean divergence against frozen reference outputs."""
    acts, pres = nn._forward_cache(net, X_batch)
    p = np.maximum(nn.softmax(acts[-1]), nn.PROB_FLOOR)
    m = 0.5 * (p + ref_probs)
    d_probs = 0.5 * np.log2(p / m) / X_batch.shape[0]
    d_out = nn.prob_grad_to_output_grad(p, d_probs)
    grads, _ = nn._backprop(net, acts, pres, d_out, mask)
    return grads


def _fit(net, X_re, y_re, X_ul, y_ul, config: UnlearnConfig, seed: int,
         mask=None, js_ref_probs=None):
    """Epoch loop with accuracy-plateau stopping.

    Training minimizes mean cross-entropy on the remaining data plus,
    when ``js_ref_probs`` is given and lambda > 0, lambda times the mean
    divergence between current and reference outputs on the unlearning
    data.  The divergence gradient is estimated once per epoch from a
    seeded unlearning mini-batch and steers every step of that epoch.
    Stops once the per-epoch training accuracy on the remaining data
    improves by less than ``min_delta`` for ``patience`` consecutive
    epochs.
    """
    rng = np.random.default_rng(seed)
    opt = make_optimizer(config.optimizer, config.learning_rate)
    params = nn.flatten_params(net)
    mask = nn._compiled(net, mask)
    step_indices = mask.indices if mask is not None else None
    n_re, n_ul = X_re.shape[0], X_ul.shape[0]
    use_js_grad = js_ref_probs is not None and config.lam > 0
    ul_batch = min(config.batch_size, n_ul)

    best = -1.0
    stall = 0
    epochs_run = 0
    loss_trace = []
    acc_trace = []
    for _ in range(config.max_epochs):
        if use_js_grad:
            anchor = rng.choice(n_ul, size=ul_batch, replace=False)
            js_grad = config.lam * _js_param_grad(
                net, X_ul[anchor], js_ref_probs[anchor], mask
            )
        order = rng.permutation(n_re)
        hits = 0.0
        ce_sum = 0.0
        for start in range(0, n_re, config.batch_size):
            idx = order[start:start + config.batch_size]
            grads, acc_b, ce_b = nn._ce_backward_stats(net, X_re[idx], y_re[idx], mask)
            if use_js_grad:
                grads = grads + js_grad
            hits += acc_b * idx.shape[0]
            ce_sum += ce_b * idx.shape[0]
            optimizer_step(opt, params, grads, step_indices)
            nn.assign_params(net, params)
        epochs_run += 1
        acc_re = hits / n_re
        ce_term = ce_sum / n_re
        probs_ul = nn.forward(net, X_ul)
        acc_ul = _accuracy_from_probs(probs_ul, y_ul)
        if js_ref_probs is not None:
            js_term = float(js_divergence_rows(probs_ul, js_ref_probs).mean())
        else:
            js_term = 0.0
        loss_trace.append((ce_term, js_term))
        acc_trace.append((acc_re, acc_ul))
        if acc_re - best < config.min_delta:
            stall += 1
        else:
            stall = 0
        best = max(best, acc_re)
        if stall >= config.patience:
            break
    return epochs_run, loss_trace, acc_trace


def _split_arrays(ds: Dataset, sp: DatasetSplit):
    X_ul = ds.features[sp.unlearn_indices]
    y_ul = ds.labels[sp.unlearn_indices]
    X_re = ds.features[sp.remain_indices]
    y_re = ds.labels[sp.remain_indices]
    return X_ul, y_ul, X_re, y_re


def _plan_k_or_k(plan: PerturbationPlan):
    if plan.strategy == "top-k":
        return int(plan.selected.size)
    if plan.strategy == "random-k":
        return plan.ratio
    return [plan.top_count, plan.ratio]


def unlearn_finetune(net: nn.Network, ds: Dataset, sp: DatasetSplit,
                     config: UnlearnConfig, plan: PerturbationPlan,
                     reference_model: nn.Network = None,
                     seed: int = 0) -> UnlearnOutcome:
    """Perturb the selected parameters, then fine-tune only those on the
    remaining data with the divergence regularizer on the unlearning data.

    ``net`` is left untouched; by default it also serves as the frozen
    reference whose output distributions anchor the divergence term
    (``config.js_reference`` set to 'retrain' expects ``reference_model``).
    """
    if config.js_reference == "retrain" and reference_model is None:
        raise ValueError("js_reference='retrain' requires a reference model")
    t0 = perf_counter()
    work = net.copy()
    store = perturb(nn.ParameterStore.from_network(work), plan)
    store.apply_to(work)
    omega_prime = store.values.copy()
    mask = plan_mask(plan, store.total_count)
    reference = reference_model if reference_model is not None else net

    X_ul, y_ul, X_re, y_re = _split_arrays(ds, sp)
    ref_probs_ul = nn.forward(reference, X_ul)
    epochs_run, loss_trace, acc_trace = _fit(
        work, X_re, y_re, X_ul, y_ul, config, seed,
        mask=mask, js_ref_probs=ref_probs_ul,
    )
    wall = perf_counter() - t0
    return UnlearnOutcome(
        model=work,
        wall_time_s=wall,
        epochs_run=epochs_run,
        loss_trace=loss_trace,
        strategy=plan.strategy,
        perturbed_count=int(plan.selected.size),
        acc_trace=acc_trace,
        acc_ul=_accuracy_from_probs(nn.forward(work, X_ul), y_ul),
        acc_re=_accuracy_from_probs(nn.forward(work, X_re), y_re),
        epsilon=plan.epsilon,
        lam=config.lam,
        k_or_k=_plan_k_or_k(plan),
        plan=plan,
        start_params=omega_prime,
    )


def run_baseline(kind: str, net: nn.Network, ds: Dataset, sp: DatasetSplit,
                 config: UnlearnConfig, layer_count: int = 1,
                 seed: int = 0) -> UnlearnOutcome:
    """Layer-wise baselines, trained on the remaining data with pure
    cross-entropy (no divergence term).

    eu-k: re-randomize the last ``layer_count`` layers (seeded) and train
    them with everything earlier frozen.  cf-k: fine-tune the last layers
    without re-initialization.  retrain: fresh seeded network trained from
    scratch.
    """
    if kind not in BASELINE_STRATEGIES:
        raise ValueError(f"unknown baseline {kind!r}")
    t0 = perf_counter()
    depth = len(net.layers)
    if kind == "retrain":
        work = nn.init_random(net.dims(), seed, activations=net.activations())
        mask = None
        perturbed = nn.param_count(net)
        k_or_k = None
    else:
        if not 1 <= layer_count <= depth:
            raise ValueError(f"layer count {layer_count} exceeds network depth {depth}")
        work = net.copy()
        if kind == "eu-k":
            fresh = nn.init_random(net.dims(), seed, activations=net.activations())
            for li in range(depth - layer_count, depth):
                work.layers[li] = fresh.layers[li].copy()
        mask = last_layers_mask(work, layer_count)
        perturbed = int(mask.sum())
        k_or_k = layer_count

    X_ul, y_ul, X_re, y_re = _split_arrays(ds, sp)
    epochs_run, loss_trace, acc_trace = _fit(
        work, X_re, y_re, X_ul, y_ul, config, seed, mask=mask, js_ref_probs=None,
    )
    wall = perf_counter() - t0
    return UnlearnOutcome(
        model=work,
        wall_time_s=wall,
        epochs_run=epochs_run,
        loss_trace=loss_trace,
        strategy=kind,
        perturbed_count=perturbed,
        acc_trace=acc_trace,
        acc_ul=_accuracy_from_probs(nn.forward(work, X_ul), y_ul),
        acc_re=_accuracy_from_probs(nn.forward(work, X_re), y_re),
        epsilon=0.0,
        lam=0.0,
        k_or_k=k_or_k,
    )


def train_source(net: nn.Network, ds: Dataset, config: UnlearnConfig, seed: int = 0):
    """Fit a network on the full dataset with the same plateau criterion.

    Returns (network, epochs_run, accuracy trace); the divergence machinery
    is unused here (the trace reuses the full set for both columns).
    """
    work = net.copy()
    epochs_run, _, acc_trace = _fit(
        work, ds.features, ds.labels, ds.features[:1], ds.labels[:1],
        config, seed, mask=None, js_ref_probs=None,
    )
    return work, epochs_run, acc_trace


def gradient_norm_gap(net: nn.Network, ds: Dataset, sp: DatasetSplit) -> float:
    """Mean per-sample squared gradient norm on the unlearning data minus
    the same mean on the remaining data.  Diagnostic only."""
    X_ul, y_ul, X_re, y_re = _split_arrays(ds, sp)
    ul = float(nn.per_sample_grad_sq_norms(net, X_ul, y_ul).mean())
    re = float(nn.per_sample_grad_sq_norms(net, X_re, y_re).mean())
    return ul - re
