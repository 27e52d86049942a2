"""SGD and Adam steps over flat parameter vectors.

A frozen parameter (gradient exactly 0 from the first step on) is left
bit-identical by both update rules.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nn import NumericError, ShapeError


@dataclass
class OptimizerState:
    kind: str = "adam"
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray = None
    v: np.ndarray = None
    step: int = 0

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")


def make_optimizer(kind: str, learning_rate: float) -> OptimizerState:
    return OptimizerState(kind=kind, learning_rate=learning_rate)


def optimizer_step(state: OptimizerState, params: np.ndarray, grads: np.ndarray,
                   indices: np.ndarray = None) -> np.ndarray:
    """Apply one update in place and return the parameter vector.

    With ``indices`` the update touches only those coordinates.  Because
    Adam's coordinates do not interact (bias correction is a global
    scalar), this equals the dense step when every other gradient entry
    is zero from the first step on, at the cost of the selected subset.
    """
    if indices is not None:
        sub = params[indices]
        _apply(state, sub, grads[indices])
        params[indices] = sub
        if not np.isfinite(sub).all():
            raise NumericError("non-finite parameter after optimizer step")
        return params
    _apply(state, params, grads)
    if not np.isfinite(params).all():
        raise NumericError("non-finite parameter after optimizer step")
    return params


def _apply(state: OptimizerState, params: np.ndarray, grads: np.ndarray) -> None:
    if params.shape != grads.shape:
        raise ShapeError("parameter and gradient vectors differ in length")
    if state.kind == "sgd":
        params -= state.learning_rate * grads
        return
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1 ** state.step)
    v_hat = state.v / (1.0 - state.beta2 ** state.step)
    params -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
