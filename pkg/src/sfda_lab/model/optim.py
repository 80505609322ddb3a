"""SGD with momentum and Adam over ModelParams snapshots."""

from dataclasses import dataclass

import numpy as np

from ..errors import UsageError
from .params import ModelParams


@dataclass
class MomentumState:
    """Velocity buffer for :func:`sgd_step`; single owner, updated in place."""

    velocity: ModelParams | None = None


@dataclass
class AdamState:
    """First/second moment buffers and step count for :func:`adam_step`."""

    first: ModelParams | None = None
    second: ModelParams | None = None
    step: int = 0


def _check_step(lr: float, weight_decay: float) -> None:
    if not lr > 0:
        raise UsageError(f"learning rate must be positive, got {lr}")
    if weight_decay < 0:
        raise UsageError("weight decay must be non-negative")


def _decayed(params: ModelParams, grads: ModelParams, weight_decay: float) -> ModelParams:
    if weight_decay == 0.0:
        params.require_compatible(grads)
        return grads
    return grads.zip_map(params, lambda g, p: g + weight_decay * p)


def sgd_step(
    params: ModelParams,
    grads: ModelParams,
    lr: float,
    weight_decay: float,
    state: MomentumState,
    momentum: float = 0.9,
) -> ModelParams:
    """One step of ``v <- momentum * v + (g + wd * p); p <- p - lr * v``."""
    _check_step(lr, weight_decay)
    g = _decayed(params, grads, weight_decay)
    if momentum == 0.0:
        velocity = g
    elif state.velocity is None:
        velocity = g
    else:
        velocity = state.velocity.zip_map(g, lambda v, gi: momentum * v + gi)
    state.velocity = velocity
    return params.zip_map(velocity, lambda p, v: p - lr * v)


def adam_step(
    params: ModelParams,
    grads: ModelParams,
    lr: float,
    weight_decay: float,
    state: AdamState,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> ModelParams:
    """One bias-corrected Adam step with L2 decay folded into the gradient."""
    _check_step(lr, weight_decay)
    g = _decayed(params, grads, weight_decay)
    first = state.first if state.first is not None else params.zeros_like()
    second = state.second if state.second is not None else params.zeros_like()
    state.first = first.zip_map(g, lambda m, gi: beta1 * m + (1 - beta1) * gi)
    state.second = second.zip_map(g, lambda v, gi: beta2 * v + (1 - beta2) * gi**2)
    state.step += 1
    scale1 = 1.0 - beta1**state.step
    scale2 = 1.0 - beta2**state.step
    update = state.first.zip_map(
        state.second, lambda m, v: (m / scale1) / (np.sqrt(v / scale2) + eps)
    )
    return params.zip_map(update, lambda p, u: p - lr * u)


class Optimizer:
    """Stateful wrapper choosing SGD or Adam by name."""

    def __init__(
        self,
        name: str,
        lr: float,
        weight_decay: float = 0.0,
        momentum: float = 0.9,
    ):
        if name not in ("sgd", "adam"):
            raise UsageError(f"unknown optimizer {name!r}")
        _check_step(lr, weight_decay)
        self.name = name
        self.lr = lr
        self.weight_decay = weight_decay
        self.momentum = momentum
        self.sgd_state = MomentumState()
        self.adam_state = AdamState()

    def step(self, params: ModelParams, grads: ModelParams) -> ModelParams:
        if self.name == "adam":
            return adam_step(params, grads, self.lr, self.weight_decay, self.adam_state)
        return sgd_step(
            params, grads, self.lr, self.weight_decay, self.sgd_state, self.momentum
        )
