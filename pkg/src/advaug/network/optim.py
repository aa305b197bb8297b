"""Plain SGD and bias-corrected Adam over ``ModelParams``.

Losses are already averaged over the mini-batch, so both optimizers apply
the gradient as given.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..numerics import ShapeError, check_finite
from .model import ModelParams

ADAM_DEFAULTS = {"lr": 1e-3, "beta1": 0.9, "beta2": 0.999, "eps": 1e-8}


def _check_match(params: ModelParams, grads: ModelParams):
    a, g = params.arrays(), grads.arrays()
    if len(a) != len(g) or any(x.shape != y.shape for x, y in zip(a, g)):
        raise ShapeError("gradient layout does not match parameters")
    return a, g


def sgd_step(params: ModelParams, grads: ModelParams, lr: float) -> ModelParams:
    """theta <- theta - lr * g."""
    a, g = _check_match(params, grads)
    new = [check_finite(x - lr * y, "sgd update") for x, y in zip(a, g)]
    return params.with_arrays(new)


@dataclass(frozen=True)
class OptimizerState:
    algorithm: str
    lr: float
    step: int = 0
    beta1: float = ADAM_DEFAULTS["beta1"]
    beta2: float = ADAM_DEFAULTS["beta2"]
    eps: float = ADAM_DEFAULTS["eps"]
    m: tuple = field(default=(), repr=False)
    v: tuple = field(default=(), repr=False)


def make_optimizer(algorithm: str, params: ModelParams, lr: float | None = None, **hyper) -> OptimizerState:
    if algorithm == "sgd":
        if lr is None:
            raise ValueError("sgd needs an explicit learning rate")
        return OptimizerState("sgd", float(lr))
    if algorithm == "adam":
        zeros = tuple(np.zeros_like(a) for a in params.arrays())
        return OptimizerState(
            "adam",
            ADAM_DEFAULTS["lr"] if lr is None else float(lr),
            beta1=hyper.get("beta1", ADAM_DEFAULTS["beta1"]),
            beta2=hyper.get("beta2", ADAM_DEFAULTS["beta2"]),
            eps=hyper.get("eps", ADAM_DEFAULTS["eps"]),
            m=zeros,
            v=zeros,
        )
    raise ValueError(f"unknown optimizer {algorithm!r}")


def adam_step(params: ModelParams, grads: ModelParams, state: OptimizerState) -> tuple[ModelParams, OptimizerState]:
    a, g = _check_match(params, grads)
    if len(state.m) != len(a) or any(x.shape != y.shape for x, y in zip(state.m, a)):
        raise ShapeError("optimizer moments do not match parameters")
    t = state.step + 1
    b1, b2 = state.beta1, state.beta2
    c1, c2 = 1.0 - b1**t, 1.0 - b2**t
    new_p, new_m, new_v = [], [], []
    for p, gr, m, v in zip(a, g, state.m, state.v):
        m = b1 * m + (1.0 - b1) * gr
        v = b2 * v + (1.0 - b2) * (gr * gr)
        p = p - state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
        new_p.append(check_finite(p, "adam update"))
        new_m.append(m)
        new_v.append(v)
    return params.with_arrays(new_p), replace(state, step=t, m=tuple(new_m), v=tuple(new_v))


def optimizer_step(params: ModelParams, grads: ModelParams, state: OptimizerState) -> tuple[ModelParams, OptimizerState]:
    """Dispatch on ``state.algorithm``; the step counter advances for both."""
    if state.algorithm == "sgd":
        return sgd_step(params, grads, state.lr), replace(state, step=state.step + 1)
    return adam_step(params, grads, state)
