"""Fast-gradient-sign and random-sign input perturbations.

An FGSM perturbation is ``epsilon * sign(grad_x J)``: every coordinate moves
by exactly epsilon in the direction that increases the loss, except
coordinates with a zero gradient, which stay put. The random baseline swaps
the gradient sign for an independent fair coin per coordinate.

Perturbed features are not clipped to any range.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import FeatureBatch
from .numerics import ShapeError, as_tensor, sign

ORIGINS = ("fgsm", "random")


@dataclass(frozen=True)
class Perturbation:
    delta: np.ndarray
    epsilon: float
    origin: str

    def __post_init__(self):
        if self.origin not in ORIGINS:
            raise ValueError(f"unknown perturbation origin {self.origin!r}")
        _check_epsilon(self.epsilon)
        d = as_tensor(self.delta, "perturbation")
        if np.any(np.abs(d) > self.epsilon):
            raise ValueError("perturbation exceeds its epsilon bound")
        d.flags.writeable = False
        object.__setattr__(self, "delta", d)

    @property
    def shape(self):
        return self.delta.shape


def _check_epsilon(epsilon: float) -> float:
    if not np.isfinite(epsilon) or epsilon < 0:
        raise ValueError(f"epsilon must be a finite nonnegative number, got {epsilon}")
    return float(epsilon)


def fgsm_perturbation(input_grad, epsilon: float) -> Perturbation:
    """``delta = epsilon * sign(input_grad)`` with sign(0) = 0."""
    epsilon = _check_epsilon(epsilon)
    return Perturbation(epsilon * sign(input_grad), epsilon, "fgsm")


def random_perturbation(rng: np.random.Generator, shape, epsilon: float) -> Perturbation:
    """Each coordinate independently +epsilon or -epsilon with probability 1/2."""
    epsilon = _check_epsilon(epsilon)
    signs = np.where(rng.random(shape) < 0.5, -1.0, 1.0)
    return Perturbation(epsilon * signs, epsilon, "random")


def apply_perturbation(batch: FeatureBatch, p: Perturbation) -> FeatureBatch:
    """New batch ``x + delta`` tagged adversarial; ``batch`` is left untouched."""
    if batch.values.shape != p.delta.shape:
        raise ShapeError(f"batch {batch.values.shape} and perturbation {p.delta.shape} differ")
    return FeatureBatch(batch.values + p.delta, "adversarial")


def make_perturbation(origin: str, input_grad, epsilon: float, rng: np.random.Generator | None = None) -> Perturbation:
    """Build either kind of perturbation for a batch; ``rng`` is only used for ``random``."""
    if origin == "fgsm":
        return fgsm_perturbation(input_grad, epsilon)
    if origin == "random":
        if rng is None:
            raise ValueError("random perturbations need an rng")
        return random_perturbation(rng, np.shape(input_grad), epsilon)
    raise ValueError(f"unknown perturbation origin {origin!r}")
