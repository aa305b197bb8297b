from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..numerics import ShapeError, as_tensor

ROLES = ("original", "clean", "noisy", "adversarial")


@dataclass(frozen=True)
class FeatureBatch:
    """M x d input features with a tag saying where they came from."""

    values: np.ndarray
    role: str = "original"

    def __post_init__(self):
        v = as_tensor(self.values, "features")
        if v.ndim != 2 or v.shape[0] < 1:
            raise ShapeError(f"feature batch must be M x d with M >= 1, got {v.shape}")
        if self.role not in ROLES:
            raise ValueError(f"unknown feature role {self.role!r}")
        if v is not self.values:
            object.__setattr__(self, "values", v)

    def __len__(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class LabelBatch:
    indices: np.ndarray
    n_classes: int

    def __post_init__(self):
        idx = np.asarray(self.indices)
        if idx.ndim != 1 or not np.issubdtype(idx.dtype, np.integer):
            raise ShapeError("labels must be a 1-d integer array")
        if idx.size and (idx.min() < 0 or idx.max() >= self.n_classes):
            raise ValueError(f"label outside [0, {self.n_classes})")
        object.__setattr__(self, "indices", idx.astype(np.int64, copy=False))

    def __len__(self):
        return self.indices.shape[0]

    def one_hot(self) -> np.ndarray:
        out = np.zeros((len(self), self.n_classes))
        out[np.arange(len(self)), self.indices] = 1.0
        return out


@dataclass(frozen=True)
class SoftTargetBatch:
    """Rows are probability distributions over the classes."""

    probs: np.ndarray

    def __post_init__(self):
        p = as_tensor(self.probs, "soft targets")
        if p.ndim != 2:
            raise ShapeError(f"soft targets must be M x C, got {p.shape}")
        if np.any(p < 0) or np.any(np.abs(p.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("soft target rows must be nonnegative and sum to 1")
        if p is not self.probs:
            object.__setattr__(self, "probs", p)

    def __len__(self):
        return self.probs.shape[0]

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]
