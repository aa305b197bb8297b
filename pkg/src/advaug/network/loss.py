"""Mean softmax cross-entropy over hard labels or soft targets."""

from __future__ import annotations

import numpy as np

from ..numerics import ShapeError, as_tensor
from .batches import LabelBatch, SoftTargetBatch


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row softmax; the exact formula used inside the loss."""
    return np.exp(log_softmax(np.asarray(logits, dtype=np.float64)))


def target_matrix(targets: LabelBatch | SoftTargetBatch) -> np.ndarray:
    if isinstance(targets, LabelBatch):
        return targets.one_hot()
    if isinstance(targets, SoftTargetBatch):
        return targets.probs
    raise TypeError(f"unsupported target type {type(targets).__name__}")


def cross_entropy_dense(logits: np.ndarray, t: np.ndarray) -> tuple[float, np.ndarray]:
    """Loss and logit gradient against an explicit M x C target matrix.

    J = -(1/M) sum_m sum_c t[m, c] log softmax(logits)[m, c], and the
    gradient is (softmax(logits) - t) / M.
    """
    logits = as_tensor(logits, "logits")
    if logits.ndim != 2 or t.shape != logits.shape:
        raise ShapeError(f"logits {logits.shape} and targets {t.shape} disagree")
    m = logits.shape[0]
    logp = log_softmax(logits)
    loss = -np.sum(t * logp) / m + 0.0  # +0.0 folds -0.0 into 0.0
    dlogits = (np.exp(logp) - t) / m
    return float(loss), dlogits


def softmax_cross_entropy(logits, targets: LabelBatch | SoftTargetBatch) -> tuple[float, np.ndarray]:
    """Average cross-entropy and its gradient w.r.t. the logits.

    Hard labels are promoted to one-hot rows, so both target kinds share one
    code path.
    """
    return cross_entropy_dense(logits, target_matrix(targets))
