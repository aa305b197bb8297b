"""Teacher-student training on parallel clean/noisy data.

The student loss mixes hard-label and teacher cross-entropy,

    J = alpha * CE(onehot(y), p_S(x_noisy)) + (1 - alpha) * CE(p_T(x_clean), p_S(x_noisy)),

which, cross-entropy being linear in its target, equals one cross-entropy
against the blended target ``alpha * onehot(y) + (1 - alpha) * p_T``.

When adversarial augmentation is switched on, the FGSM perturbation is
built from the noisy student input, by default using the gradient of the
full mixed loss (``fgsm_loss="combined"``); ``"hard"`` uses the hard-label
term only. The adversarial batch keeps the teacher posteriors computed from
the clean inputs. The teacher is never updated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import LabelBatch, ModelParams, SoftTargetBatch, forward, softmax
from .network.loss import cross_entropy_dense
from .numerics import ShapeError
from .training import TrainConfig, run_epoch


@dataclass(frozen=True)
class TsConfig:
    alpha: float = 0.5
    fgsm_loss: str = "combined"

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if self.fgsm_loss not in ("combined", "hard"):
            raise ValueError("fgsm_loss must be 'combined' or 'hard'")


@dataclass(frozen=True)
class ParallelData:
    """Clean and noisy views of the same samples, sharing one label vector."""

    clean: np.ndarray
    noisy: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __post_init__(self):
        if self.clean.shape != self.noisy.shape or self.clean.shape[0] != self.labels.shape[0]:
            raise ShapeError("clean and noisy features must be parallel to the labels")

    def __len__(self):
        return self.labels.shape[0]


@dataclass(frozen=True)
class TsTargets:
    hard: LabelBatch
    soft: SoftTargetBatch


def teacher_posteriors(teacher: ModelParams, x_clean) -> SoftTargetBatch:
    """Softmax outputs of the teacher on clean inputs."""
    logits, _ = forward(teacher, x_clean)
    return SoftTargetBatch(softmax(logits))


def blended_targets(hard: LabelBatch, soft: SoftTargetBatch, alpha: float) -> np.ndarray:
    if len(hard) != len(soft) or hard.n_classes != soft.n_classes:
        raise ShapeError("hard and soft targets disagree in shape")
    return alpha * hard.one_hot() + (1.0 - alpha) * soft.probs


def ts_loss_grad(student_logits, hard: LabelBatch, soft: SoftTargetBatch, cfg: TsConfig):
    """Mixed teacher-student loss and its exact gradient w.r.t. the student logits."""
    if not 0.0 <= cfg.alpha <= 1.0:
        raise ValueError("alpha out of range")
    return cross_entropy_dense(student_logits, blended_targets(hard, soft, cfg.alpha))


def _check_pair(teacher: ModelParams, student: ModelParams):
    if teacher.spec != student.spec:
        raise ShapeError("teacher and student must share one layer spec")


def train_epoch_ts(
    teacher: ModelParams,
    student: ModelParams,
    data: ParallelData,
    cfg: TsConfig,
    train_cfg: TrainConfig,
    opt_state,
    epoch: int = 0,
    epsilon: float | None = None,
):
    """One T/S epoch over parallel data; ``epsilon`` (default ``train_cfg.epsilon``) adds the adversarial pass.

    Returns ``(student, opt_state, records)``.
    """
    _check_pair(teacher, student)
    if epsilon is None:
        epsilon = train_cfg.epsilon

    def targets_for(idx):
        return TsTargets(LabelBatch(data.labels[idx], data.n_classes), teacher_posteriors(teacher, data.clean[idx]))

    def loss(logits, t: TsTargets):
        return ts_loss_grad(logits, t.hard, t.soft, cfg)

    def hard_loss(logits, t: TsTargets):
        return cross_entropy_dense(logits, t.hard.one_hot())

    return run_epoch(
        student,
        opt_state,
        data.noisy,
        train_cfg,
        epoch,
        targets_for,
        loss=loss,
        epsilon=epsilon,
        fgsm_loss=hard_loss if cfg.fgsm_loss == "hard" else loss,
        role="noisy",
    )
