"""Baseline and adversarial-augmentation training loops, and evaluation.

The adversarial loop follows this order for each shuffled mini-batch:

1. update the parameters on the original batch;
2. with the *updated* parameters, take the input gradient of the same loss
   and form ``delta = epsilon * sign(grad)``;
3. build the adversarial batch ``x + delta`` with the original labels;
4. update again on the adversarial batch.

So every batch costs exactly two optimizer steps. With
``origin="random"`` only step 2 changes: the gradient sign is replaced by
fair coin flips drawn from a dedicated random stream.

Shuffling uses ``substream(shuffle_seed, "shuffle", epoch)``, so baseline
and adversarial runs with the same seed see the same batches.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .adversarial import ORIGINS, apply_perturbation, fgsm_perturbation, random_perturbation
from .network import (
    FeatureBatch,
    LabelBatch,
    ModelParams,
    backward,
    forward,
    make_optimizer,
    optimizer_step,
    predict,
    softmax_cross_entropy,
)
from .network.optim import OptimizerState
from .numerics import substream


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 20
    batch_size: int = 32
    optimizer: str = "adam"
    lr: float | None = None  # None -> 1e-3 for adam; required for sgd
    epsilon: float | None = None  # None -> baseline training
    origin: str = "fgsm"
    shuffle_seed: int = 0
    patience: int | None = None  # early stopping on dev average error

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.epsilon is not None and not (np.isfinite(self.epsilon) and self.epsilon >= 0):
            raise ValueError("epsilon must be nonnegative")
        if self.origin not in ORIGINS:
            raise ValueError(f"origin must be one of {ORIGINS}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")
        if self.optimizer == "sgd" and self.lr is None:
            raise ValueError("sgd needs lr")
        if self.patience is not None and self.patience < 1:
            raise ValueError("patience must be >= 1")


@dataclass(frozen=True)
class LabeledData:
    features: np.ndarray
    labels: np.ndarray
    n_classes: int

    def __len__(self):
        return self.features.shape[0]


@dataclass(frozen=True)
class BatchRecord:
    epoch: int
    batch: int
    loss_original: float
    loss_adversarial: float | None = None


def new_optimizer(params: ModelParams, cfg: TrainConfig) -> OptimizerState:
    return make_optimizer(cfg.optimizer, params, cfg.lr)


def batch_indices(n: int, batch_size: int, shuffle_seed: int, epoch: int) -> list[np.ndarray]:
    """Shuffled mini-batches for one epoch; the last batch may be short."""
    perm = substream(shuffle_seed, "shuffle", epoch).permutation(n)
    return [perm[s : s + batch_size] for s in range(0, n, batch_size)]


def train_step(params, opt_state, x, targets, loss=softmax_cross_entropy):
    """One forward/backward/update. Returns ``(params, opt_state, J)``."""
    logits, trace = forward(params, x)
    j, dlogits = loss(logits, targets)
    grads, _ = backward(params, trace, dlogits)
    params, opt_state = optimizer_step(params, grads, opt_state)
    return params, opt_state, j


def input_gradient(params, x, targets, loss=softmax_cross_entropy) -> np.ndarray:
    logits, trace = forward(params, x)
    _, dlogits = loss(logits, targets)
    return backward(params, trace, dlogits)[1]


def run_epoch(
    params: ModelParams,
    opt_state: OptimizerState,
    features: np.ndarray,
    cfg: TrainConfig,
    epoch: int,
    targets_for: Callable[[np.ndarray], object],
    loss: Callable = softmax_cross_entropy,
    epsilon: float | None = None,
    fgsm_loss: Callable | None = None,
    role: str = "original",
):
    """Shared epoch loop behind every recipe.

    ``targets_for(idx)`` returns the targets for a batch of row indices and
    is called once per batch; the adversarial copy reuses them unchanged.
    ``fgsm_loss`` is the loss whose input gradient defines the perturbation
    (defaults to ``loss``).
    """
    fgsm_loss = fgsm_loss or loss
    prng = substream(cfg.shuffle_seed, "perturb", epoch) if epsilon is not None and cfg.origin == "random" else None
    records = []
    for b, idx in enumerate(batch_indices(features.shape[0], cfg.batch_size, cfg.shuffle_seed, epoch)):
        batch = FeatureBatch(features[idx], role)
        targets = targets_for(idx)
        params, opt_state, j0 = train_step(params, opt_state, batch, targets, loss)
        j1 = None
        if epsilon is not None:
            if cfg.origin == "fgsm":
                pert = fgsm_perturbation(input_gradient(params, batch, targets, fgsm_loss), epsilon)
            else:
                pert = random_perturbation(prng, batch.values.shape, epsilon)
            adv = apply_perturbation(batch, pert)
            params, opt_state, j1 = train_step(params, opt_state, adv, targets, loss)
        records.append(BatchRecord(epoch, b, j0, j1))
    return params, opt_state, records


def _label_targets(data: LabeledData):
    return lambda idx: LabelBatch(data.labels[idx], data.n_classes)


def train_epoch_baseline(params, data: LabeledData, cfg: TrainConfig, opt_state, epoch: int = 0):
    """One update per mini-batch on the original data."""
    return run_epoch(params, opt_state, data.features, cfg, epoch, _label_targets(data))


def train_epoch_adversarial(params, data: LabeledData, cfg: TrainConfig, opt_state, epoch: int = 0):
    """Original update followed by an update on the perturbed copy, per batch."""
    if cfg.epsilon is None:
        raise ValueError("adversarial training needs cfg.epsilon")
    return run_epoch(params, opt_state, data.features, cfg, epoch, _label_targets(data), epsilon=cfg.epsilon)


def train_epoch(params, data: LabeledData, cfg: TrainConfig, opt_state, epoch: int = 0):
    if cfg.epsilon is None:
        return train_epoch_baseline(params, data, cfg, opt_state, epoch)
    return train_epoch_adversarial(params, data, cfg, opt_state, epoch)


@dataclass
class FitResult:
    params: ModelParams
    opt_state: OptimizerState
    records: list[BatchRecord] = field(default_factory=list)
    dev_errors: list[float] = field(default_factory=list)
    best_epoch: int = -1
    epoch_seconds: list[float] = field(default_factory=list)


def fit(
    params: ModelParams,
    cfg: TrainConfig,
    epoch_fn: Callable,
    dev_error: Callable[[ModelParams], float] | None = None,
) -> FitResult:
    """Run ``cfg.epochs`` epochs of ``epoch_fn(params, opt_state, epoch)``.

    With ``dev_error`` and ``cfg.patience`` set, stops after ``patience``
    epochs without a strict improvement of the dev error and returns the best
    parameters seen (ties keep the earlier epoch).
    """
    opt_state = new_optimizer(params, cfg)
    result = FitResult(params, opt_state)
    best = (np.inf, params, -1)
    stale = 0
    for epoch in range(cfg.epochs):
        t0 = time.perf_counter()
        params, opt_state, recs = epoch_fn(params, opt_state, epoch)
        result.records.extend(recs)
        result.epoch_seconds.append(time.perf_counter() - t0)
        if dev_error is None:
            continue
        err = dev_error(params)
        result.dev_errors.append(err)
        if err < best[0]:
            best, stale = (err, params, epoch), 0
        else:
            stale += 1
            if cfg.patience is not None and stale >= cfg.patience:
                break
    result.opt_state = opt_state
    if dev_error is not None and cfg.patience is not None and best[2] >= 0:
        result.params, result.best_epoch = best[1], best[2]
    else:
        result.params, result.best_epoch = params, cfg.epochs - 1
    return result


@dataclass(frozen=True)
class EvalReport:
    """Classification error per condition on one split."""

    split: str
    conditions: tuple[str, ...]
    errors: tuple[int, ...]
    totals: tuple[int, ...]

    def __post_init__(self):
        if not (len(self.conditions) == len(self.errors) == len(self.totals)):
            raise ValueError("ragged report")
        if any(e < 0 or e > t for e, t in zip(self.errors, self.totals)):
            raise ValueError("error counts must lie in [0, total]")

    @property
    def rates(self) -> dict[str, float]:
        return {c: e / t for c, e, t in zip(self.conditions, self.errors, self.totals)}

    @property
    def average(self) -> float:
        """Pooled error rate; equals the mean of the rates when counts are equal."""
        return sum(self.errors) / sum(self.totals)

    def rows(self) -> list[tuple[str, int, int, float]]:
        out = [(c, e, t, e / t) for c, e, t in zip(self.conditions, self.errors, self.totals)]
        out.append(("avg", sum(self.errors), sum(self.totals), self.average))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["condition", "errors", "total", "rate"])
        for c, e, t, r in self.rows():
            w.writerow([c, e, t, repr(r)])
        return buf.getvalue()


def evaluate(params: ModelParams, corpus, split: str = "test") -> EvalReport:
    """Argmax error per condition of ``corpus.split(split)``; deterministic."""
    feats, labels = corpus.split(split)
    conds = tuple(sorted(feats))
    errors = tuple(int(np.sum(predict(params, feats[c]) != labels)) for c in conds)
    return EvalReport(split, conds, errors, tuple(len(labels) for _ in conds))


def error_rate(params: ModelParams, features: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(predict(params, features) != labels))


METRICS_HEADER = "ADVAUG-METRICS v1\nepoch\tbatch\tloss_original\tloss_adversarial\n"


def format_records(records: Sequence[BatchRecord]) -> str:
    """Tab-separated metric lines; a missing adversarial loss is written as ``-``."""
    lines = []
    for r in records:
        adv = "-" if r.loss_adversarial is None else repr(r.loss_adversarial)
        lines.append(f"{r.epoch}\t{r.batch}\t{r.loss_original!r}\t{adv}\n")
    return "".join(lines)
