"""Layered classifier: specs, forward/backward passes, loss, optimizers."""

from .batches import FeatureBatch, LabelBatch, SoftTargetBatch
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import KinkError, central_difference, grad_check, relative_error
from .loss import cross_entropy_dense, log_softmax, softmax, softmax_cross_entropy
from .model import ForwardTrace, ModelParams, backward, forward, init_params, predict
from .optim import OptimizerState, adam_step, make_optimizer, optimizer_step, sgd_step
from .spec import (
    LayerSpec,
    SpecError,
    affine,
    conv2d,
    input_width,
    maxpool,
    mlp,
    n_classes,
    relu,
    resolve,
    softmax_output,
    tanh,
)

__all__ = [
    "FeatureBatch",
    "LabelBatch",
    "SoftTargetBatch",
    "load_checkpoint",
    "save_checkpoint",
    "KinkError",
    "central_difference",
    "grad_check",
    "relative_error",
    "cross_entropy_dense",
    "log_softmax",
    "softmax",
    "softmax_cross_entropy",
    "ForwardTrace",
    "ModelParams",
    "backward",
    "forward",
    "init_params",
    "predict",
    "OptimizerState",
    "adam_step",
    "make_optimizer",
    "optimizer_step",
    "sgd_step",
    "LayerSpec",
    "SpecError",
    "affine",
    "conv2d",
    "input_width",
    "maxpool",
    "mlp",
    "n_classes",
    "relu",
    "resolve",
    "softmax_output",
    "tanh",
]
