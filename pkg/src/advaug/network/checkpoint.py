"""Model checkpoints: layer spec, parameter tensors and the creating seed."""

from __future__ import annotations

from .. import container
from .model import ModelParams
from .spec import LayerSpec

KIND = "CHECKPOINT"
VERSION = 1


def save_checkpoint(path, params: ModelParams, seed: int | None = None, extra: dict | None = None):
    meta = {
        "spec": [layer.to_dict() for layer in params.spec],
        "role": params.role,
        "seed": seed,
        "extra": extra or {},
    }
    arrays = {}
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        if w is not None:
            arrays[f"layer{i}.weight"] = w
            arrays[f"layer{i}.bias"] = b
    return container.save(path, KIND, VERSION, meta, arrays)


def load_checkpoint(path) -> tuple[ModelParams, dict]:
    """Returns the parameters and the metadata (``seed``, ``extra``)."""
    meta, arrays = container.load(path, KIND, VERSION)
    spec = tuple(LayerSpec.from_dict(d) for d in meta["spec"])
    ws = tuple(arrays.get(f"layer{i}.weight") for i in range(len(spec)))
    bs = tuple(arrays.get(f"layer{i}.bias") for i in range(len(spec)))
    try:
        params = ModelParams(spec, ws, bs, meta["role"])
    except ValueError as exc:
        raise container.FormatError(f"checkpoint does not match its spec: {exc}") from None
    return params, meta
