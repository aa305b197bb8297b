"""Forward and reverse-mode passes of the layered classifier.

``backward`` returns gradients for every parameter *and* for the input
batch; the input gradient is what the adversarial module turns into FGSM
perturbations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .. import kernels
from ..numerics import ShapeError, as_tensor, check_finite, column_sum, matmul
from .batches import FeatureBatch
from .spec import LayerShape, LayerSpec, SpecError, resolve

PARAM_ROLES = ("generic", "student", "teacher", "gradient")


def param_shapes(layer: LayerSpec) -> tuple[tuple[int, ...], tuple[int, ...]] | None:
    if layer.kind == "affine":
        return (layer.n_in, layer.n_out), (layer.n_out,)
    if layer.kind == "conv2d":
        return (layer.filter_h, layer.filter_w, layer.channels, layer.out_channels), (layer.out_channels,)
    return None


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=np.float64)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class ModelParams:
    """All trainable tensors of a network, one (weight, bias) pair per parameterised layer.

    Parameter-free layers hold ``None``. Arrays are copied on construction
    and marked read-only, so a ``ModelParams`` value never changes.
    """

    spec: tuple[LayerSpec, ...]
    weights: tuple[np.ndarray | None, ...]
    biases: tuple[np.ndarray | None, ...]
    role: str = "generic"

    def __post_init__(self):
        spec = tuple(self.spec)
        resolve(spec)
        if self.role not in PARAM_ROLES:
            raise ValueError(f"unknown parameter role {self.role!r}")
        if len(self.weights) != len(spec) or len(self.biases) != len(spec):
            raise ShapeError("one weight/bias slot per layer is required")
        ws, bs = [], []
        for i, (layer, w, b) in enumerate(zip(spec, self.weights, self.biases)):
            shapes = param_shapes(layer)
            if shapes is None:
                if w is not None or b is not None:
                    raise ShapeError(f"layer {i} ({layer.kind}) takes no parameters")
                ws.append(None)
                bs.append(None)
                continue
            w, b = _frozen(w), _frozen(b)
            if w.shape != shapes[0] or b.shape != shapes[1]:
                raise ShapeError(f"layer {i}: expected {shapes}, got {w.shape} and {b.shape}")
            check_finite(w, f"layer {i} weight")
            check_finite(b, f"layer {i} bias")
            ws.append(w)
            bs.append(b)
        object.__setattr__(self, "spec", spec)
        object.__setattr__(self, "weights", tuple(ws))
        object.__setattr__(self, "biases", tuple(bs))

    def arrays(self) -> list[np.ndarray]:
        """Parameter tensors in a fixed order: weight then bias, layer by layer."""
        out = []
        for w, b in zip(self.weights, self.biases):
            if w is not None:
                out.extend((w, b))
        return out

    def with_arrays(self, arrays: Sequence[np.ndarray], role: str | None = None) -> "ModelParams":
        it = iter(arrays)
        ws, bs = [], []
        for w in self.weights:
            if w is None:
                ws.append(None)
                bs.append(None)
            else:
                ws.append(next(it))
                bs.append(next(it))
        return ModelParams(self.spec, tuple(ws), tuple(bs), role or self.role)

    def with_role(self, role: str) -> "ModelParams":
        return ModelParams(self.spec, self.weights, self.biases, role)

    def identical(self, other: "ModelParams") -> bool:
        """Bitwise equality of spec and every tensor."""
        if self.spec != other.spec:
            return False
        a, b = self.arrays(), other.arrays()
        return len(a) == len(b) and all(x.tobytes() == y.tobytes() for x, y in zip(a, b))

    @property
    def n_params(self) -> int:
        return sum(a.size for a in self.arrays())


def init_params(spec: Sequence[LayerSpec], rng: np.random.Generator, role: str = "generic") -> ModelParams:
    """Glorot-uniform weights, bound sqrt(6 / (fan_in + fan_out)); zero biases.

    For conv2d layers fan_in = filter area x input channels and
    fan_out = filter area x output channels. Layers draw in order.
    """
    spec = tuple(spec)
    resolve(spec)
    ws, bs = [], []
    for layer in spec:
        shapes = param_shapes(layer)
        if shapes is None:
            ws.append(None)
            bs.append(None)
            continue
        if layer.kind == "affine":
            fan_in, fan_out = layer.n_in, layer.n_out
        else:
            area = layer.filter_h * layer.filter_w
            fan_in, fan_out = area * layer.channels, area * layer.out_channels
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        ws.append(rng.uniform(-bound, bound, size=shapes[0]))
        bs.append(np.zeros(shapes[1]))
    return ModelParams(spec, tuple(ws), tuple(bs), role)


@dataclass
class ForwardTrace:
    """Per-layer caches from ``forward``; consumed by ``backward``."""

    spec: tuple[LayerSpec, ...]
    shapes: list[LayerShape]
    caches: list = field(default_factory=list)
    batch_size: int = 0


def _values(x) -> np.ndarray:
    if isinstance(x, FeatureBatch):
        return x.values
    return as_tensor(x, "features")


def forward(params: ModelParams, x) -> tuple[np.ndarray, ForwardTrace]:
    """Logits (pre-softmax) for a batch, plus the trace needed by ``backward``."""
    h = _values(x)
    shapes = resolve(params.spec)
    if h.ndim != 2 or h.shape[1] != shapes[0].in_width:
        raise ShapeError(f"input width {h.shape[-1]} does not match network input {shapes[0].in_width}")
    m = h.shape[0]
    trace = ForwardTrace(params.spec, shapes, [], m)
    for layer, shp, w, b in zip(params.spec, shapes, params.weights, params.biases):
        k = layer.kind
        if k == "affine":
            trace.caches.append(h)
            h = matmul(h, w) + b
        elif k == "relu":
            trace.caches.append(h)
            h = np.maximum(h, 0.0)
        elif k == "tanh":
            h = np.tanh(h)
            trace.caches.append(h)
        elif k == "conv2d":
            hh, ww, cc = shp.in_geom
            cols = kernels.im2col(h.reshape(m, hh, ww, cc), layer.filter_h, layer.filter_w)
            trace.caches.append(cols)
            wmat = w.reshape(-1, layer.out_channels)
            h = (matmul(cols, wmat) + b).reshape(m, shp.out_width)
        elif k == "maxpool":
            h, arg, win = _maxpool_forward(h, shp, layer)
            trace.caches.append((arg, win))
        else:  # softmax output: logits pass through
            trace.caches.append(None)
        check_finite(h, f"{k} activation")
    return h, trace


def _pool_windows(h: np.ndarray, shp: LayerShape, layer: LayerSpec) -> np.ndarray:
    m = h.shape[0]
    hh, ww, cc = shp.in_geom
    ho, wo, _ = shp.out_geom
    ph, pw = layer.pool_h, layer.pool_w
    x = h.reshape(m, hh, ww, cc)[:, : ho * ph, : wo * pw, :]
    x = x.reshape(m, ho, ph, wo, pw, cc).transpose(0, 1, 3, 5, 2, 4)
    return x.reshape(m, ho, wo, cc, ph * pw)


def _maxpool_forward(h, shp, layer):
    win = _pool_windows(h, shp, layer)
    arg = win.argmax(axis=-1)  # first maximum in row-major window order
    out = np.take_along_axis(win, arg[..., None], axis=-1)[..., 0]
    return out.reshape(h.shape[0], shp.out_width), arg, win


def _maxpool_backward(g, arg, shp, layer, m):
    hh, ww, cc = shp.in_geom
    ho, wo, _ = shp.out_geom
    ph, pw = layer.pool_h, layer.pool_w
    win = np.zeros((m, ho, wo, cc, ph * pw))
    np.put_along_axis(win, arg[..., None], g.reshape(m, ho, wo, cc)[..., None], axis=-1)
    win = win.reshape(m, ho, wo, cc, ph, pw).transpose(0, 1, 4, 2, 5, 3)
    dx = np.zeros((m, hh, ww, cc))
    dx[:, : ho * ph, : wo * pw, :] = win.reshape(m, ho * ph, wo * pw, cc)
    return dx.reshape(m, shp.in_width)


def backward(params: ModelParams, trace: ForwardTrace, dlogits) -> tuple[ModelParams, np.ndarray]:
    """Exact gradients of the loss w.r.t. every parameter and the input batch.

    ``dlogits`` is the loss gradient w.r.t. the logits returned by
    ``forward``. Returns ``(param_grads, input_grad)``; ``param_grads`` has
    the same layout as ``params`` with role ``"gradient"``.
    """
    if trace.spec != params.spec or len(trace.caches) != len(params.spec):
        raise SpecError("trace was produced by a different network")
    g = as_tensor(dlogits, "dlogits")
    m = trace.batch_size
    if g.shape != (m, trace.shapes[-1].out_width):
        raise ShapeError(f"dlogits shape {g.shape} does not match logits ({m}, {trace.shapes[-1].out_width})")
    n = len(params.spec)
    gw: list[np.ndarray | None] = [None] * n
    gb: list[np.ndarray | None] = [None] * n
    for i in range(n - 1, -1, -1):
        layer, shp, cache = params.spec[i], trace.shapes[i], trace.caches[i]
        k = layer.kind
        if k == "affine":
            w = params.weights[i]
            gw[i] = matmul(cache.T, g)
            gb[i] = column_sum(g)
            g = matmul(g, w.T)
        elif k == "relu":
            g = g * (cache > 0.0)
        elif k == "tanh":
            g = g * (1.0 - cache * cache)
        elif k == "conv2d":
            oc = layer.out_channels
            w = params.weights[i]
            gcol = g.reshape(-1, oc)
            gw[i] = matmul(cache.T, gcol).reshape(w.shape)
            gb[i] = column_sum(gcol)
            dcols = matmul(gcol, w.reshape(-1, oc).T)
            hh, ww, cc = shp.in_geom
            g = kernels.col2im(dcols, m, hh, ww, cc, layer.filter_h, layer.filter_w).reshape(m, shp.in_width)
        elif k == "maxpool":
            g = _maxpool_backward(g, cache[0], shp, layer, m)
        check_finite(g, f"{k} gradient")
    grads = ModelParams(params.spec, tuple(gw), tuple(gb), "gradient")
    return grads, g


def predict(params: ModelParams, x, chunk: int = 4096) -> np.ndarray:
    """Argmax class per row, evaluated in fixed-size chunks."""
    x = _values(x)
    out = [forward(params, x[s : s + chunk])[0].argmax(axis=1) for s in range(0, x.shape[0], chunk)]
    return np.concatenate(out) if out else np.zeros(0, dtype=np.int64)
