"""Central-difference verification of ``backward``.

The numeric side does not reuse ``forward``: it evaluates the loss through a
separate straight-line implementation in ``numpy.longdouble`` (80-bit on
x86-64). In float64 the rounding noise of the loss divided by 2h is about
1e-11, which alone exceeds a 1e-6 relative tolerance on coordinates whose
true gradient is below 1e-5.
"""

from __future__ import annotations

import numpy as np

from .batches import LabelBatch, SoftTargetBatch
from .loss import softmax_cross_entropy, target_matrix
from .model import ModelParams, backward, forward


class KinkError(ValueError):
    """A ReLU or max-pool input sits too close to a non-differentiable point."""


def central_difference(f, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Gradient of scalar ``f`` at ``x`` by (f(x + h e_i) - f(x - h e_i)) / 2h."""
    x = np.array(x, dtype=np.float64)
    grad = np.zeros_like(x)
    flat, gflat = x.reshape(-1), grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        gflat[i] = (fp - fm) / (2.0 * h)
    return grad


_LD = np.longdouble


def reference_loss(params: ModelParams, x: np.ndarray, targets: np.ndarray, arrays=None) -> _LD:
    """Mean cross-entropy of ``params`` on ``x`` in extended precision.

    ``arrays`` optionally replaces ``params.arrays()`` (same order), so the
    caller can perturb one tensor without building a new ``ModelParams``.
    """
    arrays = list(params.arrays() if arrays is None else arrays)
    h = np.asarray(x, dtype=_LD)
    m = h.shape[0]
    for layer in params.spec:
        k = layer.kind
        if k == "affine":
            w, b = arrays.pop(0).astype(_LD), arrays.pop(0).astype(_LD)
            h = np.einsum("mi,io->mo", h, w) + b
        elif k == "relu":
            h = np.where(h > 0, h, _LD(0))
        elif k == "tanh":
            h = np.tanh(h)
        elif k == "conv2d":
            w, b = arrays.pop(0).astype(_LD), arrays.pop(0).astype(_LD)
            img = h.reshape(m, layer.height, layer.width, layer.channels)
            ho = layer.height - layer.filter_h + 1
            wo = layer.width - layer.filter_w + 1
            out = np.zeros((m, ho, wo, layer.out_channels), dtype=_LD) + b
            for i in range(layer.filter_h):
                for j in range(layer.filter_w):
                    out += np.einsum("mrsc,co->mrso", img[:, i : i + ho, j : j + wo, :], w[i, j])
            h = out.reshape(m, -1)
            geom = (ho, wo, layer.out_channels)
        elif k == "maxpool":
            gh, gw, c = geom
            ph, pw = layer.pool_h, layer.pool_w
            img = h.reshape(m, gh, gw, c)[:, : gh // ph * ph, : gw // pw * pw, :]
            h = img.reshape(m, gh // ph, ph, gw // pw, pw, c).max(axis=(2, 4)).reshape(m, -1)
            geom = (gh // ph, gw // pw, c)
    z = h - h.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return -(np.asarray(targets, dtype=_LD) * logp).sum() / m


def _central_difference_ld(f, x: np.ndarray, h: float) -> np.ndarray:
    xl = np.array(x, dtype=_LD)
    grad = np.zeros(x.shape)
    flat, gflat = xl.reshape(-1), grad.reshape(-1)
    hl = _LD(h)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + hl
        fp = f(xl)
        flat[i] = orig - hl
        fm = f(xl)
        flat[i] = orig
        gflat[i] = float((fp - fm) / (2 * hl))
    return grad


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-8) -> np.ndarray:
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def assert_kink_safe(params: ModelParams, x: np.ndarray, tol: float = 1e-4) -> None:
    _, trace = forward(params, x)
    for i, (layer, cache) in enumerate(zip(params.spec, trace.caches)):
        if layer.kind == "relu" and np.any(np.abs(cache) < tol):
            raise KinkError(f"layer {i}: ReLU pre-activation within {tol} of 0")
        if layer.kind == "maxpool":
            win = np.sort(cache[1], axis=-1)
            if win.shape[-1] > 1 and np.any(win[..., -1] - win[..., -2] < tol):
                raise KinkError(f"layer {i}: max-pool window has a near tie")


def grad_check(
    params: ModelParams,
    batch,
    labels: LabelBatch | SoftTargetBatch,
    h: float = 1e-5,
    kink_tol: float = 1e-4,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Covers every parameter coordinate and every input coordinate. Error per
    coordinate is ``|a - n| / max(|a|, |n|, 1e-8)``. Networks with ReLU or
    max-pool layers are first checked for inputs near their kinks.
    """
    x = np.array(getattr(batch, "values", batch), dtype=np.float64)
    kinds = {layer.kind for layer in params.spec}
    if kinds & {"relu", "maxpool"}:
        assert_kink_safe(params, x, kink_tol)

    logits, trace = forward(params, x)
    _, dlogits = softmax_cross_entropy(logits, labels)
    grads, input_grad = backward(params, trace, dlogits)

    t = target_matrix(labels)
    worst = 0.0
    arrays = params.arrays()
    for j, (a, g) in enumerate(zip(arrays, grads.arrays())):

        def f(value, j=j):
            trial = list(arrays)
            trial[j] = value
            return reference_loss(params, x, t, trial)

        num = _central_difference_ld(f, a, h)
        if num.size:
            worst = max(worst, float(relative_error(g, num).max()))
    num_x = _central_difference_ld(lambda xx: reference_loss(params, xx, t), x, h)
    worst = max(worst, float(relative_error(input_grad, num_x).max()))
    return worst
