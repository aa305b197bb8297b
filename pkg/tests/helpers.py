"""Random networks, batches and small corpora shared by the tests."""

import numpy as np

from advaug.corpus import CorpusSpec
from advaug.network import (
    LabelBatch,
    affine,
    backward,
    conv2d,
    forward,
    init_params,
    maxpool,
    mlp,
    softmax_cross_entropy,
    softmax_output,
    tanh,
)
from advaug.network.batches import FeatureBatch


def random_tanh_mlp(rng, max_width=8):
    sizes = [int(rng.integers(2, max_width + 1)) for _ in range(int(rng.integers(2, 5)))]
    return init_params(mlp(sizes, "tanh"), rng)


def random_relu_mlp(rng, max_width=8):
    sizes = [int(rng.integers(2, max_width + 1)) for _ in range(int(rng.integers(2, 5)))]
    return init_params(mlp(sizes, "relu"), rng)


def random_tanh_conv(rng, pool=False):
    h, w, c = int(rng.integers(3, 6)), int(rng.integers(3, 6)), int(rng.integers(1, 3))
    fh, fw, oc = int(rng.integers(1, 3)), int(rng.integers(1, 3)), int(rng.integers(1, 4))
    layers = [conv2d(h, w, c, fh, fw, oc), tanh()]
    ho, wo = h - fh + 1, w - fw + 1
    width = ho * wo * oc
    if pool and ho >= 2 and wo >= 2:
        layers.append(maxpool(2, 2))
        width = (ho // 2) * (wo // 2) * oc
    n_out = int(rng.integers(2, 5))
    layers += [affine(width, n_out), softmax_output()]
    return init_params(tuple(layers), rng)


def input_dim(params):
    first = params.spec[0]
    return first.n_in if first.kind == "affine" else first.height * first.width * first.channels


def out_dim(params):
    return [layer for layer in params.spec if layer.kind == "affine"][-1].n_out


def random_batch(rng, params, m=None):
    m = int(rng.integers(1, 6)) if m is None else m
    x = rng.standard_normal((m, input_dim(params)))
    y = LabelBatch(rng.integers(0, out_dim(params), size=m), out_dim(params))
    return x, y


def input_gradient(params, x, y):
    logits, trace = forward(params, FeatureBatch(x))
    _, dl = softmax_cross_entropy(logits, y)
    return backward(params, trace, dl)[1]


def small_corpus_spec(**kw):
    base = dict(n_train=300, n_dev=100, n_test=200, seed=3)
    base.update(kw)
    return CorpusSpec(**base)
