"""Compare the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5]

Prints the best-of-N time per call for matmul, im2col and col2im at the
shapes seen during training, plus one training epoch on the reference
corpus, and checks that both backends give bit-identical results.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from advaug import _pykernels

try:
    from advaug import _ckernels
except ImportError:
    _ckernels = None

EPOCH_SNIPPET = """
import time
from advaug import kernels
from advaug.experiment import REFERENCE, get_corpus, load_config
from advaug.network import init_params, make_optimizer
from advaug.experiment.runner import model_spec
from advaug.numerics import substream
from advaug.training import LabeledData, TrainConfig, train_epoch_adversarial
cfg = load_config(REFERENCE)
c = get_corpus(cfg)
p = init_params(model_spec(cfg, c), substream(0, "init", 0))
d = LabeledData(c.train_noisy, c.train_labels, 10)
tc = TrainConfig(batch_size=64, lr=1e-3, epsilon=0.3)
best = float("inf")
for _ in range({repeat}):
    t = time.perf_counter()
    train_epoch_adversarial(p, d, tc, make_optimizer("adam", p, 1e-3))
    best = min(best, time.perf_counter() - t)
print(kernels.BACKEND, best)
"""


def best_of(fn, repeat):
    number = max(1, int(0.05 / max(timeit.timeit(fn, number=1), 1e-7)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def kernel_cases(rng):
    a64, w = rng.standard_normal((64, 20)), rng.standard_normal((20, 32))
    big_a, big_b = rng.standard_normal((256, 128)), rng.standard_normal((128, 64))
    x = rng.standard_normal((32, 12, 12, 3))
    cols = _pykernels.im2col(x, 3, 3)
    return [
        ("matmul 64x20 @ 20x32", "matmul", (a64, w)),
        ("matmul 256x128 @ 128x64", "matmul", (big_a, big_b)),
        ("im2col 32x12x12x3, 3x3", "im2col", (x, 3, 3)),
        ("col2im 32x12x12x3, 3x3", "col2im", (cols, 32, 12, 12, 3, 3, 3)),
    ]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _ckernels is None:
        sys.exit("compiled extension not built; run `pip install -e . --no-build-isolation` first")
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} {'cython':>12s} {'numpy':>12s} {'speedup':>8s}  identical")
    for name, fn_name, fargs in kernel_cases(rng):
        c_fn, p_fn = getattr(_ckernels, fn_name), getattr(_pykernels, fn_name)
        tc = best_of(lambda: c_fn(*fargs), args.repeat)
        tp = best_of(lambda: p_fn(*fargs), args.repeat)
        same = c_fn(*fargs).tobytes() == p_fn(*fargs).tobytes()
        print(f"{name:28s} {tc * 1e6:10.1f}us {tp * 1e6:10.1f}us {tp / tc:7.2f}x  {same}")

    code = EPOCH_SNIPPET.format(repeat=args.repeat)
    for env in ({}, {"ADVAUG_PURE_PYTHON": "1"}):
        out = subprocess.run([sys.executable, "-c", code], env={**os.environ, **env}, capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()
        print(f"AdvEx epoch on reference corpus [{backend}]: {float(secs):.3f} s")


if __name__ == "__main__":
    main()
