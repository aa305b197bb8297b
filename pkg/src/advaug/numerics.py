"""Dense float64 tensor helpers and seeded random streams.

Tensors are plain ``numpy.ndarray`` objects of dtype float64, stored
row-major. Operations here refuse to produce NaN or Inf: a non-finite result
raises :class:`NonFiniteError` instead of propagating.

Random streams use numpy's PCG64 bit generator. A stream is identified by a
64-bit seed and, optionally, a purpose tag plus integer indices; the tag and
indices are folded into the ``SeedSequence`` spawn key so that consumers such
as corpus generation and mini-batch shuffling never share a stream.
"""

from __future__ import annotations

import numpy as np

from . import kernels

PURPOSES = {"corpus": 0, "init": 1, "shuffle": 2, "perturb": 3}

_MAX_SEED = 2**64 - 1


class NonFiniteError(FloatingPointError):
    """A tensor contains NaN or Inf."""


class ShapeError(ValueError):
    """Operand shapes are incompatible."""


def check_finite(t: np.ndarray, what: str = "tensor") -> np.ndarray:
    if not np.all(np.isfinite(t)):
        raise NonFiniteError(f"{what} contains non-finite values")
    return t


def as_tensor(x, what: str = "tensor") -> np.ndarray:
    """Copy-free conversion to a C-contiguous, finite float64 array."""
    t = np.ascontiguousarray(x, dtype=np.float64)
    return check_finite(t, what)


def _check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MAX_SEED:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def seeded_rng(seed: int) -> np.random.Generator:
    """Generator whose whole output stream is a function of ``seed``."""
    return np.random.Generator(np.random.PCG64(_check_seed(seed)))


def substream(seed: int, purpose: str, *index: int) -> np.random.Generator:
    """Independent stream for one consumer, e.g. ``substream(7, "shuffle", epoch)``."""
    key = (PURPOSES[purpose], *(int(i) for i in index))
    ss = np.random.SeedSequence(_check_seed(seed), spawn_key=key)
    return np.random.Generator(np.random.PCG64(ss))


def sign(t: np.ndarray) -> np.ndarray:
    """Elementwise sign with ``sign(0) == 0`` and no magnitude threshold."""
    t = np.asarray(t, dtype=np.float64)
    check_finite(t, "sign input")
    out = np.zeros_like(t)
    out[t > 0] = 1.0
    out[t < 0] = -1.0
    return out


_OPS = {
    "add": np.add,
    "sub": np.subtract,
    "mul": np.multiply,
}


def elementwise(op: str, a, b) -> np.ndarray:
    """Apply ``add``, ``sub``, ``mul`` or ``scale`` elementwise.

    ``b`` must have the same shape as ``a`` or be a scalar; no other
    broadcasting is performed.
    """
    a = np.asarray(a, dtype=np.float64)
    with np.errstate(over="ignore", invalid="ignore"):  # reported by check_finite below
        out = _elementwise(op, a, b)
    return check_finite(out, f"{op} result")


def _elementwise(op, a, b):
    if op == "scale":
        if np.ndim(b) != 0:
            raise ShapeError("scale expects a scalar factor")
        out = a * float(b)
    elif op in _OPS:
        b = np.asarray(b, dtype=np.float64)
        if b.ndim != 0 and b.shape != a.shape:
            raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")
        out = _OPS[op](a, b)
    else:
        raise ValueError(f"unknown elementwise op {op!r}")
    return out


def add(a, b):
    return elementwise("add", a, b)


def sub(a, b):
    return elementwise("sub", a, b)


def mul(a, b):
    return elementwise("mul", a, b)


def scale(a, c):
    return elementwise("scale", a, c)


def matmul(a, b) -> np.ndarray:
    """Matrix product with a fixed ascending-index accumulation order.

    Each output entry is summed from 0.0 over the inner index in increasing
    order, so results are bit-reproducible and identical between the compiled
    and the numpy backend.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs rank-2 operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"inner extents differ: {a.shape} x {b.shape}")
    return check_finite(kernels.matmul(a, b), "matmul result")


def column_sum(t: np.ndarray) -> np.ndarray:
    """Sum over rows in ascending row order (used for bias gradients)."""
    return matmul(np.ones((1, t.shape[0])), t)[0]
