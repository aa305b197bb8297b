"""Pure numpy versions of the compiled kernels in ``_ckernels.pyx``.

Each function reproduces the compiled loop's summation order exactly, so the
two backends give bit-identical results. Vectorisation runs over the axes
that are not being summed.
"""

import numpy as np


def matmul(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"inner extents differ: {a.shape[1]} vs {b.shape[0]}")
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.float64)
    for k in range(a.shape[1]):
        out += a[:, k : k + 1] * b[k : k + 1, :]
    return out


def im2col(x, fh, fw):
    nb, h, w, ch = x.shape
    ho, wo = h - fh + 1, w - fw + 1
    cols = np.empty((nb, ho, wo, fh, fw, ch), dtype=np.float64)
    for i in range(fh):
        for j in range(fw):
            cols[:, :, :, i, j, :] = x[:, i : i + ho, j : j + wo, :]
    return cols.reshape(nb * ho * wo, fh * fw * ch)


def col2im(cols, nb, h, w, ch, fh, fw):
    ho, wo = h - fh + 1, w - fw + 1
    view = np.asarray(cols, dtype=np.float64).reshape(nb, ho, wo, fh, fw, ch)
    dx = np.zeros((nb, h, w, ch), dtype=np.float64)
    for i in range(fh):
        for j in range(fw):
            dx[:, i : i + ho, j : j + wo, :] += view[:, :, :, i, j, :]
    return dx
