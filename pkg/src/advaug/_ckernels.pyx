# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops. Must stay bit-identical to ``_pykernels``.

Every output element is accumulated from 0.0 in ascending index order; the
extension is built with ``-ffp-contract=off`` so no fused multiply-add
changes the rounding.
"""

import numpy as np


def matmul(const double[:, :] a, const double[:, :] b):
    cdef Py_ssize_t n = a.shape[0], kk = a.shape[1], m = b.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double aik
    if b.shape[0] != kk:
        raise ValueError(f"inner extents differ: {kk} vs {b.shape[0]}")
    out = np.zeros((n, m), dtype=np.float64)
    cdef double[:, ::1] c = out
    # i-k-j order keeps the per-element sum in ascending k
    for i in range(n):
        for k in range(kk):
            aik = a[i, k]
            for j in range(m):
                c[i, j] += aik * b[k, j]
    return out


def im2col(const double[:, :, :, :] x, int fh, int fw):
    cdef Py_ssize_t nb = x.shape[0], h = x.shape[1], w = x.shape[2], ch = x.shape[3]
    cdef Py_ssize_t ho = h - fh + 1, wo = w - fw + 1
    cdef Py_ssize_t n, r, s, i, j, c, row, col
    out = np.empty((nb * ho * wo, fh * fw * ch), dtype=np.float64)
    cdef double[:, ::1] cols = out
    for n in range(nb):
        for r in range(ho):
            for s in range(wo):
                row = (n * ho + r) * wo + s
                col = 0
                for i in range(fh):
                    for j in range(fw):
                        for c in range(ch):
                            cols[row, col] = x[n, r + i, s + j, c]
                            col += 1
    return out


def col2im(const double[:, :] cols, int nb, int h, int w, int ch, int fh, int fw):
    cdef Py_ssize_t ho = h - fh + 1, wo = w - fw + 1
    cdef Py_ssize_t n, r, s, i, j, c, row, base
    out = np.zeros((nb, h, w, ch), dtype=np.float64)
    cdef double[:, :, :, ::1] dx = out
    # filter offset outermost: each input cell sums its contributions in
    # ascending (i, j) order, matching the vectorised fallback
    for i in range(fh):
        for j in range(fw):
            base = (i * fw + j) * ch
            for n in range(nb):
                for r in range(ho):
                    for s in range(wo):
                        row = (n * ho + r) * wo + s
                        for c in range(ch):
                            dx[n, r + i, s + j, c] += cols[row, base + c]
    return out
