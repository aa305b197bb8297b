"""The compiled and numpy backends must agree bit for bit."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from advaug import _pykernels, kernels

try:
    from advaug import _ckernels
except ImportError:  # extension not built
    _ckernels = None

needs_ext = pytest.mark.skipif(_ckernels is None, reason="compiled extension not built")


def test_backend_reported():
    assert kernels.BACKEND in ("cython", "python")
    if _ckernels is not None:
        assert kernels.BACKEND == "cython"


@needs_ext
@given(st.integers(1, 9), st.integers(1, 9), st.integers(1, 9), st.integers(0, 2**32 - 1))
def test_matmul_bit_identical(m, k, n, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((m, k)) * 10, rng.standard_normal((k, n))
    assert _ckernels.matmul(a, b).tobytes() == _pykernels.matmul(a, b).tobytes()


@needs_ext
@given(st.integers(1, 3), st.integers(1, 6), st.integers(1, 6), st.integers(1, 3), st.data())
def test_im2col_col2im_bit_identical(nb, h, w, ch, data):
    fh = data.draw(st.integers(1, h))
    fw = data.draw(st.integers(1, w))
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    x = rng.standard_normal((nb, h, w, ch))
    c1, c2 = _ckernels.im2col(x, fh, fw), _pykernels.im2col(x, fh, fw)
    assert c1.tobytes() == c2.tobytes()
    g = rng.standard_normal(c1.shape)
    assert _ckernels.col2im(g, nb, h, w, ch, fh, fw).tobytes() == _pykernels.col2im(g, nb, h, w, ch, fh, fw).tobytes()


def test_col2im_is_adjoint_of_im2col():
    rng = np.random.default_rng(1)
    x = rng.standard_normal((2, 5, 4, 3))
    cols = kernels.im2col(x, 2, 3)
    g = rng.standard_normal(cols.shape)
    lhs = np.sum(cols * g)
    rhs = np.sum(x * kernels.col2im(g, 2, 5, 4, 3, 2, 3))
    assert abs(lhs - rhs) < 1e-10


def test_im2col_layout():
    x = np.arange(2 * 3 * 3 * 1, dtype=float).reshape(2, 3, 3, 1)
    cols = kernels.im2col(x, 2, 2)
    assert cols.shape == (2 * 2 * 2, 4)
    assert cols[0].tolist() == [0.0, 1.0, 3.0, 4.0]


def test_pure_python_fallback_selected_by_env(tmp_path):
    import subprocess
    import sys

    code = "from advaug import kernels; print(kernels.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env={"ADVAUG_PURE_PYTHON": "1", "PATH": ""}, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
