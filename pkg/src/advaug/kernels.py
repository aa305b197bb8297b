"""Backend selection for the hot loops.

The compiled extension ``advaug._ckernels`` is used when it was built;
otherwise the numpy fallback is imported. Setting ``ADVAUG_PURE_PYTHON=1``
forces the fallback. Both backends are bit-identical by construction.
"""

import os

from . import _pykernels

if os.environ.get("ADVAUG_PURE_PYTHON", "") not in ("", "0"):
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:  # extension not built
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

matmul = _impl.matmul
im2col = _impl.im2col
col2im = _impl.col2im

__all__ = ["BACKEND", "matmul", "im2col", "col2im"]
