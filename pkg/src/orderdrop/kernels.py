"""Hot-loop kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it imports; otherwise the numpy
versions are. Set ``ORDERDROP_KERNELS=python`` to force the fallback.
"""

import os

import numpy as np

from . import _kernels_py

_impl = _kernels_py
BACKEND = "python"

if os.environ.get("ORDERDROP_KERNELS", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def use_backend(name):
    """Switch kernel backend at runtime ('cython' or 'python'). Returns the previous name."""
    global _impl, BACKEND
    prev = BACKEND
    if name == "python":
        _impl, BACKEND = _kernels_py, "python"
    elif name == "cython":
        from . import _kernels as _compiled
        _impl, BACKEND = _compiled, "cython"
    else:
        raise ValueError(f"unknown kernel backend {name!r}")
    return prev


def compiled_available():
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True


def im2col(x, kh, kw):
    return _impl.im2col(np.ascontiguousarray(x, dtype=np.float64), kh, kw)


def col2im(cols, shape, kh, kw):
    return _impl.col2im(np.ascontiguousarray(cols, dtype=np.float64), tuple(shape), kh, kw)


def maxpool_forward(x, k):
    return _impl.maxpool_forward(np.ascontiguousarray(x, dtype=np.float64), k)


def maxpool_backward(dout, arg, k, shape):
    return _impl.maxpool_backward(
        np.ascontiguousarray(dout, dtype=np.float64), np.ascontiguousarray(arg, dtype=np.intp), k, tuple(shape)
    )
