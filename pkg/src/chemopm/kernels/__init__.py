"""Stencil kernel backend selection.

The compiled Cython core is preferred; a NumPy implementation with
identical semantics is the fallback.  Set ``CHEMOPM_KERNELS=numpy`` to
force the fallback (used by the backend-equivalence tests and the
benchmark).
"""

import os

from . import _numpy_backend

_forced = os.environ.get("CHEMOPM_KERNELS", "").lower()

if _forced in ("numpy", "python"):
    _impl = _numpy_backend
else:
    try:
        from . import _stencil as _impl
    except ImportError:
        _impl = _numpy_backend

BACKEND = _impl.BACKEND_NAME

div_d_grad = _impl.div_d_grad
laplacian = _impl.laplacian
upwind_div = _impl.upwind_div


def available_backends():
    """Names of the importable backends (for benchmarks and tests)."""
    names = ["numpy"]
    try:
        from . import _stencil  # noqa: F401
        names.append("cython")
    except ImportError:
        pass
    return names


def get_backend(name):
    if name == "numpy":
        return _numpy_backend
    if name == "cython":
        from . import _stencil
        return _stencil
    raise ValueError(f"unknown kernel backend: {name!r}")
