"""Backend selection for the Gibbs sweep kernels.

The compiled extension is used when importable; setting ``PPMVAR_PURE_PYTHON=1``
forces the pure-Python fallback.  Both expose the same four functions and give
identical draws for identical seeds.
"""
import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("PPMVAR_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:
        pass


def get(backend=None):
    """Kernel module for ``backend`` ('cython', 'python' or None for the default)."""
    if backend is None:
        return _impl
    if backend == "python":
        return _pykernels
    if backend == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {backend!r}")


def available_backends():
    names = ["python"]
    try:
        from . import _ckernels  # noqa: F401

        names.insert(0, "cython")
    except ImportError:
        pass
    return names
