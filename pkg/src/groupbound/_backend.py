"""Kernel selection: compiled extension when importable, numpy fallback otherwise.

Set ``GROUPBOUND_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

kernels = _pykernels
BACKEND = "python"

if not os.environ.get("GROUPBOUND_PURE_PYTHON"):
    try:
        from . import _kernels as kernels  # noqa: F811
    except ImportError:
        kernels = _pykernels
    else:
        BACKEND = "cython"


def get_kernels(name=None):
    """Return the kernel module named ``"cython"`` or ``"python"`` (default: active)."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
