"""Backend selection for the inner-loop kernels.

The compiled extension is used when it imports; otherwise, or when
``MERAMSC_PURE_PYTHON=1`` is set, the numpy fallback is used. ``BACKEND``
names the active choice.
"""
import os

from . import _kernels_py

if os.environ.get("MERAMSC_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

kmeans_assign = _impl.kmeans_assign
kmeans_update = _impl.kmeans_update
l21_shrink = _impl.l21_shrink
contingency = _impl.contingency

__all__ = ["BACKEND", "kmeans_assign", "kmeans_update", "l21_shrink", "contingency"]
