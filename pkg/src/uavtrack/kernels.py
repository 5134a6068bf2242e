"""Kernel backend selection.

The compiled extension ``uavtrack._core`` is used when it was built; the
numpy implementation in ``uavtrack._core_py`` is used otherwise, or when the
environment variable ``UAVTRACK_PURE_PYTHON`` is set to a non-empty value.
"""
import os

import numpy as np

from . import _core_py

if os.environ.get("UAVTRACK_PURE_PYTHON"):
    _impl = _core_py
    BACKEND = "python"
else:
    try:
        from . import _core as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _core_py
        BACKEND = "python"


def iou_matrix(a, b):
    """IoU between every box of ``a`` (N, 4) and ``b`` (M, 4), tlwh layout."""
    a = np.ascontiguousarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.ascontiguousarray(b, dtype=np.float64).reshape(-1, 4)
    return _impl.iou_matrix(a, b)


def lsa_potentials(cost):
    """Optimal assignment of a finite (rows <= cols) cost matrix plus duals."""
    return _impl.lsa_potentials(np.ascontiguousarray(cost, dtype=np.float64))
