"""Backend selection for the hot loops.

The compiled extension is used when it imports; set ``CHDDP_PURE_PYTHON=1`` to
force the pure-Python fallback. Callers go through the module-level names
below and pass contiguous float64 / int64 arrays.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("CHDDP_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # extension not built
        _compiled = None
    if _compiled is not None:
        _impl = _compiled
        BACKEND = "cython"

wrap = _impl.wrap
propagate_box = _impl.propagate_box
propagate_dubins = _impl.propagate_dubins
nearest_weighted = _impl.nearest_weighted
any_point_in_polygons = _impl.any_point_in_polygons
first_region = _impl.first_region


def pack_polygons(polys):
    """Stack polygon halfspaces into ``(A, b, starts)`` for the kernels.

    ``polys`` is an iterable of objects with ``A`` (k, 2) and ``b`` (k,).
    """
    As, bs, starts = [], [], [0]
    for p in polys:
        As.append(np.asarray(p.A, dtype=np.float64))
        bs.append(np.asarray(p.b, dtype=np.float64))
        starts.append(starts[-1] + len(bs[-1]))
    if As:
        A = np.ascontiguousarray(np.vstack(As))
        b = np.ascontiguousarray(np.concatenate(bs))
    else:
        A = np.zeros((0, 2))
        b = np.zeros(0)
    return A, b, np.asarray(starts, dtype=np.int64)


def get_backend(name=None):
    """Return the kernel module named ``"python"`` or ``"cython"`` (default: active one)."""
    if name is None:
        return _impl
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
