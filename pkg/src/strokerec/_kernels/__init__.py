"""Hot pixel kernels with a numba fast path and a pure-numpy fallback.

Set STROKEREC_NUMBA=0 (or "false"/"no"/"off") to force the numpy path.
Both paths implement identical contracts; `benchmarks/bench_kernels.py`
compares them.
"""

import os

from . import _numpy_impl

_flag = os.environ.get("STROKEREC_NUMBA", "auto").strip().lower()

USE_NUMBA = False
if _flag not in ("0", "false", "no", "off"):
    try:
        from . import _numba_impl
        USE_NUMBA = True
    except ImportError:
        USE_NUMBA = False

_impl = _numba_impl if USE_NUMBA else _numpy_impl

draw_polyline = _impl.draw_polyline
dilate_once = _impl.dilate_once
skeletonize_kernel = _impl.skeletonize_kernel
snap_kernel = _impl.snap_kernel

__all__ = [
    "USE_NUMBA",
    "draw_polyline",
    "dilate_once",
    "skeletonize_kernel",
    "snap_kernel",
]
