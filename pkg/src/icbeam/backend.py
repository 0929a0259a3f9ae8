"""Kernel backend selection.

The hot numeric kernels in :mod:`icbeam._kernels` are JIT-compiled with
numba by default.  Setting ``ICBEAM_BACKEND=numpy`` in the environment
forces the pure-numpy reference path (the exact same source, just not
compiled), which is handy for debugging tracebacks and for measuring the
compiled speedup with ``benchmarks/backend_bench.py``.

The choice is made once at import time; flipping the variable afterwards
has no effect on an already-imported process.
"""

import os

_requested = os.environ.get("ICBEAM_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise RuntimeError(
        "ICBEAM_BACKEND must be 'numba' or 'numpy', got %r" % (_requested,)
    )

BACKEND = "numpy"
if _requested == "numba":
    try:
        import numba  # noqa: F401
        BACKEND = "numba"
    except ImportError:
        BACKEND = "numpy"

if BACKEND == "numba":
    from numba import njit

    def jit(fn):
        return njit(cache=True)(fn)

else:

    def jit(fn):
        return fn
