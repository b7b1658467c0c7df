"""Optional numba compilation for the numeric kernels.

Set ``FRL_DISABLE_NUMBA=1`` to run every kernel as plain Python on numpy
arrays. The flag is read once, at import time.
"""

import os

DISABLED = os.environ.get("FRL_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

ENABLED = numba is not None and not DISABLED


def njit(fn):
    """Compile ``fn`` with numba when enabled, else return it untouched.

    The uncompiled function stays reachable as ``fn.py_func`` either way, so
    tests and benchmarks can exercise both paths in one process.
    """
    if not ENABLED:
        fn.py_func = fn
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
