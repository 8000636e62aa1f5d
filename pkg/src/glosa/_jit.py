"""Numba switch for the hot kernels.

Set ``GLOSA_NUMBA=0`` in the environment to run every kernel as plain
Python/numpy. Results are identical either way; only speed differs.
"""

import os

_FLAG = os.environ.get("GLOSA_NUMBA", "1").strip().lower()
ENABLED = _FLAG not in ("0", "false", "no", "off")

if ENABLED:
    try:
        from numba import njit as _numba_njit
    except ImportError:  # pragma: no cover - numba is a hard dependency
        ENABLED = False

if ENABLED:

    def njit(fn):
        return _numba_njit(cache=True, nogil=True)(fn)

else:

    def njit(fn):
        return fn


__all__ = ["ENABLED", "njit"]
