"""Numba toggle for the hot kernels.

Set ``DRIFTSFC_NO_NUMBA=1`` to run every kernel as plain Python over numpy
arrays. Both paths execute the same source, so results are bit-identical.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("DRIFTSFC_NO_NUMBA", "").strip().lower()

try:
    if _FLAG in ("1", "true", "yes", "on"):
        raise ImportError("numba disabled by DRIFTSFC_NO_NUMBA")
    from numba import njit as _njit

    USE_NUMBA = True
except ImportError:  # pragma: no cover - depends on environment
    _njit = None
    USE_NUMBA = False


def jit(fn):
    """Compile ``fn`` with numba when enabled, else return it unchanged."""
    if USE_NUMBA:
        return _njit(cache=True, nogil=True)(fn)
    return fn


def py_func(fn):
    """Return the uncompiled Python function behind a (possibly) jitted kernel."""
    return getattr(fn, "py_func", fn)
