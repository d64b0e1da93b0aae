"""Numba switch for the hot kernels.

Set ``CONTSPEC_DISABLE_NUMBA=1`` before import to run every kernel as plain
Python/numpy. The compiled and interpreted paths execute the same source.
"""

import os

DISABLED = os.environ.get("CONTSPEC_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if DISABLED:
        raise ImportError
    from numba import njit as _njit
    from numba import prange

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised through the env flag
    HAVE_NUMBA = False
    prange = range


def jit(func=None, **kwargs):
    """``numba.njit(cache=True)`` when available, identity otherwise."""
    opts = {"cache": True}
    opts.update(kwargs)

    def wrap(f):
        if HAVE_NUMBA:
            return _njit(**opts)(f)
        return f

    if func is not None:
        return wrap(func)
    return wrap


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
