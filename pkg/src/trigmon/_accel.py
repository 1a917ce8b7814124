"""Numba dispatch.

Set ``TRIGMON_DISABLE_NUMBA=1`` to force the pure-numpy kernels. Numba is
also skipped silently when it cannot be imported.
"""
import os

_DISABLED = os.environ.get("TRIGMON_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    if _DISABLED:
        raise ImportError("disabled by TRIGMON_DISABLE_NUMBA")
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:
    _njit = None
    HAVE_NUMBA = False


def njit_or_none(func):
    """Compile ``func`` with numba if available, otherwise return None."""
    if not HAVE_NUMBA:
        return None
    return _njit(cache=True, nogil=True)(func)
