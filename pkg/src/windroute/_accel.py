"""Numba switch.

Set ``WINDROUTE_NUMBA=0`` to run every kernel on the plain numpy/Python path.
"""
import os

_FLAG = os.environ.get("WINDROUTE_NUMBA", "1").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and _FLAG not in ("0", "false", "off", "no")


def njit(fn):
    """Compile ``fn`` with numba when it is importable, else return it untouched."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True)(fn)
