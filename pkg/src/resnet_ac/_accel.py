"""Selects between numba-compiled kernels and the plain numpy path.

Set ``RESNET_AC_NUMBA=0`` before import to run every kernel as ordinary
Python/numpy code. The kernel sources are identical in both modes.
"""

import os

_FLAG = os.environ.get("RESNET_AC_NUMBA", "1").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("0", "false", "no", "off")


def kernel(fn):
    """Compile ``fn`` with ``njit`` when acceleration is enabled."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
