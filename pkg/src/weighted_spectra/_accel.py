"""Backend selection for the compiled kernels.

Set ``WSPEC_NO_NUMBA=1`` to force the pure-numpy path. When numba is not
importable the numpy path is used regardless.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and os.environ.get("WSPEC_NO_NUMBA", "").strip().lower() in ("", "0", "false", "no")


def njit(func):
    """``numba.njit(cache=True, error_model="numpy")`` when numba is available, else identity."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, error_model="numpy")(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
