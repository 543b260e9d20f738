"""Backend switch for the compiled kernels.

Set ``MDGESTURE_DISABLE_JIT=1`` to force the pure-numpy path. When numba is
not importable the numpy path is used regardless.
"""
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
DISABLE_JIT = os.environ.get("MDGESTURE_DISABLE_JIT", "0").lower() not in ("", "0", "false", "no")
USE_NUMBA = HAVE_NUMBA and not DISABLE_JIT


def njit(func):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)
