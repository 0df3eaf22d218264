"""Kernel backend selection.

``CUSPFLOW_BACKEND=numpy`` forces the vectorized numpy kernels; the default
is numba when it imports cleanly.
"""

import os

BACKEND_ENV = "CUSPFLOW_BACKEND"

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a hard dep in practice
    _numba = None


def requested_backend():
    value = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if value not in ("numba", "numpy"):
        raise ValueError(f"{BACKEND_ENV} must be 'numba' or 'numpy', got {value!r}")
    if value == "numba" and _numba is None:
        return "numpy"
    return value


def njit(*args, **kwargs):
    """``numba.njit`` with caching on, or a no-op when numba is missing."""
    kwargs.setdefault("cache", True)
    if _numba is None:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn
    return _numba.njit(*args, **kwargs)
