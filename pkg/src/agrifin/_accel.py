"""Backend selection for the hot clearing kernels.

Set ``AGRIFIN_DISABLE_NUMBA=1`` (or ``AGRIFIN_BACKEND=numpy``) before import to
force the vectorised numpy path. Numba is used otherwise, when importable.
"""

import os

_TRUTHY = {"1", "true", "yes", "on"}


def _numba_requested() -> bool:
    if os.environ.get("AGRIFIN_DISABLE_NUMBA", "").strip().lower() in _TRUTHY:
        return False
    return os.environ.get("AGRIFIN_BACKEND", "numba").strip().lower() != "numpy"


try:
    if not _numba_requested():
        raise ImportError("numba disabled by environment")
    from numba import njit as _numba_njit

    HAS_NUMBA = True
except ImportError:
    _numba_njit = None
    HAS_NUMBA = False

BACKEND = "numba" if HAS_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if HAS_NUMBA:
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]

    def wrap(fn):
        return fn

    return wrap
