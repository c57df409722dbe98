"""Backend selection for the hot loops.

Every kernel in :mod:`alpharesolvent._loops` exists twice: an explicit-loop
version compiled with ``numba.njit`` and a vectorized pure-numpy version.
The numba path is used when numba imports and the environment variable
``ALPHARESOLVENT_DISABLE_NUMBA`` is unset or ``0``.
"""

import os

_flag = os.environ.get("ALPHARESOLVENT_DISABLE_NUMBA", "0").strip().lower()
_disabled = _flag not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba

    HAS_NUMBA = True
except ImportError:
    numba = None
    HAS_NUMBA = False


def njit(fn):
    """Compile ``fn`` with numba when available; otherwise return it unchanged.

    The returned object is only dispatched to when :data:`HAS_NUMBA` is true,
    so an uncompiled fallback is never used on a hot path.
    """
    if HAS_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def backend() -> str:
    return "numba" if HAS_NUMBA else "numpy"
