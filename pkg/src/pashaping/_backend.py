"""Kernel backend selection.

Hot loops are written twice: a scalar-loop version compiled with numba and a
vectorised numpy version. ``PASHAPING_DISABLE_NUMBA=1`` (or a missing numba
install) routes every dispatcher to the numpy path.
"""

from __future__ import annotations

import os

_DISABLE = os.environ.get("PASHAPING_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLE


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged."""
    if HAVE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
