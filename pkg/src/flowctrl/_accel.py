"""Optional numba acceleration for the hot numeric kernels.

The simplex pivot loop dominates runtime for everything in this package
(controllers re-solve LPs online, experiments run thousands of solves), so
it is compiled with numba when available.  A pure-numpy path is kept for
environments without numba and for debugging; both paths execute the exact
same source.

Selection is controlled by the ``FLOWCTRL_NUMBA`` environment variable,
read once at import time:

* unset or ``auto`` -- use numba if importable, else fall back to numpy;
* ``0`` / ``off`` / ``false`` -- force the pure-numpy path;
* ``1`` / ``on`` / ``true`` -- require numba (ImportError if missing).

``benchmarks/bench_backend.py`` compares the two paths.
"""

from __future__ import annotations

import os

_FLAG = os.environ.get("FLOWCTRL_NUMBA", "auto").strip().lower()

if _FLAG in ("0", "off", "false", "no"):
    NUMBA_ENABLED = False
else:
    try:
        import numba  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        if _FLAG in ("1", "on", "true", "yes"):
            raise ImportError(
                "FLOWCTRL_NUMBA=%s requires numba, which is not installed" % _FLAG
            )
        NUMBA_ENABLED = False

BACKEND = "numba" if NUMBA_ENABLED else "numpy"


def maybe_njit(func=None, **kwargs):
    """Apply ``numba.njit`` when the numba backend is active, else no-op.

    Usable bare (``@maybe_njit``) or with options
    (``@maybe_njit(cache=True)``).
    """

    def wrap(f):
        if NUMBA_ENABLED:
            from numba import njit

            return njit(**kwargs)(f)
        return f

    if func is not None:
        return wrap(func)
    return wrap
