"""Numba acceleration switch.

Hot kernels in :mod:`pamkit.kernels` are compiled with numba when it is
importable. Set ``PAMKIT_NUMBA=0`` to force the pure-numpy fallbacks,
``PAMKIT_NUMBA=1`` to require numba (ImportError if missing). Anything
else, or unset, means "use numba if available".
"""

import os

_flag = os.environ.get("PAMKIT_NUMBA", "auto").strip().lower()

if _flag in ("0", "off", "false", "no"):
    NUMBA_ENABLED = False
    njit = None
elif _flag in ("1", "on", "true", "yes"):
    from numba import njit  # noqa: F401  hard requirement here

    NUMBA_ENABLED = True
else:
    try:
        from numba import njit  # noqa: F401

        NUMBA_ENABLED = True
    except ImportError:
        NUMBA_ENABLED = False
        njit = None
