"""Select the event-loop implementation at import.

The compiled core is used when it imports, unless ``BOLTZLAB_PURE_PYTHON``
is set to a non-empty value other than ``0``.
"""

import os

from . import _pykernel

_force_pure = os.environ.get("BOLTZLAB_PURE_PYTHON", "") not in ("", "0")

try:
    if _force_pure:
        raise ImportError("pure Python forced by BOLTZLAB_PURE_PYTHON")
    from . import _ckernel as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _pykernel
    BACKEND = "python"

fictive_events = _impl.fictive_events
real_events = _impl.real_events

IMPLEMENTATIONS = {"python": _pykernel}
if BACKEND == "cython":
    IMPLEMENTATIONS["cython"] = _impl
