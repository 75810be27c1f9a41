"""Line-of-sight kernels: compiled core with a pure-numpy fallback.

The compiled extension is selected at import time when available; set
``SKYLINK_PURE=1`` to force the fallback (used by the benchmark and tests).
"""

import os

from . import pure as _pure

_impl = _pure
_BACKEND = "pure"

if not os.environ.get("SKYLINK_PURE"):
    try:
        from . import _clos as _compiled

        _impl = _compiled
        _BACKEND = "compiled"
    except ImportError:
        pass


def backend() -> str:
    """Name of the active kernel backend: "compiled" or "pure"."""
    return _BACKEND


def segments_blocked(p0s, p1s, boxes):
    """Batch segment-vs-building test; see :func:`pure.segments_blocked`."""
    return _impl.segments_blocked(p0s, p1s, boxes)
