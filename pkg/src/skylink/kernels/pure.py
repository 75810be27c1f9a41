"""Pure-numpy segment/box intersection kernel (fallback backend).

Semantics are shared with the compiled backend in ``_clos.pyx``: a segment is
"blocked" when it intersects the closed box anywhere on t in [0, 1].  Both
backends must return identical booleans for identical float64 inputs.
"""

import numpy as np


def segments_blocked(p0s, p1s, boxes):
    """Test N segments against M ground boxes.

    p0s, p1s : (N, 3) float64 segment endpoints in meters.
    boxes    : (M, 5) float64 rows (x0, x1, y0, y1, height); the z-slab of a
               box is [0, height].

    Returns a (N,) bool array, True where the segment hits any box.
    """
    p0s = np.atleast_2d(np.asarray(p0s, dtype=np.float64))
    p1s = np.atleast_2d(np.asarray(p1s, dtype=np.float64))
    boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 5)
    n = p0s.shape[0]
    if boxes.shape[0] == 0:
        return np.zeros(n, dtype=bool)

    lo = np.column_stack([boxes[:, 0], boxes[:, 2], np.zeros(boxes.shape[0])])
    hi = np.column_stack([boxes[:, 1], boxes[:, 3], boxes[:, 4]])

    out = np.zeros(n, dtype=bool)
    for i in range(n):
        out[i] = _blocked_one(p0s[i], p1s[i], lo, hi)
    return out


def _blocked_one(p0, p1, lo, hi):
    d = p1 - p0
    with np.errstate(divide="ignore", invalid="ignore"):
        ta = (lo - p0) / d
        tb = (hi - p0) / d
    tmin = np.minimum(ta, tb)
    tmax = np.maximum(ta, tb)

    # Axes with zero direction impose no t-constraint when the point lies
    # inside the slab, and an empty interval otherwise.
    zero = d == 0.0
    if zero.any():
        inside = (p0 >= lo) & (p0 <= hi)
        z = np.broadcast_to(zero, lo.shape)
        tmin = np.where(z, np.where(inside, -np.inf, np.inf), tmin)
        tmax = np.where(z, np.where(inside, np.inf, -np.inf), tmax)

    t_enter = np.maximum(tmin.max(axis=1), 0.0)
    t_exit = np.minimum(tmax.min(axis=1), 1.0)
    return bool((t_enter <= t_exit).any())
