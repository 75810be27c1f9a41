# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled segment/box intersection kernel.

Same contract as ``skylink.kernels.pure.segments_blocked``; the slab test is
written with the identical comparison structure so both backends agree
bit-for-bit on the returned booleans.
"""

import numpy as np


cdef inline bint _blocked_one(const double* p0, const double* p1,
                              const double[:, ::1] boxes, Py_ssize_t m) noexcept nogil:
    cdef Py_ssize_t j, a
    cdef double lo, hi, d, ta, tb, tmp, t_enter, t_exit
    cdef double sx0, sx1, sy0, sy1, sz0
    cdef bint empty

    # Segment bounding intervals for the cheap reject tests.
    sx0 = p0[0] if p0[0] < p1[0] else p1[0]
    sx1 = p0[0] if p0[0] > p1[0] else p1[0]
    sy0 = p0[1] if p0[1] < p1[1] else p1[1]
    sy1 = p0[1] if p0[1] > p1[1] else p1[1]
    sz0 = p0[2] if p0[2] < p1[2] else p1[2]

    for j in range(m):
        if sx1 < boxes[j, 0] or sx0 > boxes[j, 1]:
            continue
        if sy1 < boxes[j, 2] or sy0 > boxes[j, 3]:
            continue
        if sz0 > boxes[j, 4]:
            continue

        t_enter = 0.0
        t_exit = 1.0
        empty = False
        for a in range(3):
            if a == 0:
                lo = boxes[j, 0]; hi = boxes[j, 1]
            elif a == 1:
                lo = boxes[j, 2]; hi = boxes[j, 3]
            else:
                lo = 0.0; hi = boxes[j, 4]
            d = p1[a] - p0[a]
            if d == 0.0:
                if p0[a] < lo or p0[a] > hi:
                    empty = True
                    break
            else:
                ta = (lo - p0[a]) / d
                tb = (hi - p0[a]) / d
                if ta > tb:
                    tmp = ta; ta = tb; tb = tmp
                if ta > t_enter:
                    t_enter = ta
                if tb < t_exit:
                    t_exit = tb
                if t_enter > t_exit:
                    empty = True
                    break
        if not empty:
            return True
    return False


def segments_blocked(p0s, p1s, boxes):
    """Compiled counterpart of :func:`skylink.kernels.pure.segments_blocked`."""
    cdef double[:, ::1] a = np.ascontiguousarray(np.atleast_2d(p0s), dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(np.atleast_2d(p1s), dtype=np.float64)
    cdef double[:, ::1] bx = np.ascontiguousarray(
        np.asarray(boxes, dtype=np.float64).reshape(-1, 5))
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = bx.shape[0]
    out = np.zeros(n, dtype=np.uint8)
    cdef unsigned char[::1] o = out
    cdef Py_ssize_t i
    if m > 0:
        with nogil:
            for i in range(n):
                o[i] = _blocked_one(&a[i, 0], &b[i, 0], bx, m)
    return out.astype(bool)
