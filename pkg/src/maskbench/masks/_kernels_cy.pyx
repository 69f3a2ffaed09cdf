# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled mask kernels: RLE codec, run intersection, scanline rasterizer.

Must agree exactly with ``_kernels_py``; the rasterizer uses the same
float64 crossing arithmetic so results are bit-identical.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport ceil, floor

cnp.import_array()

BACKEND_NAME = "cython"


def encode(mask):
    arr = np.asarray(mask)
    if arr.dtype != np.uint8:
        arr = (arr != 0).astype(np.uint8)
    cdef const unsigned char[:, :] m = arr
    cdef Py_ssize_t h = m.shape[0]
    cdef Py_ssize_t w = m.shape[1]
    buf = np.empty(h * w + 2, dtype=np.int64)
    cdef cnp.int64_t[::1] out = buf
    cdef Py_ssize_t n = 0, r, c
    cdef cnp.int64_t run = 0
    cdef unsigned char cur = 0, v
    for c in range(w):
        for r in range(h):
            v = 1 if m[r, c] != 0 else 0
            if v == cur:
                run += 1
            else:
                out[n] = run
                n += 1
                cur = v
                run = 1
    out[n] = run
    n += 1
    return buf[:n].copy()


def decode(counts, Py_ssize_t height, Py_ssize_t width):
    cdef const cnp.int64_t[::1] cts = np.ascontiguousarray(counts, dtype=np.int64)
    flat = np.zeros(height * width, dtype=np.uint8)
    cdef unsigned char[::1] f = flat
    cdef Py_ssize_t i, j, pos = 0
    cdef unsigned char val = 0
    for i in range(cts.shape[0]):
        if val:
            for j in range(pos, pos + cts[i]):
                f[j] = 1
        pos += cts[i]
        val = 1 - val
    return flat.reshape((height, width), order="F")


def intersection_area(counts_a, counts_b):
    cdef const cnp.int64_t[::1] ca = np.ascontiguousarray(counts_a, dtype=np.int64)
    cdef const cnp.int64_t[::1] cb = np.ascontiguousarray(counts_b, dtype=np.int64)
    cdef Py_ssize_t na = ca.shape[0], nb = cb.shape[0]
    cdef Py_ssize_t ia = 1, ib = 1
    cdef cnp.int64_t sa, ea, sb, eb, lo, hi, total = 0
    cdef bint have_a = na >= 2, have_b = nb >= 2
    if have_a:
        sa = ca[0]
        ea = sa + ca[1]
    if have_b:
        sb = cb[0]
        eb = sb + cb[1]
    while have_a and have_b:
        lo = sa if sa > sb else sb
        hi = ea if ea < eb else eb
        if hi > lo:
            total += hi - lo
        if ea <= eb:
            if ia + 2 < na:
                sa = ea + ca[ia + 1]
                ea = sa + ca[ia + 2]
                ia += 2
            else:
                have_a = False
        else:
            if ib + 2 < nb:
                sb = eb + cb[ib + 1]
                eb = sb + cb[ib + 2]
                ib += 2
            else:
                have_b = False
    return int(total)


def rasterize(polygons, Py_ssize_t height, Py_ssize_t width):
    out = np.zeros((height, width), dtype=np.uint8)
    cdef unsigned char[:, ::1] o = out
    cdef const double[:, ::1] pts
    cdef double[::1] xs
    cdef Py_ssize_t n, i, j, k, m, r, r_first, r_last, c0, c1
    cdef double yc, x1, y1, x2, y2, y_lo, y_hi, key, v

    for poly in polygons:
        arr = np.ascontiguousarray(poly, dtype=np.float64)
        pts = arr
        n = pts.shape[0]
        if n == 0:
            continue
        y_lo = pts[0, 1]
        y_hi = pts[0, 1]
        for i in range(1, n):
            if pts[i, 1] < y_lo:
                y_lo = pts[i, 1]
            if pts[i, 1] > y_hi:
                y_hi = pts[i, 1]
        # clamp in double space before casting; coordinates may be extreme
        v = ceil(y_lo - 0.5)
        if v < 0.0:
            v = 0.0
        if v > height:
            v = height
        r_first = <Py_ssize_t>v
        v = floor(y_hi - 0.5)
        if v > height - 1:
            v = height - 1
        if v < -1.0:
            v = -1.0
        r_last = <Py_ssize_t>v
        xs_buf = np.empty(n, dtype=np.float64)
        xs = xs_buf
        for r in range(r_first, r_last + 1):
            yc = r + 0.5
            m = 0
            for i in range(n):
                x1 = pts[i, 0]
                y1 = pts[i, 1]
                j = i + 1
                if j == n:
                    j = 0
                x2 = pts[j, 0]
                y2 = pts[j, 1]
                if (y1 > yc) != (y2 > yc):
                    xs[m] = x1 + (yc - y1) / (y2 - y1) * (x2 - x1)
                    m += 1
            # insertion sort; crossing counts are tiny
            for i in range(1, m):
                key = xs[i]
                j = i - 1
                while j >= 0 and xs[j] > key:
                    xs[j + 1] = xs[j]
                    j -= 1
                xs[j + 1] = key
            for k in range(0, m - 1, 2):
                v = ceil(xs[k] - 0.5)
                if v < 0.0:
                    v = 0.0
                if v > width:
                    v = width
                c0 = <Py_ssize_t>v
                v = ceil(xs[k + 1] - 0.5) - 1.0
                if v > width - 1:
                    v = width - 1
                if v < -1.0:
                    v = -1.0
                c1 = <Py_ssize_t>v
                for j in range(c0, c1 + 1):
                    o[r, j] = 1
    return out
