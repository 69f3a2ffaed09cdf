"""Pure numpy implementations of the hot mask kernels.

Fallback backend used when the compiled extension is unavailable.  Every
function here must agree exactly (bit-for-bit for rasterize) with its
counterpart in ``_kernels_cy.pyx``.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"


def encode(mask: np.ndarray) -> np.ndarray:
    """Column-major run lengths of ``mask`` (first run is background)."""
    flat = mask.ravel(order="F") != 0
    if flat.size == 0:
        return np.zeros(1, dtype=np.int64)
    # sentinel trick: boundaries of value changes give run lengths
    padded = np.concatenate(([np.int8(-1)], flat.view(np.int8), [np.int8(-1)]))
    borders = np.flatnonzero(np.diff(padded))
    counts = np.diff(borders).astype(np.int64)
    if flat[0]:
        counts = np.concatenate(([np.int64(0)], counts))
    return counts


def decode(counts: np.ndarray, height: int, width: int) -> np.ndarray:
    """Inverse of :func:`encode`; counts are assumed validated."""
    values = np.zeros(len(counts), dtype=np.uint8)
    values[1::2] = 1
    flat = np.repeat(values, counts)
    return flat.reshape((height, width), order="F")


def intersection_area(counts_a: np.ndarray, counts_b: np.ndarray) -> int:
    """Foreground overlap of two same-sized RLEs, in pixels."""
    values_a = np.zeros(len(counts_a), dtype=bool)
    values_a[1::2] = True
    values_b = np.zeros(len(counts_b), dtype=bool)
    values_b[1::2] = True
    flat_a = np.repeat(values_a, counts_a)
    flat_b = np.repeat(values_b, counts_b)
    return int(np.count_nonzero(flat_a & flat_b))


def rasterize(polygons: list[np.ndarray], height: int, width: int) -> np.ndarray:
    """Scanline fill at pixel centers, even-odd rule, union over polygons.

    A pixel (r, c) is foreground iff its center (c+0.5, r+0.5) has an odd
    number of polygon-edge crossings strictly to its right, for at least
    one polygon.
    """
    out = np.zeros((height, width), dtype=np.uint8)
    for pts in polygons:
        x1 = pts[:, 0]
        y1 = pts[:, 1]
        x2 = np.roll(x1, -1)
        y2 = np.roll(y1, -1)
        y_lo = float(pts[:, 1].min())
        y_hi = float(pts[:, 1].max())
        r_first = max(0, math.ceil(y_lo - 0.5))
        r_last = min(height - 1, math.floor(y_hi - 0.5))
        for r in range(r_first, r_last + 1):
            yc = r + 0.5
            hit = (y1 > yc) != (y2 > yc)
            if not hit.any():
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                xs = x1[hit] + (yc - y1[hit]) / (y2[hit] - y1[hit]) * (x2[hit] - x1[hit])
            xs = np.sort(xs)
            for i in range(0, len(xs) - 1, 2):
                c0 = max(0, math.ceil(xs[i] - 0.5))
                c1 = min(width - 1, math.ceil(xs[i + 1] - 0.5) - 1)
                if c0 <= c1:
                    out[r, c0 : c1 + 1] = 1
    return out
