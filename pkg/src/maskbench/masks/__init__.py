"""Binary-mask geometry: RLE codec, rasterization, IoU, areas, boxes.

Masks are 2D uint8 numpy arrays (row, col); any nonzero pixel is
foreground.  The run-length form scans pixels column-major and always
starts with a (possibly zero-length) background run, so masks interoperate
with COCO-style dataset and results files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from ..errors import (
    DegeneratePolygonError,
    EmptyMaskError,
    MalformedRunsError,
    MalformedStringError,
    ShapeMismatchError,
    SumMismatchError,
)
from ._backend import backend_name, kernels
from ._rle_string import compress_counts, decompress_counts

__all__ = [
    "Box",
    "Polygon",
    "RleMask",
    "backend_name",
    "bbox_from_mask",
    "bbox_iou",
    "mask_area",
    "mask_iou",
    "rasterize",
    "rle_area",
    "rle_bbox",
    "rle_decode",
    "rle_encode",
    "rle_from_string",
    "rle_intersection_area",
    "rle_iou",
    "rle_to_string",
]


class Box(NamedTuple):
    """Axis-aligned box, [x, y, width, height], top-left origin."""

    x: float
    y: float
    w: float
    h: float


@dataclass(frozen=True, eq=False)
class Polygon:
    """Closed polygon in continuous image coordinates (sub-pixel allowed)."""

    points: np.ndarray  # (N, 2) float64, columns are x, y

    @classmethod
    def from_flat(cls, flat: Sequence[float]) -> "Polygon":
        arr = np.asarray(flat, dtype=np.float64).reshape(-1, 2)
        return cls(arr)

    @property
    def vertex_count(self) -> int:
        return int(self.points.shape[0])

    def flatten(self) -> list[float]:
        return [float(v) for v in self.points.reshape(-1)]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polygon):
            return NotImplemented
        return self.points.shape == other.points.shape and bool(
            np.array_equal(self.points, other.points)
        )


@dataclass(frozen=True)
class RleMask:
    """Column-major run-length mask; runs alternate starting on background."""

    height: int
    width: int
    counts: tuple[int, ...]

    @classmethod
    def from_counts(cls, height: int, width: int, counts: Sequence[int]) -> "RleMask":
        """Build from possibly non-canonical runs (zero runs are merged)."""
        return cls(height, width, canonical_counts(counts))

    def validate(self) -> None:
        total = 0
        last = len(self.counts) - 1
        for i, c in enumerate(self.counts):
            if c < 0:
                raise MalformedRunsError(f"negative run {c} at index {i}")
            if c == 0 and 0 < i:
                raise MalformedRunsError(f"zero run at interior index {i}")
            total += c
        if total != self.height * self.width:
            raise SumMismatchError(
                f"runs sum to {total}, expected {self.height}x{self.width}"
                f" = {self.height * self.width}"
            )


def canonical_counts(counts: Sequence[int]) -> tuple[int, ...]:
    """Merge zero runs and enforce the background-first convention."""
    merged: list[list[int]] = []  # [value, length]
    val = 0
    for c in counts:
        c = int(c)
        if c < 0:
            raise MalformedRunsError(f"negative run {c}")
        if c > 0:
            if merged and merged[-1][0] == val:
                merged[-1][1] += c
            else:
                merged.append([val, c])
        val ^= 1
    out = [length for _, length in merged]
    if merged and merged[0][0] == 1:
        out.insert(0, 0)
    return tuple(out)


def _as_mask(mask) -> np.ndarray:
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise ShapeMismatchError(f"mask must be 2D, got shape {arr.shape}")
    if arr.dtype != np.uint8:
        arr = (arr != 0).astype(np.uint8)
    return arr


# --- codec -------------------------------------------------------------


def rle_encode(mask) -> RleMask:
    arr = _as_mask(mask)
    counts = kernels.encode(arr)
    return RleMask(arr.shape[0], arr.shape[1], tuple(int(c) for c in counts))


def rle_decode(rle: RleMask) -> np.ndarray:
    rle.validate()
    return kernels.decode(
        np.asarray(rle.counts, dtype=np.int64), rle.height, rle.width
    )


def rle_to_string(rle: RleMask) -> str:
    return compress_counts(rle.counts)


def rle_from_string(s: str, height: int, width: int) -> RleMask:
    counts = decompress_counts(s)
    total = 0
    for c in counts:
        if c < 0:
            raise MalformedStringError(f"decoded a negative run length ({c})")
        total += c
    if total != height * width:
        raise MalformedStringError(
            f"decoded runs sum to {total}, expected {height * width}"
        )
    return RleMask.from_counts(height, width, counts)


# --- geometry ----------------------------------------------------------


def rasterize(polygons: Sequence[Polygon], height: int, width: int) -> np.ndarray:
    """Union of the polygons sampled at pixel centers (even-odd rule)."""
    arrays = []
    for poly in polygons:
        if poly.vertex_count < 3:
            raise DegeneratePolygonError(
                f"polygon has {poly.vertex_count} vertices, need at least 3"
            )
        arrays.append(np.ascontiguousarray(poly.points, dtype=np.float64))
    return kernels.rasterize(arrays, height, width)


def mask_area(mask) -> int:
    return int(np.count_nonzero(_as_mask(mask)))


def mask_iou(a, b) -> float:
    ma, mb = _as_mask(a), _as_mask(b)
    if ma.shape != mb.shape:
        raise ShapeMismatchError(f"mask shapes differ: {ma.shape} vs {mb.shape}")
    fa = ma != 0
    fb = mb != 0
    inter = int(np.count_nonzero(fa & fb))
    union = int(np.count_nonzero(fa | fb))
    if union == 0:
        return 0.0
    return inter / union


def bbox_from_mask(mask) -> Box:
    arr = _as_mask(mask)
    rows = np.flatnonzero(arr.any(axis=1))
    if rows.size == 0:
        raise EmptyMaskError("mask has no foreground pixels")
    cols = np.flatnonzero(arr.any(axis=0))
    min_row, max_row = int(rows[0]), int(rows[-1])
    min_col, max_col = int(cols[0]), int(cols[-1])
    return Box(
        float(min_col),
        float(min_row),
        float(max_col - min_col + 1),
        float(max_row - min_row + 1),
    )


def bbox_iou(a: Box, b: Box) -> float:
    ix1 = max(a.x, b.x)
    iy1 = max(a.y, b.y)
    ix2 = min(a.x + a.w, b.x + b.w)
    iy2 = min(a.y + a.h, b.y + b.h)
    inter = max(0.0, ix2 - ix1) * max(0.0, iy2 - iy1)
    union = a.w * a.h + b.w * b.h - inter
    if union <= 0.0:
        return 0.0
    return inter / union


# --- RLE-domain shortcuts (no pixel grid materialized) -------------------


def rle_area(rle: RleMask) -> int:
    return int(sum(rle.counts[1::2]))


def rle_intersection_area(a: RleMask, b: RleMask) -> int:
    if (a.height, a.width) != (b.height, b.width):
        raise ShapeMismatchError(
            f"RLE sizes differ: {(a.height, a.width)} vs {(b.height, b.width)}"
        )
    return int(
        kernels.intersection_area(
            np.asarray(a.counts, dtype=np.int64),
            np.asarray(b.counts, dtype=np.int64),
        )
    )


def rle_iou(a: RleMask, b: RleMask) -> float:
    inter = rle_intersection_area(a, b)
    union = rle_area(a) + rle_area(b) - inter
    if union == 0:
        return 0.0
    return inter / union


def rle_bbox(rle: RleMask) -> Box:
    """Tight box around the foreground runs, without decoding the grid."""
    h = rle.height
    pos = 0
    min_row = h
    max_row = -1
    min_col = None
    max_col = -1
    for i, c in enumerate(rle.counts):
        if i % 2 == 1 and c > 0:
            start, end = pos, pos + c - 1  # inclusive scan indices
            c0, c1 = start // h, end // h
            if min_col is None:
                min_col = c0
            max_col = c1
            if c1 > c0:
                min_row, max_row = 0, h - 1
            else:
                min_row = min(min_row, start % h)
                max_row = max(max_row, end % h)
        pos += c
    if min_col is None:
        raise EmptyMaskError("RLE mask has no foreground runs")
    return Box(
        float(min_col),
        float(min_row),
        float(max_col - min_col + 1),
        float(max_row - min_row + 1),
    )


def polygon_window(polygons: Sequence[Polygon]) -> tuple[int, int, int, int]:
    """Smallest (row0, col0, height, width) pixel window whose centers can
    fall inside the polygons.  Row/col offsets may be negative for shapes
    that extend past the origin."""
    xs = np.concatenate([p.points[:, 0] for p in polygons])
    ys = np.concatenate([p.points[:, 1] for p in polygons])
    r0 = math.ceil(float(ys.min()) - 0.5)
    r1 = math.floor(float(ys.max()) - 0.5)
    c0 = math.ceil(float(xs.min()) - 0.5)
    c1 = math.floor(float(xs.max()) - 0.5)
    return r0, c0, max(0, r1 - r0 + 1), max(0, c1 - c0 + 1)


def rasterize_window(polygons: Sequence[Polygon]) -> tuple[np.ndarray, int, int]:
    """Rasterize polygons on their own minimal grid.

    Returns (mask, row0, col0); pixel (r, c) of the mask corresponds to
    image pixel (r + row0, c + col0).  Useful for area computations when
    the enclosing image dimensions are unknown.
    """
    r0, c0, h, w = polygon_window(polygons)
    if h == 0 or w == 0:
        return np.zeros((h, w), dtype=np.uint8), r0, c0
    offset = np.array([c0, r0], dtype=np.float64)
    shifted = [Polygon(p.points - offset) for p in polygons]
    return rasterize(shifted, h, w), r0, c0
