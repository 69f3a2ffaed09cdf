"""Dataset summaries: class counts, co-occurrence, size and point histograms."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coco import DatasetDoc, PolygonSegmentation

DEFAULT_BINS = 50
DEFAULT_MAX_POINTS = 1500


@dataclass
class CoOccurrenceMatrix:
    """Symmetric presence-pair counts with a forced-zero diagonal."""

    category_ids: list[int]
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        n = len(self.category_ids)
        if self.counts.shape != (n, n):
            raise ValueError("counts must be square over category_ids")

    def index_of(self, category_id: int) -> int:
        return self.category_ids.index(category_id)

    def count(self, a: int, b: int) -> int:
        return int(self.counts[self.index_of(a), self.index_of(b)])

    def to_json_dict(self) -> dict:
        return {
            "category_ids": list(self.category_ids),
            "counts": self.counts.tolist(),
        }


@dataclass
class Histogram:
    bin_edges: list[float]
    counts: list[int]

    def to_json_dict(self) -> dict:
        return {"bin_edges": self.bin_edges, "counts": self.counts}


@dataclass
class PointCountReport:
    histogram: Histogram
    excluded_count: int
    rle_skipped: int

    def to_json_dict(self) -> dict:
        return {
            "histogram": self.histogram.to_json_dict(),
            "excluded_count": self.excluded_count,
            "rle_skipped": self.rle_skipped,
        }


def _make_histogram(values: list[float], bins: int) -> Histogram:
    if not values:
        return Histogram(bin_edges=[0.0, 1.0], counts=[0])
    lo = float(min(values))
    hi = float(max(values))
    if lo == hi:
        edges = np.array([lo, lo + 1.0])
    else:
        edges = np.linspace(lo, hi, bins + 1)
    counts, edges = np.histogram(values, bins=edges)
    return Histogram(bin_edges=[float(e) for e in edges],
                     counts=[int(c) for c in counts])


def class_counts(doc: DatasetDoc) -> dict[int, int]:
    """Annotations per category; zero-annotation categories included."""
    out = {c.id: 0 for c in doc.categories}
    for ann in doc.annotations:
        out[ann.category_id] = out.get(ann.category_id, 0) + 1
    return out


def select_classes(doc: DatasetDoc, min_annotations: int) -> list[int]:
    """Categories with at least min_annotations, most-annotated first."""
    if min_annotations < 1:
        raise ValueError("min_annotations must be at least 1")
    counts = class_counts(doc)
    chosen = [cid for cid, n in counts.items() if n >= min_annotations]
    chosen.sort(key=lambda cid: (-counts[cid], cid))
    return chosen


def cooccurrence(doc: DatasetDoc) -> CoOccurrenceMatrix:
    """Count, per image, each unordered pair of distinct categories present."""
    ids = sorted(c.id for c in doc.categories)
    index = {cid: i for i, cid in enumerate(ids)}
    counts = np.zeros((len(ids), len(ids)), dtype=np.int64)

    present: dict[int, set[int]] = {}
    for ann in doc.annotations:
        present.setdefault(ann.image_id, set()).add(ann.category_id)
    for cats in present.values():
        ordered = sorted(cats)
        for i, a in enumerate(ordered):
            for b in ordered[i + 1 :]:
                counts[index[a], index[b]] += 1
                counts[index[b], index[a]] += 1
    return CoOccurrenceMatrix(category_ids=ids, counts=counts)


def filter_cooccurrence(m: CoOccurrenceMatrix, min_count: int) -> CoOccurrenceMatrix:
    """Keep categories with at least one off-diagonal entry above min_count."""
    keep = [
        i
        for i in range(len(m.category_ids))
        if int(m.counts[i].max(initial=0)) > min_count
    ]
    ids = [m.category_ids[i] for i in keep]
    sub = m.counts[np.ix_(keep, keep)] if keep else np.zeros((0, 0), dtype=np.int64)
    return CoOccurrenceMatrix(category_ids=ids, counts=sub)


def polygon_point_histogram(
    doc: DatasetDoc,
    max_points: int = DEFAULT_MAX_POINTS,
    bins: int = DEFAULT_BINS,
) -> PointCountReport:
    """Histogram of vertex counts per polygon, capped at max_points.

    Polygons above the cap are excluded and counted; RLE-only
    annotations contribute no polygons and are counted separately.
    """
    if max_points < 1:
        raise ValueError("max_points must be at least 1")
    values = []
    excluded = 0
    rle_skipped = 0
    for ann in doc.annotations:
        seg = ann.segmentation
        if not isinstance(seg, PolygonSegmentation):
            rle_skipped += 1
            continue
        for poly in seg.polygons:
            n = poly.vertex_count
            if n > max_points:
                excluded += 1
            else:
                values.append(float(n))
    return PointCountReport(
        histogram=_make_histogram(values, bins),
        excluded_count=excluded,
        rle_skipped=rle_skipped,
    )


def image_size_histogram(
    doc: DatasetDoc, bins: int = DEFAULT_BINS
) -> tuple[Histogram, Histogram]:
    widths = [float(im.width) for im in doc.images]
    heights = [float(im.height) for im in doc.images]
    return _make_histogram(widths, bins), _make_histogram(heights, bins)
