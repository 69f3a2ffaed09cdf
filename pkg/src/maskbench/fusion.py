"""Detection merging across models or augmentation passes.

Detections are grouped per image by category and overlapping-box
chains, each group is reduced to its highest-weight member (weight =
mask area times score), and the survivor takes the aggregated group
score.  Two experimental post-filters, containment merging and
co-occurrence filtering, are included; both are off by default in the
CLI pipelines since they did not help in practice.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import masks
from .coco import DetectionRecord, PolygonSegmentation, RleSegmentation
from .errors import EmptyMaskError, MissingBboxError, UnknownCategoryError

_SCORE_AGGS = ("max", "mean")
_IOU_DOMAINS = ("bbox", "mask")
_AREA_SOURCES = ("mask", "bbox")


@dataclass(frozen=True)
class FusionConfig:
    group_iou: float = 0.5
    score_aggregation: str = "max"
    # None resolves per call: 1.0 with a single source, 0.5 with several
    singleton_factor: float | None = None
    iou_domain: str = "bbox"
    area_source: str = "mask"

    def __post_init__(self):
        if not 0.0 < self.group_iou <= 1.0:
            raise ValueError(f"group_iou {self.group_iou} outside (0, 1]")
        if self.score_aggregation not in _SCORE_AGGS:
            raise ValueError(f"score_aggregation must be one of {_SCORE_AGGS}")
        if self.singleton_factor is not None and not 0.0 <= self.singleton_factor <= 1.0:
            raise ValueError(f"singleton_factor {self.singleton_factor} outside [0, 1]")
        if self.iou_domain not in _IOU_DOMAINS:
            raise ValueError(f"iou_domain must be one of {_IOU_DOMAINS}")
        if self.area_source not in _AREA_SOURCES:
            raise ValueError(f"area_source must be one of {_AREA_SOURCES}")


@dataclass(frozen=True)
class SourcedDetection:
    detection: DetectionRecord
    source_id: int


@dataclass
class DetectionGroup:
    members: list[SourcedDetection]


def _require_bbox(det: DetectionRecord) -> masks.Box:
    if det.bbox is None:
        raise MissingBboxError(
            "detection lacks a bbox; run the bbox repair pass before fusing"
        )
    return det.bbox


def _window_mask(seg: PolygonSegmentation) -> tuple[np.ndarray, int, int]:
    polys = [p for p in seg.polygons if p.vertex_count >= 3]
    if not polys:
        raise EmptyMaskError("segmentation has no usable polygons")
    return masks.rasterize_window(polys)


def detection_mask(
    det: DetectionRecord, image_size: tuple[int, int] | None
) -> tuple[np.ndarray, int, int]:
    """Foreground of a detection as (mask, row0, col0).

    RLE detections decode at their own size; polygon detections
    rasterize at the image size when known, else on their minimal
    integer-aligned window.
    """
    seg = det.segmentation
    if seg is None:
        raise EmptyMaskError("detection carries no segmentation")
    if isinstance(seg, RleSegmentation):
        return masks.rle_decode(seg.rle), 0, 0
    if image_size is not None:
        h, w = image_size
        return seg.to_mask(h, w), 0, 0
    mask, r0, c0 = _window_mask(seg)
    return mask, r0, c0


def detection_mask_area(
    det: DetectionRecord, image_size: tuple[int, int] | None = None
) -> int:
    seg = det.segmentation
    if isinstance(seg, RleSegmentation):
        return masks.rle_area(seg.rle)
    mask, _, _ = detection_mask(det, image_size)
    return masks.mask_area(mask)


def detection_mask_iou(
    a: DetectionRecord, b: DetectionRecord, image_size: tuple[int, int] | None = None
) -> float:
    """Mask IoU between two detections, tolerating mixed segmentation forms."""
    sa, sb = a.segmentation, b.segmentation
    if isinstance(sa, RleSegmentation) and isinstance(sb, RleSegmentation):
        return masks.rle_iou(sa.rle, sb.rle)
    if isinstance(sa, RleSegmentation) or isinstance(sb, RleSegmentation):
        rle = sa.rle if isinstance(sa, RleSegmentation) else sb.rle
        size = (rle.height, rle.width)
        ma, _, _ = detection_mask(a, size)
        mb, _, _ = detection_mask(b, size)
        return masks.mask_iou(ma, mb)
    if image_size is not None:
        ma, _, _ = detection_mask(a, image_size)
        mb, _, _ = detection_mask(b, image_size)
        return masks.mask_iou(ma, mb)
    # no dimensions anywhere: rasterize both on their joint window
    ma, ra, ca = detection_mask(a, None)
    mb, rb, cb = detection_mask(b, None)
    r0 = min(ra, rb)
    c0 = min(ca, cb)
    h = max(ra + ma.shape[0], rb + mb.shape[0]) - r0
    w = max(ca + ma.shape[1], cb + mb.shape[1]) - c0
    fa = np.zeros((h, w), dtype=np.uint8)
    fb = np.zeros((h, w), dtype=np.uint8)
    fa[ra - r0 : ra - r0 + ma.shape[0], ca - c0 : ca - c0 + ma.shape[1]] = ma
    fb[rb - r0 : rb - r0 + mb.shape[0], cb - c0 : cb - c0 + mb.shape[1]] = mb
    return masks.mask_iou(fa, fb)


def _pair_linked(
    a: SourcedDetection,
    b: SourcedDetection,
    cfg: FusionConfig,
    image_size: tuple[int, int] | None,
) -> bool:
    if cfg.iou_domain == "bbox":
        iou = masks.bbox_iou(_require_bbox(a.detection), _require_bbox(b.detection))
    else:
        iou = detection_mask_iou(a.detection, b.detection, image_size)
    return iou > cfg.group_iou


def group_detections(
    dets: list[SourcedDetection],
    cfg: FusionConfig | None = None,
    image_size: tuple[int, int] | None = None,
) -> list[DetectionGroup]:
    """Partition one image's detections into overlap components.

    Two detections land in the same group iff they share a category and
    are connected by a chain of pairwise IoU > group_iou links.
    """
    cfg = cfg or FusionConfig()
    if cfg.iou_domain == "bbox":
        for d in dets:
            _require_bbox(d.detection)
    n = len(dets)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i: int, j: int) -> None:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri

    for i in range(n):
        for j in range(i + 1, n):
            if dets[i].detection.category_id != dets[j].detection.category_id:
                continue
            if find(i) == find(j):
                continue
            if _pair_linked(dets[i], dets[j], cfg, image_size):
                union(i, j)

    components: dict[int, list[SourcedDetection]] = {}
    for i in range(n):
        components.setdefault(find(i), []).append(dets[i])
    # order groups by first member's input position
    roots = sorted(components, key=lambda r: min(i for i in range(n) if find(i) == r))
    return [DetectionGroup(components[r]) for r in roots]


def _member_weight(
    sd: SourcedDetection, cfg: FusionConfig, image_size: tuple[int, int] | None
) -> float:
    if cfg.area_source == "bbox":
        box = _require_bbox(sd.detection)
        area = box.w * box.h
    else:
        area = detection_mask_area(sd.detection, image_size)
        if area == 0:
            raise EmptyMaskError("detection mask rasterizes to zero pixels")
    return area * sd.detection.score


def _output_sort_key(det: DetectionRecord):
    seg = det.segmentation.content_key() if det.segmentation is not None else ("none",)
    return (det.image_id, det.category_id, -det.score, seg)


def fuse(
    det_sets: list[tuple[int, list[DetectionRecord]]],
    cfg: FusionConfig | None = None,
    image_sizes: dict[int, tuple[int, int]] | None = None,
) -> list[DetectionRecord]:
    """Merge detection sets from several sources into one set.

    Per image and group, the member with the largest mask_area * score
    weight survives (ties: higher score, lower source_id, input order)
    and takes the aggregated group score; singleton groups keep their
    member with score scaled by singleton_factor.
    """
    cfg = cfg or FusionConfig()
    factor = cfg.singleton_factor
    if factor is None:
        factor = 1.0 if len(det_sets) <= 1 else 0.5

    pooled: list[SourcedDetection] = []
    for source_id, dets in det_sets:
        pooled.extend(SourcedDetection(d, source_id) for d in dets)

    by_image: dict[int, list[SourcedDetection]] = {}
    for sd in pooled:
        by_image.setdefault(sd.detection.image_id, []).append(sd)

    out: list[DetectionRecord] = []
    for img_id in sorted(by_image):
        size = image_sizes.get(img_id) if image_sizes else None
        for group in group_detections(by_image[img_id], cfg, size):
            members = group.members
            weights = [_member_weight(sd, cfg, size) for sd in members]
            best = min(
                range(len(members)),
                key=lambda i: (
                    -weights[i],
                    -members[i].detection.score,
                    members[i].source_id,
                    i,
                ),
            )
            survivor = members[best].detection
            if len(members) == 1:
                score = survivor.score * factor
            elif cfg.score_aggregation == "max":
                score = max(sd.detection.score for sd in members)
            else:
                score = sum(sd.detection.score for sd in members) / len(members)
            out.append(replace(survivor, score=score))
    out.sort(key=_output_sort_key)
    return out


def _mask_subset(
    inner: DetectionRecord, outer: DetectionRecord, image_size
) -> bool:
    sa, sb = inner.segmentation, outer.segmentation
    if isinstance(sa, RleSegmentation) and isinstance(sb, RleSegmentation):
        return masks.rle_intersection_area(sa.rle, sb.rle) == masks.rle_area(sa.rle)
    iou_size = image_size
    if iou_size is None and isinstance(sb, RleSegmentation):
        iou_size = (sb.rle.height, sb.rle.width)
    if iou_size is None and isinstance(sa, RleSegmentation):
        iou_size = (sa.rle.height, sa.rle.width)
    if iou_size is not None:
        ma, _, _ = detection_mask(inner, iou_size)
        mb, _, _ = detection_mask(outer, iou_size)
    else:
        ma, ra, ca = detection_mask(inner, None)
        mb, rb, cb = detection_mask(outer, None)
        r0 = min(ra, rb)
        c0 = min(ca, cb)
        h = max(ra + ma.shape[0], rb + mb.shape[0]) - r0
        w = max(ca + ma.shape[1], cb + mb.shape[1]) - c0
        fa = np.zeros((h, w), dtype=np.uint8)
        fb = np.zeros((h, w), dtype=np.uint8)
        fa[ra - r0 : ra - r0 + ma.shape[0], ca - c0 : ca - c0 + ma.shape[1]] = ma
        fb[rb - r0 : rb - r0 + mb.shape[0], cb - c0 : cb - c0 + mb.shape[1]] = mb
        ma, mb = fa, fb
    inter = int(np.count_nonzero((ma != 0) & (mb != 0)))
    return inter == masks.mask_area(ma)


def containment_merge(
    dets: list[DetectionRecord],
    image_sizes: dict[int, tuple[int, int]] | None = None,
) -> list[DetectionRecord]:
    """Drop detections fully inside a same-category detection (experimental).

    Equal masks are mutual subsets; of those, the higher-scored one
    (earlier input on ties) is kept.
    """
    by_image: dict[int, list[int]] = {}
    for i, det in enumerate(dets):
        by_image.setdefault(det.image_id, []).append(i)

    removed = [False] * len(dets)
    for img_id, indices in by_image.items():
        size = image_sizes.get(img_id) if image_sizes else None
        for ai in indices:
            if removed[ai]:
                continue
            for bi in indices:
                if ai == bi or removed[bi]:
                    continue
                a, b = dets[ai], dets[bi]
                if a.category_id != b.category_id:
                    continue
                if not _mask_subset(a, b, size):
                    continue
                if _mask_subset(b, a, size):
                    # identical foregrounds: keep the better-scored one
                    if (b.score, -bi) > (a.score, -ai):
                        removed[ai] = True
                        break
                else:
                    removed[ai] = True
                    break
    return [d for i, d in enumerate(dets) if not removed[i]]


def cooccurrence_filter(
    dets: list[DetectionRecord], matrix, min_count: int
) -> list[DetectionRecord]:
    """Keep detections whose category co-occurs with a kept, higher-scored
    one (experimental); the top-scored detection per image anchors the set.
    """
    known = set(matrix.category_ids)
    for det in dets:
        if det.category_id not in known:
            raise UnknownCategoryError(
                f"category {det.category_id} missing from co-occurrence matrix"
            )

    by_image: dict[int, list[int]] = {}
    for i, det in enumerate(dets):
        by_image.setdefault(det.image_id, []).append(i)

    keep = [False] * len(dets)
    for indices in by_image.values():
        order = sorted(indices, key=lambda i: (-dets[i].score, i))
        kept_cats: list[int] = []
        for rank, i in enumerate(order):
            cat = dets[i].category_id
            if rank == 0:
                keep[i] = True
                kept_cats.append(cat)
                continue
            if any(matrix.count(cat, other) >= min_count for other in kept_cats):
                keep[i] = True
                kept_cats.append(cat)
    return [d for i, d in enumerate(dets) if keep[i]]
