"""Benchmark scoring: per-category AP and AR at a single IoU threshold.

Detections pool globally per category across images (one score-sorted
PR curve per category); AR is recall at the configured IoU threshold
under a per-image detection cap.  Categories without ground truth are
excluded from the mAP/mAR means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import masks
from .coco import AnnotationRecord, DatasetDoc, DetectionRecord
from .errors import (
    EmptyGTError,
    SchemaError,
    UnknownCategoryError,
    UnknownImageError,
)

_COMPARATORS = ("strict-greater", "greater-or-equal")
_INTERPOLATIONS = ("101-point", "all-point")
_IOU_DOMAINS = ("mask", "bbox")


@dataclass(frozen=True)
class MatchConfig:
    iou_threshold: float = 0.5
    comparator: str = "strict-greater"
    max_dets_per_image: int = 100
    interpolation: str = "101-point"
    iou_domain: str = "mask"

    def __post_init__(self):
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ValueError(f"iou_threshold {self.iou_threshold} outside (0, 1]")
        if self.comparator not in _COMPARATORS:
            raise ValueError(f"comparator must be one of {_COMPARATORS}")
        if self.max_dets_per_image < 1:
            raise ValueError("max_dets_per_image must be at least 1")
        if self.interpolation not in _INTERPOLATIONS:
            raise ValueError(f"interpolation must be one of {_INTERPOLATIONS}")
        if self.iou_domain not in _IOU_DOMAINS:
            raise ValueError(f"iou_domain must be one of {_IOU_DOMAINS}")

    def qualifies(self, iou: float) -> bool:
        if self.comparator == "strict-greater":
            return iou > self.iou_threshold
        return iou >= self.iou_threshold

    def to_json_dict(self) -> dict:
        return {
            "iou_threshold": self.iou_threshold,
            "comparator": self.comparator,
            "max_dets_per_image": self.max_dets_per_image,
            "interpolation": self.interpolation,
            "iou_domain": self.iou_domain,
        }


@dataclass
class PRCurve:
    """(recall, precision) after each pooled detection, score-descending."""

    points: list[tuple[float, float]]
    num_gt: int


@dataclass
class CategoryResult:
    ap: float | None
    ar: float | None
    num_gt: int
    num_det: int
    tp: int
    fp: int


@dataclass
class EvalReport:
    per_category: dict[int, CategoryResult]
    map: float
    mar: float
    config: MatchConfig

    def to_json_dict(self) -> dict:
        return {
            "mAP": self.map,
            "mAR": self.mar,
            "per_category": {
                str(cid): {
                    "AP": r.ap,
                    "AR": r.ar,
                    "num_gt": r.num_gt,
                    "num_det": r.num_det,
                    "TP": r.tp,
                    "FP": r.fp,
                }
                for cid, r in sorted(self.per_category.items())
            },
            "config": self.config.to_json_dict(),
        }


@dataclass
class MatchResult:
    det_is_tp: list[bool]
    det_gt_index: list[int | None]
    gt_matched: list[bool]


def _det_sort_key(det: DetectionRecord):
    # content-based total order: makes evaluation independent of the
    # order detections arrive in
    if det.segmentation is not None:
        seg = det.segmentation.content_key()
    else:
        seg = ("none",)
    box = tuple(det.bbox) if det.bbox is not None else ()
    return (-det.score, det.image_id, det.category_id, seg, box)


def _detection_box(det: DetectionRecord, height: int, width: int) -> masks.Box:
    if det.bbox is not None:
        return det.bbox
    mask = det.segmentation.to_mask(height, width)
    if masks.mask_area(mask) == 0:
        return masks.Box(0.0, 0.0, 0.0, 0.0)
    return masks.bbox_from_mask(mask)


def _pair_iou(
    gt: AnnotationRecord,
    det: DetectionRecord,
    cfg: MatchConfig,
    height: int,
    width: int,
    gt_cache: dict,
    det_cache: dict,
) -> float:
    if cfg.iou_domain == "bbox":
        if id(det) not in det_cache:
            det_cache[id(det)] = _detection_box(det, height, width)
        return masks.bbox_iou(gt.bbox, det_cache[id(det)])
    if id(gt) not in gt_cache:
        gt_cache[id(gt)] = gt.segmentation.to_mask(height, width)
    if id(det) not in det_cache:
        if det.segmentation is None:
            raise SchemaError("detection carries no segmentation for mask IoU")
        det_cache[id(det)] = det.segmentation.to_mask(height, width)
    return masks.mask_iou(gt_cache[id(gt)], det_cache[id(det)])


def match_detections(
    gt: list[AnnotationRecord],
    dets: list[DetectionRecord],
    cfg: MatchConfig,
    height: int,
    width: int,
) -> MatchResult:
    """Greedy one-image, one-category matching.

    Detections are visited in score-descending order (ties keep input
    order); each takes the unmatched ground truth with the highest
    qualifying IoU (ties keep ground-truth input order).
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].score, i))
    det_is_tp = [False] * len(dets)
    det_gt_index: list[int | None] = [None] * len(dets)
    gt_matched = [False] * len(gt)
    gt_cache: dict = {}
    det_cache: dict = {}
    for di in order:
        best_iou = -1.0
        best_gi = None
        for gi, ann in enumerate(gt):
            if gt_matched[gi]:
                continue
            iou = _pair_iou(ann, dets[di], cfg, height, width, gt_cache, det_cache)
            if cfg.qualifies(iou) and iou > best_iou:
                best_iou = iou
                best_gi = gi
        if best_gi is not None:
            gt_matched[best_gi] = True
            det_is_tp[di] = True
            det_gt_index[di] = best_gi
    return MatchResult(det_is_tp, det_gt_index, gt_matched)


def average_precision(curve: PRCurve, interpolation: str = "101-point") -> float:
    """Interpolated AP of one curve; raises EmptyGT when num_gt == 0."""
    if curve.num_gt == 0:
        raise EmptyGTError("AP undefined without ground-truth instances")
    if interpolation not in _INTERPOLATIONS:
        raise ValueError(f"interpolation must be one of {_INTERPOLATIONS}")
    if not curve.points:
        return 0.0
    recalls = np.array([p[0] for p in curve.points], dtype=np.float64)
    precisions = np.array([p[1] for p in curve.points], dtype=np.float64)
    envelope = np.maximum.accumulate(precisions[::-1])[::-1]
    if interpolation == "101-point":
        total = 0.0
        for k in range(101):
            threshold = k / 100.0
            idx = int(np.searchsorted(recalls, threshold, side="left"))
            if idx < len(recalls):
                total += float(envelope[idx])
        return total / 101.0
    # all-point: exact area under the precision envelope
    area = 0.0
    prev_recall = 0.0
    for i in range(len(recalls)):
        area += (float(recalls[i]) - prev_recall) * float(envelope[i])
        prev_recall = float(recalls[i])
    return area


def _prepare(gt_doc: DatasetDoc, dets: list[DetectionRecord], cfg: MatchConfig):
    images = gt_doc.image_by_id()
    categories = gt_doc.category_by_id()
    for det in dets:
        if det.image_id not in images:
            raise UnknownImageError(f"detection references unknown image {det.image_id}")
        if det.category_id not in categories:
            raise UnknownCategoryError(
                f"detection references unknown category {det.category_id}"
            )

    ordered = sorted(dets, key=_det_sort_key)
    per_image: dict[int, list[DetectionRecord]] = {}
    for det in ordered:
        per_image.setdefault(det.image_id, []).append(det)
    kept = {
        img_id: lst[: cfg.max_dets_per_image] for img_id, lst in per_image.items()
    }

    gt_by_image_cat: dict[tuple[int, int], list[AnnotationRecord]] = {}
    gt_count: dict[int, int] = {}
    for ann in gt_doc.annotations:
        gt_by_image_cat.setdefault((ann.image_id, ann.category_id), []).append(ann)
        gt_count[ann.category_id] = gt_count.get(ann.category_id, 0) + 1
    return images, kept, gt_by_image_cat, gt_count


def _category_curves(
    gt_doc: DatasetDoc, dets: list[DetectionRecord], cfg: MatchConfig
) -> dict[int, dict]:
    """Shared engine behind evaluate and pr_curves."""
    images, kept, gt_by_image_cat, gt_count = _prepare(gt_doc, dets, cfg)

    # matching happens per (image, category); scored flags are then pooled
    # per category in global score order
    labelled: dict[int, list[tuple[DetectionRecord, bool]]] = {}
    matched_gt: dict[int, int] = {}
    for img_id, img_dets in kept.items():
        image = images[img_id]
        by_cat: dict[int, list[DetectionRecord]] = {}
        for det in img_dets:
            by_cat.setdefault(det.category_id, []).append(det)
        for cat_id, cat_dets in by_cat.items():
            gt = gt_by_image_cat.get((img_id, cat_id), [])
            res = match_detections(gt, cat_dets, cfg, image.height, image.width)
            matched_gt[cat_id] = matched_gt.get(cat_id, 0) + sum(res.gt_matched)
            labelled.setdefault(cat_id, []).extend(
                zip(cat_dets, res.det_is_tp)
            )

    out: dict[int, dict] = {}
    cat_ids = set(gt_count) | set(labelled)
    for cat_id in sorted(cat_ids):
        pairs = sorted(labelled.get(cat_id, []), key=lambda p: _det_sort_key(p[0]))
        num_gt = gt_count.get(cat_id, 0)
        points = []
        tp_cum = 0
        fp_cum = 0
        for _, is_tp in pairs:
            if is_tp:
                tp_cum += 1
            else:
                fp_cum += 1
            recall = tp_cum / num_gt if num_gt else 0.0
            precision = tp_cum / (tp_cum + fp_cum)
            points.append((recall, precision))
        out[cat_id] = {
            "curve": PRCurve(points, num_gt),
            "num_det": len(pairs),
            "tp": tp_cum,
            "fp": fp_cum,
            "matched_gt": matched_gt.get(cat_id, 0),
        }
    return out


def evaluate(
    gt_doc: DatasetDoc, dets: list[DetectionRecord], cfg: MatchConfig | None = None
) -> EvalReport:
    cfg = cfg or MatchConfig()
    data = _category_curves(gt_doc, dets, cfg)
    per_category: dict[int, CategoryResult] = {}
    aps = []
    ars = []
    for cat_id, d in data.items():
        curve: PRCurve = d["curve"]
        if curve.num_gt > 0:
            ap = average_precision(curve, cfg.interpolation)
            ar = d["matched_gt"] / curve.num_gt
            aps.append(ap)
            ars.append(ar)
        else:
            ap = None
            ar = None
        per_category[cat_id] = CategoryResult(
            ap=ap,
            ar=ar,
            num_gt=curve.num_gt,
            num_det=d["num_det"],
            tp=d["tp"],
            fp=d["fp"],
        )
    mean_ap = sum(aps) / len(aps) if aps else 0.0
    mean_ar = sum(ars) / len(ars) if ars else 0.0
    return EvalReport(per_category=per_category, map=mean_ap, mar=mean_ar, config=cfg)


def pr_curves(
    gt_doc: DatasetDoc, dets: list[DetectionRecord], cfg: MatchConfig | None = None
) -> dict[int, PRCurve]:
    cfg = cfg or MatchConfig()
    data = _category_curves(gt_doc, dets, cfg)
    return {cat_id: d["curve"] for cat_id, d in data.items()}
