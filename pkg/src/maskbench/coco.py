"""COCO-style document handling: parse, validate, repair, serialize.

Ground-truth documents are JSON objects with top-level ``images``,
``annotations`` and ``categories`` arrays; results documents are JSON
arrays of detection objects.  Unknown fields at any level are kept in
an ``extra`` mapping so a parse/serialize round trip preserves them.

Segmentations come in three source forms: a list of flat polygon
coordinate lists, an uncompressed RLE object with integer counts, or a
compressed RLE object with a printable-string payload.  All RLE output
uses the compressed string form; equality is on decoded content, not
on the source form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from . import masks
from .errors import (
    DanglingReferenceError,
    DocumentSyntaxError,
    SchemaError,
    ScoreRangeError,
)

BBOX_TOLERANCE_PX = 1.0


@dataclass(frozen=True)
class PolygonSegmentation:
    polygons: tuple[masks.Polygon, ...]

    def to_mask(self, height: int, width: int) -> np.ndarray:
        # vertex-starved polygons cover no pixels under scanline sampling;
        # skip them here so validation can report instead of crashing
        usable = [p for p in self.polygons if p.vertex_count >= 3]
        return masks.rasterize(usable, height, width)

    def to_json(self) -> list[list[float]]:
        return [p.flatten() for p in self.polygons]

    def content_key(self) -> tuple:
        return ("poly",) + tuple(tuple(p.flatten()) for p in self.polygons)


@dataclass(frozen=True)
class RleSegmentation:
    rle: masks.RleMask

    def to_mask(self, height: int, width: int) -> np.ndarray:
        if (self.rle.height, self.rle.width) != (height, width):
            raise masks.ShapeMismatchError(
                f"RLE size {self.rle.height}x{self.rle.width} does not match "
                f"image size {height}x{width}"
            )
        return masks.rle_decode(self.rle)

    def to_json(self) -> dict:
        return {
            "size": [self.rle.height, self.rle.width],
            "counts": masks.rle_to_string(self.rle),
        }

    def content_key(self) -> tuple:
        return ("rle", self.rle.height, self.rle.width, self.rle.counts)


Segmentation = Union[PolygonSegmentation, RleSegmentation]


@dataclass
class ImageRecord:
    id: int
    width: int
    height: int
    file_name: str | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class CategoryRecord:
    id: int
    name: str
    extra: dict = field(default_factory=dict)


@dataclass
class AnnotationRecord:
    id: int
    image_id: int
    category_id: int
    segmentation: Segmentation
    bbox: masks.Box
    area: float
    crowd_flag: bool = False
    extra: dict = field(default_factory=dict)


@dataclass
class DetectionRecord:
    image_id: int
    category_id: int
    score: float
    segmentation: Segmentation | None = None
    bbox: masks.Box | None = None
    extra: dict = field(default_factory=dict)


@dataclass
class DatasetDoc:
    images: list[ImageRecord]
    annotations: list[AnnotationRecord]
    categories: list[CategoryRecord]
    extra: dict = field(default_factory=dict)

    def image_by_id(self) -> dict[int, ImageRecord]:
        return {im.id: im for im in self.images}

    def category_by_id(self) -> dict[int, CategoryRecord]:
        return {c.id: c for c in self.categories}


@dataclass
class ValidationReport:
    errors: list[tuple[int, str, str]] = field(default_factory=list)
    warnings: list[tuple[int, str, str]] = field(default_factory=list)
    repaired_count: int = 0
    removed_count: int = 0

    @property
    def ok(self) -> bool:
        return not self.errors

    def to_json_dict(self) -> dict:
        return {
            "errors": [
                {"id": i, "rule": r, "message": m} for i, r, m in self.errors
            ],
            "warnings": [
                {"id": i, "rule": r, "message": m} for i, r, m in self.warnings
            ],
            "repaired_count": self.repaired_count,
            "removed_count": self.removed_count,
        }


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise SchemaError(f"{where}: missing required field {key!r}")
    return obj[key]


def _as_int(value, where: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(f"{where}: expected an integer, got {value!r}")
    return value


def _as_number(value, where: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{where}: expected a number, got {value!r}")
    return float(value)


def _as_list(value, where: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(f"{where}: expected an array, got {type(value).__name__}")
    return value


def _load_json(document) -> object:
    if isinstance(document, bytes):
        document = document.decode("utf-8", errors="replace")
    try:
        return json.loads(document)
    except json.JSONDecodeError as exc:
        raise DocumentSyntaxError(f"malformed JSON: {exc}") from None


def parse_segmentation(value, where: str) -> Segmentation:
    if isinstance(value, list):
        polys = []
        for i, flat in enumerate(_as_list(value, where)):
            flat = _as_list(flat, f"{where}[{i}]")
            if len(flat) % 2 != 0:
                raise SchemaError(
                    f"{where}[{i}]: odd number of polygon coordinates"
                )
            coords = [_as_number(v, f"{where}[{i}]") for v in flat]
            polys.append(masks.Polygon.from_flat(coords))
        return PolygonSegmentation(tuple(polys))
    if isinstance(value, dict):
        size = _as_list(_require(value, "size", where), f"{where}.size")
        if len(size) != 2:
            raise SchemaError(f"{where}.size: expected [height, width]")
        h = _as_int(size[0], f"{where}.size")
        w = _as_int(size[1], f"{where}.size")
        counts = _require(value, "counts", where)
        if isinstance(counts, str):
            return RleSegmentation(masks.rle_from_string(counts, h, w))
        if isinstance(counts, list):
            vals = [_as_int(c, f"{where}.counts") for c in counts]
            rle = masks.RleMask.from_counts(h, w, vals)
            rle.validate()
            return RleSegmentation(rle)
        raise SchemaError(f"{where}.counts: expected string or integer array")
    raise SchemaError(f"{where}: expected polygon array or RLE object")


def _parse_bbox(value, where: str) -> masks.Box:
    box = _as_list(value, where)
    if len(box) != 4:
        raise SchemaError(f"{where}: expected [x, y, w, h]")
    return masks.Box(*(_as_number(v, where) for v in box))


def _extras(obj: dict, known: frozenset) -> dict:
    return {k: v for k, v in obj.items() if k not in known}


_IMAGE_KEYS = frozenset({"id", "width", "height", "file_name"})
_CATEGORY_KEYS = frozenset({"id", "name"})
_ANNOTATION_KEYS = frozenset(
    {"id", "image_id", "category_id", "segmentation", "bbox", "area", "iscrowd"}
)
_DETECTION_KEYS = frozenset(
    {"image_id", "category_id", "segmentation", "bbox", "score"}
)
_DATASET_KEYS = frozenset({"images", "annotations", "categories"})


def parse_dataset(document) -> DatasetDoc:
    """Parse a COCO annotation document (bytes or str of JSON)."""
    root = _load_json(document)
    if not isinstance(root, dict):
        raise SchemaError("top level: expected a JSON object")

    images = []
    image_ids = set()
    for i, obj in enumerate(_as_list(_require(root, "images", "top level"), "images")):
        where = f"images[{i}]"
        if not isinstance(obj, dict):
            raise SchemaError(f"{where}: expected an object")
        rec = ImageRecord(
            id=_as_int(_require(obj, "id", where), f"{where}.id"),
            width=_as_int(_require(obj, "width", where), f"{where}.width"),
            height=_as_int(_require(obj, "height", where), f"{where}.height"),
            file_name=obj.get("file_name"),
            extra=_extras(obj, _IMAGE_KEYS),
        )
        if rec.width < 1 or rec.height < 1:
            raise SchemaError(f"{where}: non-positive image dimensions")
        if rec.id in image_ids:
            raise SchemaError(f"{where}: duplicate image id {rec.id}")
        image_ids.add(rec.id)
        images.append(rec)

    categories = []
    category_ids = set()
    for i, obj in enumerate(
        _as_list(_require(root, "categories", "top level"), "categories")
    ):
        where = f"categories[{i}]"
        if not isinstance(obj, dict):
            raise SchemaError(f"{where}: expected an object")
        name = _require(obj, "name", where)
        if not isinstance(name, str) or not name:
            raise SchemaError(f"{where}.name: expected non-empty text")
        rec = CategoryRecord(
            id=_as_int(_require(obj, "id", where), f"{where}.id"),
            name=name,
            extra=_extras(obj, _CATEGORY_KEYS),
        )
        if rec.id in category_ids:
            raise SchemaError(f"{where}: duplicate category id {rec.id}")
        category_ids.add(rec.id)
        categories.append(rec)

    annotations = []
    for i, obj in enumerate(
        _as_list(_require(root, "annotations", "top level"), "annotations")
    ):
        where = f"annotations[{i}]"
        if not isinstance(obj, dict):
            raise SchemaError(f"{where}: expected an object")
        # duplicate annotation ids are tolerated here; validate() reports them
        rec = AnnotationRecord(
            id=_as_int(_require(obj, "id", where), f"{where}.id"),
            image_id=_as_int(_require(obj, "image_id", where), f"{where}.image_id"),
            category_id=_as_int(
                _require(obj, "category_id", where), f"{where}.category_id"
            ),
            segmentation=parse_segmentation(
                _require(obj, "segmentation", where), f"{where}.segmentation"
            ),
            bbox=_parse_bbox(_require(obj, "bbox", where), f"{where}.bbox"),
            area=_as_number(_require(obj, "area", where), f"{where}.area"),
            crowd_flag=bool(obj.get("iscrowd", 0)),
            extra=_extras(obj, _ANNOTATION_KEYS),
        )
        if rec.image_id not in image_ids:
            raise DanglingReferenceError(
                f"annotation {rec.id} references unknown image {rec.image_id}"
            )
        if rec.category_id not in category_ids:
            raise DanglingReferenceError(
                f"annotation {rec.id} references unknown category {rec.category_id}"
            )
        annotations.append(rec)

    return DatasetDoc(
        images=images,
        annotations=annotations,
        categories=categories,
        extra=_extras(root, _DATASET_KEYS),
    )


def parse_results(document) -> list[DetectionRecord]:
    """Parse a COCO results document (JSON array of detections)."""
    root = _load_json(document)
    if not isinstance(root, list):
        raise SchemaError("top level: expected a JSON array of detections")
    out = []
    for i, obj in enumerate(root):
        where = f"results[{i}]"
        if not isinstance(obj, dict):
            raise SchemaError(f"{where}: expected an object")
        score = _as_number(_require(obj, "score", where), f"{where}.score")
        if not 0.0 <= score <= 1.0:
            raise ScoreRangeError(f"{where}: score {score} outside [0, 1]")
        out.append(
            DetectionRecord(
                image_id=_as_int(
                    _require(obj, "image_id", where), f"{where}.image_id"
                ),
                category_id=_as_int(
                    _require(obj, "category_id", where), f"{where}.category_id"
                ),
                score=score,
                segmentation=parse_segmentation(
                    _require(obj, "segmentation", where), f"{where}.segmentation"
                ),
                bbox=(
                    _parse_bbox(obj["bbox"], f"{where}.bbox")
                    if obj.get("bbox") is not None
                    else None
                ),
                extra=_extras(obj, _DETECTION_KEYS),
            )
        )
    return out


def _annotation_mask(ann: AnnotationRecord, image: ImageRecord) -> np.ndarray:
    return ann.segmentation.to_mask(image.height, image.width)


def validate(doc: DatasetDoc) -> ValidationReport:
    """Check dataset annotations against the hard consistency rules.

    Errors: bbox/mask mismatch beyond 1 px on any side, degenerate
    polygons, zero-area masks, out-of-bounds segmentations, duplicate
    annotation ids.  A stored area that disagrees with the mask area is
    only a warning (fix_bboxes recomputes it).
    """
    report = ValidationReport()
    images = doc.image_by_id()
    seen_ids: set[int] = set()

    for ann in doc.annotations:
        if ann.id in seen_ids:
            report.errors.append(
                (ann.id, "duplicate_id", f"annotation id {ann.id} appears more than once")
            )
        seen_ids.add(ann.id)

        image = images[ann.image_id]
        seg = ann.segmentation
        if isinstance(seg, PolygonSegmentation):
            for k, poly in enumerate(seg.polygons):
                if poly.vertex_count < 3:
                    report.errors.append(
                        (ann.id, "degenerate_polygon",
                         f"polygon {k} has {poly.vertex_count} vertices")
                    )
            for k, poly in enumerate(seg.polygons):
                pts = poly.points
                if pts.size and (
                    pts[:, 0].min() < 0 or pts[:, 1].min() < 0
                    or pts[:, 0].max() > image.width or pts[:, 1].max() > image.height
                ):
                    report.errors.append(
                        (ann.id, "out_of_bounds",
                         f"polygon {k} exceeds image bounds "
                         f"{image.width}x{image.height}")
                    )
        else:
            if (seg.rle.height, seg.rle.width) != (image.height, image.width):
                report.errors.append(
                    (ann.id, "out_of_bounds",
                     f"RLE size {seg.rle.height}x{seg.rle.width} does not match "
                     f"image size {image.height}x{image.width}")
                )
                continue

        mask = _annotation_mask(ann, image)
        area = masks.mask_area(mask)
        if area == 0:
            report.errors.append(
                (ann.id, "zero_area", "segmentation rasterizes to zero pixels")
            )
            continue

        tight = masks.bbox_from_mask(mask)
        stored = ann.bbox
        deltas = (
            abs(stored.x - tight.x),
            abs(stored.y - tight.y),
            abs((stored.x + stored.w) - (tight.x + tight.w)),
            abs((stored.y + stored.h) - (tight.y + tight.h)),
        )
        if max(deltas) > BBOX_TOLERANCE_PX:
            report.errors.append(
                (ann.id, "bbox_mismatch",
                 f"stored bbox {list(stored)} vs mask bbox {list(tight)}")
            )
        if abs(ann.area - area) > 1.0:
            report.warnings.append(
                (ann.id, "area_mismatch",
                 f"stored area {ann.area} vs mask area {area}")
            )
    return report


def fix_bboxes(doc: DatasetDoc) -> tuple[DatasetDoc, ValidationReport]:
    """Recompute bbox and area from the rasterized mask for every annotation.

    Annotations whose masks rasterize empty are dropped (and counted in
    removed_count).  Annotations already tight are left as-is, so the
    pass is idempotent.
    """
    report = ValidationReport()
    images = doc.image_by_id()
    kept = []
    for ann in doc.annotations:
        mask = _annotation_mask(ann, images[ann.image_id])
        area = masks.mask_area(mask)
        if area == 0:
            report.removed_count += 1
            continue
        tight = masks.bbox_from_mask(mask)
        if tuple(ann.bbox) == tuple(tight) and float(ann.area) == float(area):
            kept.append(ann)
            continue
        report.repaired_count += 1
        kept.append(
            AnnotationRecord(
                id=ann.id,
                image_id=ann.image_id,
                category_id=ann.category_id,
                segmentation=ann.segmentation,
                bbox=tight,
                area=float(area),
                crowd_flag=ann.crowd_flag,
                extra=dict(ann.extra),
            )
        )
    fixed = DatasetDoc(
        images=list(doc.images),
        annotations=kept,
        categories=list(doc.categories),
        extra=dict(doc.extra),
    )
    return fixed, report


def _image_to_json(rec: ImageRecord) -> dict:
    obj = {"id": rec.id, "width": rec.width, "height": rec.height}
    if rec.file_name is not None:
        obj["file_name"] = rec.file_name
    obj.update(rec.extra)
    return obj


def _category_to_json(rec: CategoryRecord) -> dict:
    obj = {"id": rec.id, "name": rec.name}
    obj.update(rec.extra)
    return obj


def _annotation_to_json(rec: AnnotationRecord) -> dict:
    obj = {
        "id": rec.id,
        "image_id": rec.image_id,
        "category_id": rec.category_id,
        "segmentation": rec.segmentation.to_json(),
        # floats throughout so serialize(parse(s)) is byte-stable
        "bbox": [float(v) for v in rec.bbox],
        "area": float(rec.area),
        "iscrowd": int(rec.crowd_flag),
    }
    obj.update(rec.extra)
    return obj


def detection_to_json(rec: DetectionRecord) -> dict:
    obj = {
        "image_id": rec.image_id,
        "category_id": rec.category_id,
        "score": float(rec.score),
    }
    if rec.segmentation is not None:
        obj["segmentation"] = rec.segmentation.to_json()
    if rec.bbox is not None:
        obj["bbox"] = [float(v) for v in rec.bbox]
    obj.update(rec.extra)
    return obj


def serialize_dataset(doc: DatasetDoc) -> str:
    obj = {
        "images": [_image_to_json(im) for im in doc.images],
        "annotations": [_annotation_to_json(a) for a in doc.annotations],
        "categories": [_category_to_json(c) for c in doc.categories],
    }
    obj.update(doc.extra)
    return json.dumps(obj, sort_keys=True)


def serialize_results(dets: Sequence[DetectionRecord]) -> str:
    return json.dumps([detection_to_json(d) for d in dets], sort_keys=True)
