"""Builders shared across test modules."""

from __future__ import annotations

import json

import numpy as np

from maskbench import coco, masks


def rect_flat(x0, y0, x1, y1) -> list[float]:
    return [x0, y0, x1, y0, x1, y1, x0, y1]


def make_dataset(images, categories, annotations) -> coco.DatasetDoc:
    """images: (id, w, h); categories: (id, name); annotations: dicts."""
    doc = {
        "images": [{"id": i, "width": w, "height": h} for i, w, h in images],
        "categories": [{"id": i, "name": n} for i, n in categories],
        "annotations": annotations,
    }
    return coco.parse_dataset(json.dumps(doc))


def ann(ann_id, image_id, category_id, seg, bbox=None, area=None, **extra) -> dict:
    out = {
        "id": ann_id,
        "image_id": image_id,
        "category_id": category_id,
        "segmentation": seg,
        "iscrowd": 0,
    }
    if bbox is None or area is None:
        parsed = coco.parse_segmentation(seg, "helper")
        if isinstance(parsed, coco.RleSegmentation):
            mask = masks.rle_decode(parsed.rle)
        else:
            mask, r0, c0 = masks.rasterize_window(
                [p for p in parsed.polygons if p.vertex_count >= 3]
            )
        if bbox is None:
            if mask.any():
                box = masks.bbox_from_mask(mask)
                if not isinstance(parsed, coco.RleSegmentation):
                    box = masks.Box(box.x + c0, box.y + r0, box.w, box.h)
                bbox = [box.x, box.y, box.w, box.h]
            else:
                bbox = [0.0, 0.0, 0.0, 0.0]
        if area is None:
            area = float(masks.mask_area(mask))
    out["bbox"] = bbox
    out["area"] = area
    out.update(extra)
    return out


def det(image_id, category_id, score, seg=None, bbox=None) -> coco.DetectionRecord:
    segmentation = coco.parse_segmentation(seg, "det") if seg is not None else None
    box = masks.Box(*bbox) if bbox is not None else None
    return coco.DetectionRecord(
        image_id=image_id,
        category_id=category_id,
        score=score,
        segmentation=segmentation,
        bbox=box,
    )


def gt_as_detections(doc: coco.DatasetDoc, score: float = 1.0):
    return [
        coco.DetectionRecord(
            image_id=a.image_id,
            category_id=a.category_id,
            score=score,
            segmentation=a.segmentation,
            bbox=a.bbox,
        )
        for a in doc.annotations
    ]


def _random_blob(rng, cx, cy, scale, n_vertices) -> list[float]:
    """Simple (non-self-intersecting) polygon around a center point."""
    angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, n_vertices))
    radii = rng.uniform(0.35 * scale, scale, n_vertices)
    flat = []
    for a, r in zip(angles, radii):
        flat.append(round(cx + r * np.cos(a), 2))
        flat.append(round(cy + r * np.sin(a), 2))
    return flat


def random_scene(rng, with_rle_dets=True):
    """Random small dataset plus detections for oracle comparisons.

    Detections mix perturbed copies of ground truth (right and wrong
    category) with unrelated boxes, so scenes contain a healthy blend
    of TPs and FPs at IoU 0.5.
    """
    n_images = int(rng.integers(1, 6))
    n_cats = int(rng.integers(1, 5))
    cat_ids = sorted(rng.choice(np.arange(1, 50), size=n_cats, replace=False).tolist())
    images = []
    annotations = []
    ann_id = 1
    for img_id in range(1, n_images + 1):
        h = int(rng.integers(8, 25))
        w = int(rng.integers(8, 25))
        images.append((img_id, w, h))
        for _ in range(int(rng.integers(0, 4))):
            cat = int(rng.choice(cat_ids))
            x0 = float(rng.uniform(0, w - 4))
            y0 = float(rng.uniform(0, h - 4))
            x1 = float(rng.uniform(x0 + 2.0, min(w, x0 + 12)))
            y1 = float(rng.uniform(y0 + 2.0, min(h, y0 + 12)))
            annotations.append(
                ann(ann_id, img_id, cat, [rect_flat(x0, y0, x1, y1)])
            )
            ann_id += 1
    doc = make_dataset(images, [(c, f"class-{c}") for c in cat_ids], annotations)

    dets = []
    for image in doc.images:
        anns_here = [a for a in doc.annotations if a.image_id == image.id]
        for _ in range(int(rng.integers(0, 7))):
            score = float(np.round(rng.uniform(0.05, 1.0), 3))
            kind = rng.random()
            if anns_here and kind < 0.6:
                src = anns_here[int(rng.integers(0, len(anns_here)))]
                cat = (
                    src.category_id
                    if rng.random() < 0.8
                    else int(rng.choice(cat_ids))
                )
                jitter = rng.uniform(-1.5, 1.5, size=4)
                box = src.bbox
                x0 = box.x + jitter[0]
                y0 = box.y + jitter[1]
                x1 = max(x0 + 1.0, box.x + box.w + jitter[2])
                y1 = max(y0 + 1.0, box.y + box.h + jitter[3])
                seg = [rect_flat(x0, y0, x1, y1)]
            else:
                cat = int(rng.choice(cat_ids))
                x0 = float(rng.uniform(0, image.width - 3))
                y0 = float(rng.uniform(0, image.height - 3))
                x1 = float(rng.uniform(x0 + 1.0, min(image.width, x0 + 9)))
                y1 = float(rng.uniform(y0 + 1.0, min(image.height, y0 + 9)))
                seg = [rect_flat(x0, y0, x1, y1)]
            if with_rle_dets and rng.random() < 0.15:
                poly = coco.parse_segmentation(seg, "scene")
                mask = poly.to_mask(image.height, image.width)
                if mask.any():
                    rle = masks.rle_encode(mask)
                    seg = {"size": [image.height, image.width],
                           "counts": masks.rle_to_string(rle)}
            dets.append(det(image.id, cat, score, seg=seg))
    return doc, dets
