"""Regenerate tests/fixtures/mini_dataset.json.

A small food-photo-style dataset: 5 categories, exactly 40 annotations
each (200 total), ~70 images.  Most segmentations are blob polygons
with a vertex-count mode near 8; a few use uncompressed or
compressed-string RLE to keep every parser path covered.  Bounding
boxes and areas are taken from the rasterized masks so the fixture
passes validation with zero findings.

    python3 tools/make_fixture.py
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from maskbench import masks  # noqa: E402

CATEGORIES = [
    (12, "rice", "rice"),
    (35, "carrot", "vegetables"),
    (101, "bread-white", "bread"),
    (204, "salad-leaf-salad-green", "salad"),
    (273, "butter", "dairy"),
]
ANNS_PER_CATEGORY = 40
SEED = 273


def blob(rng, cx, cy, scale, n_vertices):
    angles = np.sort(rng.uniform(0.0, 2.0 * np.pi, n_vertices))
    radii = rng.uniform(0.4 * scale, scale, n_vertices)
    xs = cx + radii * np.cos(angles)
    ys = cy + radii * np.sin(angles)
    flat = []
    for x, y in zip(xs, ys):
        flat.append(round(float(x), 2))
        flat.append(round(float(y), 2))
    return flat


def main() -> None:
    rng = np.random.default_rng(SEED)
    images = []
    for img_id in range(1, 71):
        # mostly square-ish phone photos, a few outliers
        if rng.random() < 0.1:
            w = int(rng.integers(183, 480))
            h = int(rng.integers(183, 480))
        elif rng.random() < 0.12:
            w = int(rng.integers(852, 1600))
            h = int(rng.integers(852, 1600))
        else:
            w = int(rng.integers(480, 853))
            h = int(rng.integers(480, 853))
        images.append(
            {
                "id": img_id,
                "width": w,
                "height": h,
                "file_name": f"{img_id:06d}.jpg",
                "license": int(rng.integers(1, 4)),
            }
        )

    annotations = []
    ann_id = 1
    for cat_id, _, _ in CATEGORIES:
        for k in range(ANNS_PER_CATEGORY):
            img = images[int(rng.integers(0, len(images)))]
            w, h = img["width"], img["height"]
            scale = float(rng.uniform(0.08, 0.3)) * min(w, h) / 2
            cx = float(rng.uniform(scale + 1, w - scale - 1))
            cy = float(rng.uniform(scale + 1, h - scale - 1))

            form = rng.random()
            if form < 0.92:
                # vertex counts cluster around 8 like hand-drawn outlines
                n_vertices = int(np.clip(rng.normal(8, 2.5), 4, 18))
                polys = [blob(rng, cx, cy, scale, n_vertices)]
                if rng.random() < 0.12:
                    polys.append(
                        blob(rng, cx + scale * 1.5, cy, scale * 0.5,
                             int(rng.integers(4, 9)))
                    )
                    polys[-1] = [
                        round(min(max(v, 0.0), (w if i % 2 == 0 else h)), 2)
                        for i, v in enumerate(polys[-1])
                    ]
                seg = polys
                poly_objs = [masks.Polygon.from_flat(p) for p in polys]
                mask, r0, c0 = masks.rasterize_window(poly_objs)
                box = masks.bbox_from_mask(mask)
                bbox = [box.x + c0, box.y + r0, box.w, box.h]
                area = float(masks.mask_area(mask))
            else:
                # RLE annotation: an ellipse-ish stamp at image resolution
                yy, xx = np.mgrid[0:h, 0:w]
                rx = scale
                ry = scale * float(rng.uniform(0.6, 1.4))
                mask = (
                    ((xx - cx) / rx) ** 2 + ((yy - cy) / ry) ** 2 <= 1.0
                ).astype(np.uint8)
                rle = masks.rle_encode(mask)
                if rng.random() < 0.5:
                    seg = {"size": [h, w], "counts": list(map(int, rle.counts))}
                else:
                    seg = {"size": [h, w], "counts": masks.rle_to_string(rle)}
                box = masks.bbox_from_mask(mask)
                bbox = [box.x, box.y, box.w, box.h]
                area = float(masks.mask_area(mask))

            annotations.append(
                {
                    "id": ann_id,
                    "image_id": img["id"],
                    "category_id": cat_id,
                    "segmentation": seg,
                    "bbox": bbox,
                    "area": area,
                    "iscrowd": 0,
                }
            )
            ann_id += 1

    doc = {
        "info": {
            "description": "mini food segmentation fixture",
            "version": "1.0",
            "year": 2021,
        },
        "images": images,
        "annotations": annotations,
        "categories": [
            {"id": cid, "name": name, "supercategory": sup}
            for cid, name, sup in CATEGORIES
        ],
    }
    out = Path(__file__).resolve().parent.parent / "tests" / "fixtures" / "mini_dataset.json"
    out.write_text(json.dumps(doc), encoding="utf-8")
    print(f"wrote {out} ({out.stat().st_size} bytes, "
          f"{len(images)} images, {len(annotations)} annotations)")


if __name__ == "__main__":
    main()
