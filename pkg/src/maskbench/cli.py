"""Command-line front end: validate, fix-bboxes, evaluate, fuse, stats, serve.

stdout carries only the machine-readable payload (JSON, or CSV where
requested); everything else goes to stderr.  Exit codes: 0 success,
1 data error, 2 usage error.  Flags beat MASKBENCH_* environment
variables, which beat built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from . import coco, fusion, stats
from .errors import MaskBenchError, UsageError
from .evaluation import MatchConfig, evaluate
from .fusion import FusionConfig


def _env(name: str) -> str | None:
    return os.environ.get(f"MASKBENCH_{name}")


def _resolve(flag_value, env_name: str, cast, default):
    """Flag wins, then environment, then default."""
    if flag_value is not None:
        return flag_value
    raw = _env(env_name)
    if raw is not None:
        try:
            return cast(raw)
        except (TypeError, ValueError):
            raise UsageError(f"MASKBENCH_{env_name}={raw!r} is not a valid value")
    return default


def _read(path: str) -> bytes:
    return Path(path).read_bytes()


def _emit(text: str) -> None:
    sys.stdout.write(text)
    if not text.endswith("\n"):
        sys.stdout.write("\n")


def _match_config(args) -> MatchConfig:
    return MatchConfig(
        iou_threshold=_resolve(args.iou, "IOU", float, 0.5),
        comparator=_resolve(args.comparator, "COMPARATOR", str, "strict-greater"),
        max_dets_per_image=_resolve(args.max_dets, "MAX_DETS", int, 100),
        interpolation=_resolve(args.interpolation, "INTERPOLATION", str, "101-point"),
        iou_domain=_resolve(args.iou_domain, "IOU_DOMAIN", str, "mask"),
    )


def _add_match_flags(sub) -> None:
    sub.add_argument("--iou", type=float, default=None, help="IoU threshold (default 0.5)")
    sub.add_argument(
        "--comparator",
        choices=["strict-greater", "greater-or-equal"],
        default=None,
        help="how IoU is compared with the threshold",
    )
    sub.add_argument(
        "--interpolation",
        choices=["101-point", "all-point"],
        default=None,
        help="AP interpolation rule",
    )
    sub.add_argument(
        "--max-dets", type=int, default=None, help="per-image detection cap (default 100)"
    )
    sub.add_argument(
        "--iou-domain",
        choices=["mask", "bbox"],
        default=None,
        help="match on mask or bbox overlap (default mask)",
    )


def cmd_validate(args) -> int:
    doc = coco.parse_dataset(_read(args.dataset))
    report = coco.validate(doc)
    _emit(json.dumps(report.to_json_dict(), sort_keys=True))
    return 0 if report.ok else 1


def cmd_fix_bboxes(args) -> int:
    doc = coco.parse_dataset(_read(args.dataset))
    fixed, report = coco.fix_bboxes(doc)
    payload = coco.serialize_dataset(fixed)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    else:
        _emit(payload)
    print(json.dumps(report.to_json_dict(), sort_keys=True), file=sys.stderr)
    return 0


def cmd_evaluate(args) -> int:
    gt = coco.parse_dataset(_read(args.gt))
    dets = coco.parse_results(_read(args.results))
    report = evaluate(gt, dets, _match_config(args))
    _emit(json.dumps(report.to_json_dict(), sort_keys=True))
    return 0


def cmd_fuse(args) -> int:
    cfg = FusionConfig(
        group_iou=_resolve(args.group_iou, "GROUP_IOU", float, 0.5),
        score_aggregation=_resolve(args.score_agg, "SCORE_AGG", str, "max"),
        singleton_factor=_resolve(
            args.singleton_factor, "SINGLETON_FACTOR", float, None
        ),
        iou_domain=_resolve(args.fusion_iou_domain, "FUSION_IOU_DOMAIN", str, "bbox"),
        area_source=_resolve(args.area_source, "AREA_SOURCE", str, "mask"),
    )
    det_sets = [
        (source_id, coco.parse_results(_read(path)))
        for source_id, path in enumerate(args.inputs)
    ]
    image_sizes = None
    if args.gt:
        gt = coco.parse_dataset(_read(args.gt))
        image_sizes = {im.id: (im.height, im.width) for im in gt.images}
    fused = fusion.fuse(det_sets, cfg, image_sizes)
    payload = coco.serialize_results(fused)
    if args.out:
        Path(args.out).write_text(payload + "\n", encoding="utf-8")
    else:
        _emit(payload)
    return 0


def _csv_text(rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def _stats_csv(key: str, value) -> str:
    if key == "class_counts":
        return _csv_text(
            [["category_id", "count"]] + [[cid, n] for cid, n in sorted(value.items())]
        )
    if key == "selected_classes":
        return _csv_text([["rank", "category_id"]] + [[i + 1, cid] for i, cid in enumerate(value)])
    if key == "cooccurrence":
        ids = value["category_ids"]
        rows = [["category_id"] + ids]
        rows += [[ids[i]] + list(value["counts"][i]) for i in range(len(ids))]
        return _csv_text(rows)
    if key in ("polygon_hist", "width_hist", "height_hist"):
        hist = value["histogram"] if key == "polygon_hist" else value
        rows = [["bin_lo", "bin_hi", "count"]]
        edges = hist["bin_edges"]
        rows += [
            [edges[i], edges[i + 1], hist["counts"][i]]
            for i in range(len(hist["counts"]))
        ]
        return _csv_text(rows)
    raise UsageError(f"no CSV form for {key}")


def cmd_stats(args) -> int:
    doc = coco.parse_dataset(_read(args.gt))
    selected: dict[str, object] = {}
    if args.class_counts:
        selected["class_counts"] = {
            str(cid): n for cid, n in sorted(stats.class_counts(doc).items())
        }
    if args.min_annotations is not None:
        selected["selected_classes"] = stats.select_classes(doc, args.min_annotations)
    if args.cooccurrence:
        matrix = stats.cooccurrence(doc)
        if args.min_count is not None:
            matrix = stats.filter_cooccurrence(matrix, args.min_count)
        selected["cooccurrence"] = matrix.to_json_dict()
    if args.polygon_hist:
        max_points = _resolve(args.max_points, "MAX_POINTS", int, stats.DEFAULT_MAX_POINTS)
        selected["polygon_hist"] = stats.polygon_point_histogram(
            doc, max_points, bins=args.bins
        ).to_json_dict()
    if args.size_hist:
        hw, hh = stats.image_size_histogram(doc, bins=args.bins)
        selected["width_hist"] = hw.to_json_dict()
        selected["height_hist"] = hh.to_json_dict()
    if not selected:
        raise UsageError(
            "pick at least one statistic: --class-counts, --min-annotations N, "
            "--cooccurrence, --polygon-hist, --size-hist"
        )
    if args.format == "csv":
        if len(selected) != 1:
            raise UsageError("CSV output needs exactly one selected statistic")
        key, value = next(iter(selected.items()))
        _emit(_stats_csv(key, value))
    else:
        _emit(json.dumps(selected, sort_keys=True))
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import BenchService, create_app

    gt_path = _resolve(args.gt, "GT", str, None)
    if gt_path is None:
        raise UsageError("serve needs --gt or MASKBENCH_GT")
    log_path = _resolve(args.log, "LOG", str, None)
    if log_path is None:
        raise UsageError("serve needs --log or MASKBENCH_LOG")
    gt = coco.parse_dataset(_read(gt_path))
    svc = BenchService(
        gt,
        log_path,
        match_config=_match_config(args),
        max_payload_bytes=_resolve(args.max_payload, "MAX_PAYLOAD", int, 64 * 1024 * 1024),
        workers=_resolve(args.workers, "WORKERS", int, 2),
        timeout_seconds=_resolve(args.timeout, "TIMEOUT", float, 600.0),
    )
    try:
        uvicorn.run(
            create_app(svc),
            host=_resolve(args.host, "HOST", str, "127.0.0.1"),
            port=_resolve(args.port, "PORT", int, 8000),
            log_level="warning",
        )
    finally:
        svc.close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maskbench",
        description="COCO-style dataset tooling: validation, scoring, fusion, statistics",
    )
    subs = parser.add_subparsers(dest="subcommand", required=True)

    p = subs.add_parser("validate", help="check a dataset against the consistency rules")
    p.add_argument("dataset", help="path to a COCO annotation document")
    p.set_defaults(func=cmd_validate)

    p = subs.add_parser("fix-bboxes", help="recompute bboxes and areas from masks")
    p.add_argument("dataset", help="path to a COCO annotation document")
    p.add_argument("--out", default=None, help="write repaired dataset here instead of stdout")
    p.set_defaults(func=cmd_fix_bboxes)

    p = subs.add_parser("evaluate", help="score results against ground truth")
    p.add_argument("--gt", required=True, help="ground-truth annotation document")
    p.add_argument("--results", required=True, help="COCO results document")
    _add_match_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = subs.add_parser("fuse", help="merge detection sets from several sources")
    p.add_argument(
        "--inputs",
        action="append",
        required=True,
        help="COCO results document; repeat once per source",
    )
    p.add_argument("--group-iou", type=float, default=None, help="grouping threshold (default 0.5)")
    p.add_argument(
        "--singleton-factor",
        type=float,
        default=None,
        help="score factor for single-member groups (default: 1.0 for one source, 0.5 for several)",
    )
    p.add_argument("--score-agg", choices=["max", "mean"], default=None, help="group score rule")
    p.add_argument(
        "--iou-domain",
        dest="fusion_iou_domain",
        choices=["bbox", "mask"],
        default=None,
        help="overlap domain for grouping (default bbox)",
    )
    p.add_argument(
        "--area-source",
        choices=["mask", "bbox"],
        default=None,
        help="area term of the survivor weight (default mask)",
    )
    p.add_argument("--gt", default=None, help="optional dataset supplying image sizes")
    p.add_argument("--out", default=None, help="write fused results here instead of stdout")
    p.set_defaults(func=cmd_fuse)

    p = subs.add_parser("stats", help="dataset statistics")
    p.add_argument("--gt", required=True, help="dataset to summarize")
    p.add_argument("--class-counts", action="store_true", help="annotations per category")
    p.add_argument(
        "--min-annotations",
        type=int,
        default=None,
        help="also list categories with at least this many annotations",
    )
    p.add_argument("--cooccurrence", action="store_true", help="category co-occurrence matrix")
    p.add_argument(
        "--min-count",
        type=int,
        default=None,
        help="restrict the matrix to categories co-occurring more than this",
    )
    p.add_argument("--polygon-hist", action="store_true", help="polygon vertex-count histogram")
    p.add_argument(
        "--max-points", type=int, default=None, help="vertex-count cutoff (default 1500)"
    )
    p.add_argument("--size-hist", action="store_true", help="image width/height histograms")
    p.add_argument("--bins", type=int, default=stats.DEFAULT_BINS, help="histogram bins (default 50)")
    p.add_argument("--format", choices=["json", "csv"], default="json", help="output format")
    p.set_defaults(func=cmd_stats)

    p = subs.add_parser("serve", help="run the scoring service")
    p.add_argument("--gt", default=None, help="ground-truth annotation document")
    p.add_argument("--log", default=None, help="append-only submission log path")
    p.add_argument("--host", default=None, help="bind address (default 127.0.0.1)")
    p.add_argument("--port", type=int, default=None, help="bind port (default 8000)")
    p.add_argument("--workers", type=int, default=None, help="scoring threads (default 2)")
    p.add_argument(
        "--timeout", type=float, default=None, help="per-submission scoring budget in seconds"
    )
    p.add_argument(
        "--max-payload", type=int, default=None, help="submission size cap in bytes"
    )
    _add_match_flags(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # bad flag values surface as config validation errors
        print(f"error: Usage: {exc}", file=sys.stderr)
        return 2
    except MaskBenchError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: IO: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
