"""Process-boundary bindings for the maskbench command line.

Every operation shells out to the ``maskbench`` CLI and speaks its file
formats, so a result here is the CLI's own output on the same inputs,
parsed.  Paths in, JSON-shaped data out.  Failures reported by the core
arrive as exceptions carrying the same code string the CLI prints.

The surface is deliberately file-path oriented: callers hand over paths
to COCO-style documents rather than in-memory arrays.  That keeps the
boundary small and the semantics identical with the command line, at
the cost of a process launch per call.  Calls block until the core
finishes; run several in threads if you need overlap, but do not share
a BoundHandle across concurrent callers.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import shlex
import subprocess
import sys
from pathlib import Path

from .errors import (
    BindingError,
    CoreError,
    MalformedStringError,
    NotFoundError,
    UsageError,
)
from .rle_string import rle_area, rle_string_decode, rle_string_encode

__all__ = [
    "BoundHandle",
    "bound_evaluate",
    "bound_fuse",
    "bound_fix_bboxes",
    "rle_string_encode",
    "rle_string_decode",
    "rle_area",
    "BindingError",
    "CoreError",
    "MalformedStringError",
    "NotFoundError",
    "UsageError",
]

_ERROR_LINE = re.compile(r"^error: ([A-Za-z][A-Za-z0-9]*): (.*)$")

# codes with a dedicated exception class; anything else becomes CoreError
_BY_CODE = {
    "NotFound": NotFoundError,
    "Usage": UsageError,
    "Malformed": MalformedStringError,
}


def _command() -> list[str]:
    """Base argv for the core CLI.

    MASKBENCH_CLI overrides it (split shell-style), e.g. to point at an
    installed ``maskbench`` script in another environment.  The default
    runs the module through the current interpreter, so no PATH lookup
    is involved.
    """
    override = os.environ.get("MASKBENCH_CLI")
    if override:
        return shlex.split(override)
    return [sys.executable, "-m", "maskbench.cli"]


def _raise_from(proc: subprocess.CompletedProcess) -> None:
    lines = [ln.strip() for ln in proc.stderr.strip().splitlines() if ln.strip()]
    for line in reversed(lines):
        m = _ERROR_LINE.match(line)
        if m:
            code, message = m.group(1), m.group(2)
            cls = _BY_CODE.get(code)
            if cls is not None:
                raise cls(message)
            raise CoreError(message, code=code)
    tail = lines[-1] if lines else f"exit status {proc.returncode}"
    if proc.returncode == 2:
        # argument-parser rejections skip the error: prefix
        raise UsageError(tail)
    raise CoreError(tail)


def _run(argv: list[str]) -> subprocess.CompletedProcess:
    proc = subprocess.run(
        _command() + argv, capture_output=True, text=True, check=False
    )
    if proc.returncode != 0:
        _raise_from(proc)
    return proc


class BoundHandle:
    """Pinned reference to a document the core reads by path.

    Construction checks the file exists and records a digest of its
    bytes, so a caller can tell later whether a document changed under
    a long experiment.  A handle is accepted anywhere a path is, and
    behaves exactly as the CLI does on the same bytes.
    """

    __slots__ = ("path", "sha256")

    def __init__(self, path: str | os.PathLike) -> None:
        p = Path(path)
        if not p.is_file():
            raise NotFoundError(f"no such file: {p}")
        self.path = str(p)
        self.sha256 = hashlib.sha256(p.read_bytes()).hexdigest()

    def __repr__(self) -> str:
        return f"BoundHandle({self.path!r}, sha256={self.sha256[:12]})"


def _as_path(spec, role: str) -> str:
    if isinstance(spec, BoundHandle):
        p = Path(spec.path)
    elif isinstance(spec, (str, os.PathLike)):
        p = Path(spec)
    else:
        raise UsageError(
            f"{role} must be a path or BoundHandle, not {type(spec).__name__}"
        )
    if not p.is_file():
        raise NotFoundError(f"{role}: no such file: {p}")
    return str(p)


# override keyword -> CLI flag; keywords follow the core config field names
_EVALUATE_FLAGS = {
    "iou_threshold": "--iou",
    "comparator": "--comparator",
    "interpolation": "--interpolation",
    "max_dets_per_image": "--max-dets",
    "iou_domain": "--iou-domain",
}

_FUSE_FLAGS = {
    "group_iou": "--group-iou",
    "singleton_factor": "--singleton-factor",
    "score_aggregation": "--score-agg",
    "iou_domain": "--iou-domain",
    "area_source": "--area-source",
}


def _flags(overrides: dict, table: dict[str, str], op: str) -> list[str]:
    argv: list[str] = []
    for key, value in overrides.items():
        flag = table.get(key)
        if flag is None:
            known = ", ".join(sorted(table))
            raise UsageError(f"{op} does not accept {key!r} (known: {known})")
        if value is None:
            continue
        argv += [flag, str(value)]
    return argv


def bound_evaluate(gt_path, results_path, **overrides) -> dict:
    """Score a results document against ground truth.

    Returns the evaluation report as a dict, numerically identical to
    what ``maskbench evaluate`` prints for the same files.  Keyword
    overrides map onto the CLI flags: iou_threshold, comparator,
    interpolation, max_dets_per_image, iou_domain.  A None override is
    ignored, leaving the core default in charge.
    """
    argv = [
        "evaluate",
        "--gt",
        _as_path(gt_path, "gt_path"),
        "--results",
        _as_path(results_path, "results_path"),
    ]
    argv += _flags(overrides, _EVALUATE_FLAGS, "bound_evaluate")
    return json.loads(_run(argv).stdout)


def bound_fuse(results_paths, gt_path=None, **overrides) -> list:
    """Merge detection documents from several sources into one list.

    ``results_paths`` must be a sequence of paths (or handles), one per
    source; source identity follows list position, which feeds the
    survivor tie-break.  ``gt_path`` optionally names a dataset that
    supplies image sizes, letting polygon masks be clipped to the frame
    as the CLI would with --gt.  Other overrides: group_iou,
    singleton_factor, score_aggregation, iou_domain, area_source.
    """
    if isinstance(results_paths, (str, os.PathLike, BoundHandle)):
        raise UsageError("bound_fuse expects a list of results paths")
    paths = list(results_paths)
    if not paths:
        raise UsageError("bound_fuse needs at least one results document")
    argv = ["fuse"]
    for p in paths:
        argv += ["--inputs", _as_path(p, "results path")]
    if gt_path is not None:
        argv += ["--gt", _as_path(gt_path, "gt_path")]
    argv += _flags(overrides, _FUSE_FLAGS, "bound_fuse")
    return json.loads(_run(argv).stdout)


def bound_fix_bboxes(dataset_path, out_path=None) -> tuple[dict, dict]:
    """Recompute bboxes and areas of a dataset from its masks.

    Returns (repaired document, repair report), both parsed from the
    CLI.  With ``out_path`` the repaired document is also written to
    that file, exactly as ``maskbench fix-bboxes --out`` does.
    """
    argv = ["fix-bboxes", _as_path(dataset_path, "dataset_path")]
    if out_path is not None:
        argv += ["--out", str(out_path)]
    proc = _run(argv)
    # the repair report is the single stderr line
    report = json.loads(proc.stderr.strip().splitlines()[-1])
    if out_path is not None:
        doc = json.loads(Path(out_path).read_text(encoding="utf-8"))
    else:
        doc = json.loads(proc.stdout)
    return doc, report
