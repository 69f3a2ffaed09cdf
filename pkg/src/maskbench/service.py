"""Submission scoring service with a crash-safe leaderboard.

Every state change is one JSON line appended to the log (the submitted
payload rides along inline), so a restart replays the file and lands on
exactly the leaderboard the crashed process had.  Scoring runs on a
small thread pool; a per-submission watchdog fails submissions that
exceed the time budget, and a worker finishing after its watchdog fired
finds the status already settled and drops its result.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from . import coco
from .errors import MaskBenchError, NotFoundError, PayloadTooLargeError
from .evaluation import MatchConfig, evaluate

DEFAULT_MAX_PAYLOAD = 64 * 1024 * 1024
DEFAULT_TIMEOUT_SECONDS = 600.0

_STATUSES = ("queued", "scoring", "scored", "failed")


@dataclass
class SubmissionRecord:
    id: int
    received_at: str
    status: str = "queued"
    payload: str = ""
    report: dict | None = None
    error: str | None = None

    def to_json_dict(self) -> dict:
        blob = self.payload.encode("utf-8")
        return {
            "id": self.id,
            "received_at": self.received_at,
            "status": self.status,
            "results_ref": {
                "bytes": len(blob),
                "sha256": hashlib.sha256(blob).hexdigest(),
            },
            "report": self.report,
            "error": self.error,
        }


@dataclass
class LeaderboardEntry:
    submission_id: int
    map: float
    mar: float
    rank: int

    def to_json_dict(self) -> dict:
        return {
            "submission_id": self.submission_id,
            "mAP": self.map,
            "mAR": self.mar,
            "rank": self.rank,
        }


class BenchService:
    """Scores submitted results documents against one ground-truth dataset."""

    def __init__(
        self,
        gt_doc: coco.DatasetDoc,
        log_path,
        match_config: MatchConfig | None = None,
        max_payload_bytes: int = DEFAULT_MAX_PAYLOAD,
        workers: int = 2,
        timeout_seconds: float = DEFAULT_TIMEOUT_SECONDS,
    ):
        self._gt = gt_doc
        self._cfg = match_config or MatchConfig()
        self._max_payload = max_payload_bytes
        self._timeout = timeout_seconds
        self._lock = threading.Lock()
        self._subs: dict[int, SubmissionRecord] = {}
        self._next_id = 1
        self._timers: dict[int, threading.Timer] = {}
        self._log_path = Path(log_path)
        self._replay()
        self._log = open(self._log_path, "a", encoding="utf-8")
        self._pool = ThreadPoolExecutor(max_workers=max(1, workers))
        self._closed = False
        # submissions interrupted mid-flight by a crash start over
        for sub in self._subs.values():
            if sub.status in ("queued", "scoring"):
                sub.status = "queued"
                self._pool.submit(self._score, sub.id)

    # ---- persistence ----

    def _replay(self) -> None:
        if not self._log_path.exists():
            return
        with open(self._log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                rec = json.loads(line)
                event = rec["event"]
                if event == "submitted":
                    sub = SubmissionRecord(
                        id=rec["id"],
                        received_at=rec["received_at"],
                        payload=rec["payload"],
                    )
                    self._subs[sub.id] = sub
                    self._next_id = max(self._next_id, sub.id + 1)
                elif event == "scoring":
                    self._subs[rec["id"]].status = "scoring"
                elif event == "scored":
                    sub = self._subs[rec["id"]]
                    sub.status = "scored"
                    sub.report = rec["report"]
                elif event == "failed":
                    sub = self._subs[rec["id"]]
                    sub.status = "failed"
                    sub.error = rec["error"]

    def _append(self, record: dict) -> None:
        # caller holds the lock; one line per event keeps appends atomic
        self._log.write(json.dumps(record, sort_keys=True) + "\n")
        self._log.flush()

    # ---- operations ----

    def submit(self, payload: bytes | str) -> int:
        if isinstance(payload, bytes):
            text = payload.decode("utf-8", errors="replace")
            size = len(payload)
        else:
            text = payload
            size = len(payload.encode("utf-8"))
        if size > self._max_payload:
            raise PayloadTooLargeError(
                f"payload of {size} bytes exceeds cap {self._max_payload}"
            )
        with self._lock:
            sub = SubmissionRecord(
                id=self._next_id,
                received_at=datetime.now(timezone.utc).isoformat(),
                payload=text,
            )
            self._next_id += 1
            self._subs[sub.id] = sub
            self._append(
                {
                    "event": "submitted",
                    "id": sub.id,
                    "received_at": sub.received_at,
                    "payload": text,
                }
            )
        self._pool.submit(self._score, sub.id)
        return sub.id

    def get_submission(self, submission_id: int) -> SubmissionRecord:
        with self._lock:
            sub = self._subs.get(submission_id)
            if sub is None:
                raise NotFoundError(f"no submission with id {submission_id}")
            return sub

    def leaderboard(self) -> list[LeaderboardEntry]:
        with self._lock:
            scored = [s for s in self._subs.values() if s.status == "scored"]
        scored.sort(key=lambda s: (-s.report["mAP"], -s.report["mAR"], s.id))
        return [
            LeaderboardEntry(
                submission_id=s.id,
                map=s.report["mAP"],
                mar=s.report["mAR"],
                rank=i + 1,
            )
            for i, s in enumerate(scored)
        ]

    # ---- scoring ----

    def _transition(self, submission_id: int, status: str, **fields) -> bool:
        """Move a submission forward; returns False if it already settled."""
        with self._lock:
            sub = self._subs[submission_id]
            if sub.status in ("scored", "failed"):
                return False
            # fields land before the status flips so a lock-free reader
            # never sees "scored" without its report
            for k, v in fields.items():
                setattr(sub, k, v)
            sub.status = status
            self._append({"event": status, "id": submission_id, **fields})
            return True

    def _score(self, submission_id: int) -> None:
        if not self._transition(submission_id, "scoring"):
            return
        timer = threading.Timer(
            self._timeout,
            lambda: self._transition(
                submission_id,
                "failed",
                error=f"scoring exceeded {self._timeout:g}s time budget",
            ),
        )
        timer.daemon = True
        self._timers[submission_id] = timer
        timer.start()
        try:
            with self._lock:
                payload = self._subs[submission_id].payload
            dets = coco.parse_results(payload)
            report = evaluate(self._gt, dets, self._cfg)
            self._transition(
                submission_id, "scored", report=report.to_json_dict()
            )
        except MaskBenchError as exc:
            self._transition(
                submission_id, "failed", error=f"{exc.code}: {exc}"
            )
        except Exception as exc:  # scoring must never kill the worker
            self._transition(submission_id, "failed", error=str(exc))
        finally:
            timer.cancel()
            self._timers.pop(submission_id, None)

    # ---- lifecycle ----

    def wait_idle(self, timeout: float = 60.0) -> bool:
        """Block until no submission is queued or scoring; for tests."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            with self._lock:
                busy = any(
                    s.status in ("queued", "scoring") for s in self._subs.values()
                )
            if not busy:
                return True
            time.sleep(0.01)
        return False

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        for timer in list(self._timers.values()):
            timer.cancel()
        self._pool.shutdown(wait=True)
        self._log.close()


def create_app(service: BenchService):
    """FastAPI wrapper exposing the three HTTP endpoints."""
    app = FastAPI(title="maskbench scoring service")

    @app.post("/submissions")
    async def post_submission(request: Request):
        body = await request.body()
        try:
            sid = service.submit(body)
        except PayloadTooLargeError as exc:
            return JSONResponse(
                status_code=413, content={"error": exc.code, "message": str(exc)}
            )
        return {"id": sid}

    @app.get("/submissions/{submission_id}")
    async def get_submission(submission_id: int):
        try:
            sub = service.get_submission(submission_id)
        except NotFoundError as exc:
            return JSONResponse(
                status_code=404, content={"error": exc.code, "message": str(exc)}
            )
        return sub.to_json_dict()

    @app.get("/leaderboard")
    async def get_leaderboard():
        return [e.to_json_dict() for e in service.leaderboard()]

    return app
