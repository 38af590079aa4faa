"""Embedded file-backed job store.

All state lives in one append-only JSONL log under the data directory. The
log is replayed on open, so jobs and results survive restarts byte-for-byte;
a completed job's results are immutable and queries over them are repeatable.
Writes are serialized through a single lock; reads hit in-memory state.
"""
from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .embeddings import Utterance
from .errors import JobNotCompleted, JobNotFound

LOG_NAME = "store.log"

QUEUED = "queued"
RUNNING = "running"
COMPLETED = "completed"
FAILED = "failed"

_TRANSITIONS = {QUEUED: {RUNNING}, RUNNING: {COMPLETED, FAILED}}


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass
class BatchJob:
    id: str
    status: str
    created_at: str
    finished_at: str | None = None
    counts: dict | None = None  # {total, detected, discovered} once completed
    config_snapshot: dict = field(default_factory=dict)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "status": self.status,
            "created_at": self.created_at,
            "finished_at": self.finished_at,
            "counts": self.counts,
            "config_snapshot": self.config_snapshot,
            "error": self.error,
        }


@dataclass(frozen=True)
class ResultRecord:
    job_id: str
    utterance_id: str
    text: str
    label: str
    confidence: float
    source: str  # "detected" | "discovered"
    cluster_id: int | None = None  # present iff discovered
    distance: float | None = None  # present iff detected

    def __post_init__(self):
        if self.source not in ("detected", "discovered"):
            raise ValueError(f"bad source {self.source!r}")
        if (self.source == "discovered") != (self.cluster_id is not None):
            raise ValueError("cluster_id present iff source=discovered")
        if (self.source == "detected") != (self.distance is not None):
            raise ValueError("distance present iff source=detected")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0,1]")

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "utterance_id": self.utterance_id,
            "text": self.text,
            "label": self.label,
            "confidence": self.confidence,
            "source": self.source,
            "cluster_id": self.cluster_id,
            "distance": self.distance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ResultRecord":
        return cls(
            job_id=d["job_id"],
            utterance_id=d["utterance_id"],
            text=d["text"],
            label=d["label"],
            confidence=d["confidence"],
            source=d["source"],
            cluster_id=d.get("cluster_id"),
            distance=d.get("distance"),
        )


class Store:
    """Single-directory persistent store with an append-only write log."""

    def __init__(self, data_dir: str | os.PathLike):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.data_dir / LOG_NAME
        self._lock = threading.Lock()
        self._jobs: dict[str, BatchJob] = {}
        self._inputs: dict[str, list[Utterance]] = {}
        self._results: dict[str, list[ResultRecord]] = {}
        self._replay()
        self._recover()

    # --- log machinery ------------------------------------------------------

    def _append_locked(self, event: dict) -> None:
        # caller holds self._lock
        line = json.dumps(event, sort_keys=True)
        with open(self.log_path, "a", encoding="utf-8") as f:
            f.write(line)
            f.write("\n")
            f.flush()
            os.fsync(f.fileno())

    def _append(self, event: dict) -> None:
        with self._lock:
            self._append_locked(event)

    def _replay(self) -> None:
        if not self.log_path.exists():
            return
        with open(self.log_path, encoding="utf-8") as f:
            raw = f.read()
        lines = raw.split("\n")
        # a trailing partial line (interrupted write) is ignored
        complete, tail = lines[:-1], lines[-1]
        for i, line in enumerate(complete, start=1):
            if not line:
                continue
            self._apply(json.loads(line))
        if tail.strip():
            try:
                self._apply(json.loads(tail))
            except json.JSONDecodeError:
                pass

    def _apply(self, event: dict) -> None:
        kind = event["event"]
        if kind == "job_queued":
            job = BatchJob(
                id=event["job_id"],
                status=QUEUED,
                created_at=event["created_at"],
                config_snapshot=event["config_snapshot"],
            )
            self._jobs[job.id] = job
            self._inputs[job.id] = [
                Utterance(id=u["id"], text=u["text"], gold_label=u.get("label"))
                for u in event["utterances"]
            ]
        elif kind == "job_running":
            self._jobs[event["job_id"]].status = RUNNING
        elif kind == "job_completed":
            job = self._jobs[event["job_id"]]
            job.status = COMPLETED
            job.finished_at = event["finished_at"]
            job.counts = event["counts"]
            self._results[job.id] = [ResultRecord.from_dict(r) for r in event["records"]]
        elif kind == "job_failed":
            job = self._jobs[event["job_id"]]
            job.status = FAILED
            job.finished_at = event["finished_at"]
            job.error = event["error"]

    def _recover(self) -> None:
        # jobs caught mid-flight by a crash/restart cannot be resumed
        for job in list(self._jobs.values()):
            if job.status in (QUEUED, RUNNING):
                if job.status == QUEUED:
                    self._transition(job.id, RUNNING, {"event": "job_running", "job_id": job.id})
                finished = _utcnow()
                self._append(
                    {
                        "event": "job_failed",
                        "job_id": job.id,
                        "finished_at": finished,
                        "error": "interrupted by restart",
                    }
                )
                job.status = FAILED
                job.finished_at = finished
                job.error = "interrupted by restart"

    def _transition(self, job_id: str, new_status: str, event: dict) -> None:
        job = self._jobs[job_id]
        if new_status not in _TRANSITIONS.get(job.status, set()):
            raise ValueError(f"illegal transition {job.status} -> {new_status}")
        self._append(event)
        job.status = new_status

    # --- ops -----------------------------------------------------------------

    def create_job(self, utterances: list[Utterance], config_snapshot: dict) -> BatchJob:
        created = _utcnow()
        # id allocation, durable append, and registration are one atomic step,
        # so concurrent ingests can never share an id
        with self._lock:
            job_id = f"job-{len(self._jobs) + 1:06d}"
            self._append_locked(
                {
                    "event": "job_queued",
                    "job_id": job_id,
                    "created_at": created,
                    "config_snapshot": config_snapshot,
                    "utterances": [
                        {"id": u.id, "text": u.text, "label": u.gold_label} for u in utterances
                    ],
                }
            )
            job = BatchJob(
                id=job_id, status=QUEUED, created_at=created, config_snapshot=config_snapshot
            )
            self._jobs[job_id] = job
            self._inputs[job_id] = list(utterances)
        return job

    def get_job(self, job_id: str) -> BatchJob:
        if job_id not in self._jobs:
            raise JobNotFound(job_id)
        return self._jobs[job_id]

    def list_jobs(self) -> list[BatchJob]:
        return sorted(self._jobs.values(), key=lambda j: j.id)

    def get_utterances(self, job_id: str) -> list[Utterance]:
        self.get_job(job_id)
        return list(self._inputs[job_id])

    def mark_running(self, job_id: str) -> None:
        self.get_job(job_id)
        self._transition(job_id, RUNNING, {"event": "job_running", "job_id": job_id})

    def complete_job(self, job_id: str, records: list[ResultRecord], counts: dict) -> BatchJob:
        job = self.get_job(job_id)
        if counts["total"] != counts["detected"] + counts["discovered"]:
            raise ValueError("counts.total must equal detected + discovered")
        finished = _utcnow()
        self._transition(
            job_id,
            COMPLETED,
            {
                "event": "job_completed",
                "job_id": job_id,
                "finished_at": finished,
                "counts": counts,
                "records": [r.to_dict() for r in records],
            },
        )
        job.finished_at = finished
        job.counts = counts
        self._results[job_id] = list(records)
        return job

    def fail_job(self, job_id: str, error: str) -> BatchJob:
        job = self.get_job(job_id)
        finished = _utcnow()
        self._transition(
            job_id,
            FAILED,
            {"event": "job_failed", "job_id": job_id, "finished_at": finished, "error": error},
        )
        job.finished_at = finished
        job.error = error
        return job

    def results(self, job_id: str) -> list[ResultRecord]:
        job = self.get_job(job_id)
        if job.status != COMPLETED:
            raise JobNotCompleted(job_id, job.status)
        return list(self._results[job_id])
