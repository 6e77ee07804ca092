"""Crash-safe on-disk job store.

Layout under the store root:

    jobs/<job_id>/record            one JSON record per job
    jobs/<job_id>/stage_<name>.out  persisted stage outputs
    jobs/<job_id>/results.json      consolidated results for completed jobs
    dead_letter/<job_id>            dead-letter records
    events.log                      line-delimited completion events
    corrections.log                 append-only review correction history

Every persist is an atomic write-rename. A persistence boundary hook fires
after each completed persist; fault-injection tests crash there and the
resume path must recover from any prefix of boundaries.
"""
from __future__ import annotations

import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from docpipe.errors import JobNotFound

BoundaryHook = Callable[[str], None]


class SimulatedCrash(BaseException):
    """Raised by fault-injection hooks; inherits BaseException so ordinary
    error handling never swallows it."""


@dataclass
class JobRecord:
    """Persisted orchestration state for one job."""

    job_id: str
    packet_id: str
    packet_path: str
    config_hash: str = ""
    stage: str = "queued"
    attempts: dict = field(default_factory=dict)
    completed_stages: list = field(default_factory=list)
    stage_outputs: dict = field(default_factory=dict)
    error_log: list = field(default_factory=list)
    created_at: float = 0.0
    updated_at: float = 0.0
    review: dict | None = None
    routing: dict | None = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "packet_id": self.packet_id,
            "packet_path": self.packet_path,
            "config_hash": self.config_hash,
            "stage": self.stage,
            "attempts": self.attempts,
            "completed_stages": self.completed_stages,
            "stage_outputs": self.stage_outputs,
            "error_log": self.error_log,
            "created_at": self.created_at,
            "updated_at": self.updated_at,
            "review": self.review,
            "routing": self.routing,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "JobRecord":
        return cls(
            job_id=d["job_id"],
            packet_id=d["packet_id"],
            packet_path=d["packet_path"],
            config_hash=d.get("config_hash", ""),
            stage=d.get("stage", "queued"),
            attempts=dict(d.get("attempts", {})),
            completed_stages=list(d.get("completed_stages", [])),
            stage_outputs=dict(d.get("stage_outputs", {})),
            error_log=list(d.get("error_log", [])),
            created_at=d.get("created_at", 0.0),
            updated_at=d.get("updated_at", 0.0),
            review=d.get("review"),
            routing=d.get("routing"),
        )


class JobStore:
    def __init__(self, root: str | Path, boundary_hook: BoundaryHook | None = None):
        self.root = Path(root)
        self.jobs_dir = self.root / "jobs"
        self.dead_letter_dir = self.root / "dead_letter"
        self.events_path = self.root / "events.log"
        self.corrections_path = self.root / "corrections.log"
        self.reports_dir = self.root / "reports"
        self.boundary_hook = boundary_hook
        self._append_lock = threading.Lock()
        self.jobs_dir.mkdir(parents=True, exist_ok=True)
        self.dead_letter_dir.mkdir(parents=True, exist_ok=True)

    # -- primitives ------------------------------------------------------------

    def _boundary(self, label: str):
        if self.boundary_hook is not None:
            self.boundary_hook(label)

    def _write_atomic(self, path: Path, payload: dict, label: str):
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_name(path.name + ".tmp")
        tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        os.replace(tmp, path)
        self._boundary(label)

    @staticmethod
    def _read_json(path: Path) -> dict:
        return json.loads(path.read_text())

    def _append_line(self, path: Path, payload: dict, label: str):
        with self._append_lock:
            with open(path, "a") as fh:
                fh.write(json.dumps(payload, sort_keys=True) + "\n")
                fh.flush()
        self._boundary(label)

    @staticmethod
    def _read_lines(path: Path) -> list[dict]:
        if not path.exists():
            return []
        records = []
        for line in path.read_text().splitlines():
            line = line.strip()
            if not line:
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError:
                continue  # tolerate a torn trailing line after a crash
        return records

    # -- job records -------------------------------------------------------------

    def job_dir(self, job_id: str) -> Path:
        return self.jobs_dir / job_id

    def record_path(self, job_id: str) -> Path:
        return self.job_dir(job_id) / "record"

    def save_record(self, record: JobRecord):
        record.updated_at = time.time()
        self._write_atomic(self.record_path(record.job_id), record.to_dict(), f"record:{record.job_id}")

    def load_record(self, job_id: str) -> JobRecord:
        path = self.record_path(job_id)
        if not path.exists():
            raise JobNotFound(f"no job {job_id!r}")
        return JobRecord.from_dict(self._read_json(path))

    def list_job_ids(self) -> list[str]:
        if not self.jobs_dir.exists():
            return []
        return sorted(p.name for p in self.jobs_dir.iterdir() if p.is_dir())

    # -- stage outputs -------------------------------------------------------------

    def stage_output_path(self, job_id: str, stage: str) -> Path:
        return self.job_dir(job_id) / f"stage_{stage}.out"

    def has_stage_output(self, job_id: str, stage: str) -> bool:
        return self.stage_output_path(job_id, stage).exists()

    def save_stage_output(self, job_id: str, stage: str, payload: dict):
        self._write_atomic(
            self.stage_output_path(job_id, stage), payload, f"stage:{job_id}:{stage}"
        )

    def load_stage_output(self, job_id: str, stage: str) -> dict:
        return self._read_json(self.stage_output_path(job_id, stage))

    # -- results ---------------------------------------------------------------------

    def results_path(self, job_id: str) -> Path:
        return self.job_dir(job_id) / "results.json"

    def save_results(self, job_id: str, payload: dict):
        self._write_atomic(self.results_path(job_id), payload, f"results:{job_id}")

    def load_results(self, job_id: str) -> dict:
        return self._read_json(self.results_path(job_id))

    # -- dead letters -------------------------------------------------------------------

    def dead_letter_path(self, job_id: str) -> Path:
        return self.dead_letter_dir / job_id

    def save_dead_letter(self, payload: dict):
        self._write_atomic(
            self.dead_letter_path(payload["job_id"]), payload, f"dead_letter:{payload['job_id']}"
        )

    def load_dead_letters(self) -> list[dict]:
        return [self._read_json(p) for p in sorted(self.dead_letter_dir.iterdir())]

    # -- completion events -----------------------------------------------------------------

    def append_event(self, event: dict) -> bool:
        """Append a completion event unless one exists for the job (idempotent dedup)."""
        job_id = event["job_id"]
        if any(e.get("job_id") == job_id for e in self.read_events()):
            return False
        self._append_line(self.events_path, event, f"event:{job_id}")
        return True

    def read_events(self) -> list[dict]:
        return self._read_lines(self.events_path)

    # -- corrections --------------------------------------------------------------------------

    def append_corrections(self, records: list[dict]):
        for record in records:
            self._append_line(self.corrections_path, record, "correction")

    def read_corrections(self) -> list[dict]:
        return self._read_lines(self.corrections_path)
