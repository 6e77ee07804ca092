"""Bounded worker pool: per-stage FIFO queues, per-stage concurrency limits.

Each pipeline stage owns a queue and as many worker threads as its limit, so
at no instant do more than ``limit`` tasks of one stage run. Jobs hop from
queue to queue as the engine advances them; terminal and awaiting-review
jobs park. Shutdown stops intake, drains in-flight steps, and leaves the
persisted state resumable.
"""
from __future__ import annotations

import logging
import queue
import threading

from docpipe.orchestrator.engine import (
    AWAITING_REVIEW,
    PIPELINE_STAGES,
    TERMINAL_STAGES,
    Engine,
)
from docpipe.orchestrator.store import SimulatedCrash

logger = logging.getLogger(__name__)


class WorkerPool:
    def __init__(self, engine: Engine, stage_limits: dict | None = None):
        self.engine = engine
        limits = dict(engine.config.stage_limits)
        limits.update(stage_limits or {})
        self.stage_limits = {stage: max(1, int(limits.get(stage, 1))) for stage in PIPELINE_STAGES}
        self._queues: dict[str, queue.Queue] = {stage: queue.Queue() for stage in PIPELINE_STAGES}
        self._threads: list[threading.Thread] = []
        self._stop = threading.Event()
        self._cv = threading.Condition()
        self._inflight = 0
        self.crash: BaseException | None = None

    # -- lifecycle ---------------------------------------------------------------

    def start(self) -> "WorkerPool":
        if self._threads:
            return self
        self._stop.clear()
        for stage in PIPELINE_STAGES:
            for i in range(self.stage_limits[stage]):
                thread = threading.Thread(
                    target=self._worker, args=(stage,), name=f"docpipe-{stage}-{i}", daemon=True
                )
                thread.start()
                self._threads.append(thread)
        return self

    def shutdown(self):
        """Stop workers after their current step; queued jobs stay persisted."""
        self._stop.set()
        for thread in self._threads:
            thread.join(timeout=30)
        self._threads.clear()

    # -- intake ------------------------------------------------------------------

    def submit(self, job_id: str):
        record = self.engine.store.load_record(job_id)
        if record.stage in TERMINAL_STAGES or record.stage == AWAITING_REVIEW:
            return
        with self._cv:
            self._inflight += 1
        stage = record.stage if record.stage in PIPELINE_STAGES else PIPELINE_STAGES[0]
        self._queues[stage].put(job_id)

    def _park(self):
        with self._cv:
            self._inflight -= 1
            self._cv.notify_all()

    # -- workers --------------------------------------------------------------------

    def _worker(self, stage: str):
        q = self._queues[stage]
        while not self._stop.is_set():
            try:
                job_id = q.get(timeout=0.05)
            except queue.Empty:
                continue
            try:
                next_stage = self.engine.step(job_id)
            except SimulatedCrash as exc:
                self.crash = exc
                self._stop.set()
                self._park()
                return
            except Exception:
                logger.exception("job %s: unexpected worker error; job left for resume", job_id)
                self._park()
                continue
            if next_stage in PIPELINE_STAGES:
                self._queues[next_stage].put(job_id)
            else:
                self._park()

    # -- quiescence --------------------------------------------------------------------

    def wait_quiescent(self, timeout: float | None = None) -> bool:
        """Block until every submitted job parked (terminal or awaiting review)."""
        with self._cv:
            return self._cv.wait_for(lambda: self._inflight == 0, timeout=timeout)
