"""Resumable state-machine execution: job store, engine, worker pool."""

from docpipe.retry import RetryPolicy
from docpipe.orchestrator.store import JobStore, SimulatedCrash
from docpipe.orchestrator.engine import (
    Engine,
    PIPELINE_STAGES,
    TERMINAL_STAGES,
)
from docpipe.orchestrator.pool import WorkerPool

__all__ = [
    "RetryPolicy",
    "JobStore",
    "SimulatedCrash",
    "Engine",
    "WorkerPool",
    "PIPELINE_STAGES",
    "TERMINAL_STAGES",
]
