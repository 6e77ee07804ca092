"""Resource-oriented service API consumed by the review UI.

Bearer tokens map to the admin/reviewer roles. Read endpoints never mutate
state; review submissions funnel through the engine's per-job single-writer
discipline, so a second decision for the same job gets 409.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from fastapi import Depends, FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from docpipe.errors import (
    DecisionConflict,
    IncompleteDecision,
    JobNotFound,
    KindMismatch,
    ParseError,
    Unauthorized,
    ValidationError,
)
from docpipe.orchestrator.engine import Engine, job_status
from docpipe.orchestrator.pool import WorkerPool

DEFAULT_TOKENS = {"admin-token": {"role": "admin", "name": "admin"},
                  "reviewer-token": {"role": "reviewer", "name": "reviewer"}}


def load_tokens(path: str | Path | None) -> dict:
    """Tokens file: {token: role} or {token: {role, name}}."""
    if path is None:
        return dict(DEFAULT_TOKENS)
    data = json.loads(Path(path).read_text())
    tokens = {}
    for token, value in data.items():
        if isinstance(value, str):
            tokens[token] = {"role": value, "name": value}
        else:
            tokens[token] = {"role": value["role"], "name": value.get("name", value["role"])}
    return tokens


class SubmitRequest(BaseModel):
    packet_path: str


class ActionRow(BaseModel):
    section_id: str
    name: str
    action: str
    value: Any = None


class ReviewSubmission(BaseModel):
    actions: list[ActionRow] = Field(default_factory=list)


def create_app(engine: Engine, pool: WorkerPool | None, tokens: dict) -> FastAPI:
    app = FastAPI(title="docpipe", version="0.1.0")
    # The review UI is served from its own origin.
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    def identity(request: Request) -> dict:
        header = request.headers.get("Authorization", "")
        token = header.removeprefix("Bearer ").strip()
        entry = tokens.get(token)
        if not header.startswith("Bearer ") or entry is None:
            raise HTTPException(status_code=401, detail="missing or unknown bearer token")
        return entry

    def record_for(job_id: str):
        try:
            return engine.store.load_record(job_id)
        except JobNotFound:
            raise HTTPException(status_code=404, detail=f"no job {job_id}")

    def stage_output(job_id: str, name: str):
        if not engine.store.has_stage_output(job_id, name):
            return None
        return engine.store.load_stage_output(job_id, name)

    @app.post("/jobs")
    def submit_job(body: SubmitRequest, identity: dict = Depends(identity)):
        try:
            job_id = engine.submit(body.packet_path)
        except (ParseError, ValidationError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if pool is not None:
            pool.submit(job_id)
        return {"job_id": job_id}

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str, identity: dict = Depends(identity)):
        return job_status(record_for(job_id))

    @app.get("/jobs/{job_id}/sections")
    def get_sections(job_id: str, identity: dict = Depends(identity)):
        record_for(job_id)
        return {"sections": (stage_output(job_id, "split") or {}).get("sections")}

    @app.get("/jobs/{job_id}/extraction")
    def get_extraction(job_id: str, identity: dict = Depends(identity)):
        record = record_for(job_id)
        payload = stage_output(job_id, "extract")
        return {
            "extraction": payload.get("results") if payload else None,
            "stage": record.stage,
            "error_log": record.error_log,
        }

    @app.get("/jobs/{job_id}/intermediates")
    def get_intermediates(job_id: str, identity: dict = Depends(identity)):
        record = record_for(job_id)
        try:
            packet = engine._packet(record)
            ocr = [page.to_dict() for page in packet.pages]
        except Exception:
            ocr = None
        classify = stage_output(job_id, "classify")
        extract = stage_output(job_id, "extract")
        return {
            "job_id": job_id,
            "stage": record.stage,
            "ocr": ocr,
            "bio_labels": classify.get("labels") if classify else None,
            "warnings": classify.get("warnings") if classify else None,
            "sections": (stage_output(job_id, "split") or {}).get("sections"),
            "extraction": extract.get("results") if extract else None,
            "raw_outputs": (
                [{"section_id": r["section_id"], "raw_response": r.get("raw_response")}
                 for r in extract["results"]]
                if extract
                else None
            ),
            "confidence": (stage_output(job_id, "assess") or {}).get("reports"),
            "determinations": (stage_output(job_id, "validate") or {}).get("determinations"),
            "error_log": record.error_log,
        }

    @app.get("/jobs/{job_id}/determinations")
    def get_determinations(job_id: str, identity: dict = Depends(identity)):
        record_for(job_id)
        return {"determinations": (stage_output(job_id, "validate") or {}).get("determinations")}

    @app.get("/review/queue")
    def review_queue(identity: dict = Depends(identity)):
        return {"queue": engine.review_queue()}

    @app.post("/review/{job_id}")
    def post_review(job_id: str, body: ReviewSubmission, identity: dict = Depends(identity)):
        record_for(job_id)
        try:
            record = engine.apply_review_decision(
                job_id,
                reviewer=identity["name"],
                role=identity["role"],
                actions=[row.model_dump() for row in body.actions],
            )
        except DecisionConflict as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except Unauthorized as exc:
            raise HTTPException(status_code=403, detail=str(exc))
        except (IncompleteDecision, KindMismatch, ValidationError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        if pool is not None:
            pool.submit(job_id)
        else:
            engine.run(job_id)
        return {"status": "accepted", "stage": record.stage}

    @app.get("/reports/latest")
    def latest_report(identity: dict = Depends(identity)):
        path = engine.store.reports_dir / "latest.json"
        if not path.exists():
            raise HTTPException(status_code=404, detail="no report yet")
        return json.loads(path.read_text())

    return app
