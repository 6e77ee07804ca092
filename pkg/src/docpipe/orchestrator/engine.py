"""Pipeline state machine: classify -> split -> extract -> assess -> route ->
validate, with persisted stage outputs, bounded retries, dead-letter capture,
and review pauses.

Crash safety: every stage persists its output before the job record advances,
and the resume path treats a persisted output as proof the stage ran. A job
interrupted at any persistence boundary therefore re-executes at most the one
stage whose output never landed, and never re-executes a completed one.
"""
from __future__ import annotations

import hashlib
import json
import logging
import random
import threading
import time
from collections import defaultdict

from docpipe import assessment
from docpipe.config import EngineConfig
from docpipe.core.loaders import load_packet
from docpipe.core.model import ClassSchema, DocumentPacket, OTHER_CLASS
from docpipe.errors import (
    BackendError,
    DecisionConflict,
    JobNotFound,
    ParseError,
    ValidationError,
)
from docpipe.extraction import ExtractionResult, ExtractorBackend, extract_section
from docpipe.orchestrator.store import JobRecord, JobStore
from docpipe.rules import RuleSpec, validate_all
from docpipe.segmentation import (
    BioLabel,
    ClassifierBackend,
    Section,
    classify_pages,
    decode_bio,
)

logger = logging.getLogger(__name__)

PIPELINE_STAGES = ("classifying", "splitting", "extracting", "assessing", "validating")
TERMINAL_STAGES = ("complete", "failed", "dead_lettered")
AWAITING_REVIEW = "awaiting_review"

_OUTPUT_NAMES = {
    "classifying": "classify",
    "splitting": "split",
    "extracting": "extract",
    "assessing": "assess",
    "validating": "validate",
}


class _StageExhausted(Exception):
    """Internal: a stage consumed its retry budget on backend errors."""

    def __init__(self, cause: str, attempts: int):
        super().__init__(cause)
        self.cause = cause
        self.attempts = attempts


def _sanitize(name: str) -> str:
    return "".join(c if c.isalnum() or c in "._-" else "_" for c in name)


def config_fingerprint(classes: list[ClassSchema], rules: list[RuleSpec], config: EngineConfig) -> str:
    payload = json.dumps(
        {
            "classes": [c.to_dict() for c in classes],
            "rules": [r.rule_id + ":" + r.condition for r in rules],
            "modality": config.modality,
            "extractor": config.extractor_backend,
            "classifier": config.classifier_backend,
            "few_shot": config.few_shot,
            "hitl": config.hitl_enabled,
            "threshold": config.confidence_threshold,
        },
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


class Engine:
    """Drives jobs through the pipeline over a crash-safe job store."""

    def __init__(
        self,
        config: EngineConfig,
        store: JobStore,
        classes: list[ClassSchema],
        rules: list[RuleSpec] | None = None,
        classifier: ClassifierBackend | None = None,
        extractor: ExtractorBackend | None = None,
        price_table: dict | None = None,
        sleeper=time.sleep,
        rng: random.Random | None = None,
        stage_effect_hook=None,
    ):
        if classifier is None or extractor is None:
            from docpipe.backends import make_classifier_backend, make_extractor_backend

            classifier = classifier or make_classifier_backend(config.classifier_backend, config)
            extractor = extractor or make_extractor_backend(config.extractor_backend, config)
        self.config = config
        self.store = store
        self.classes = list(classes)
        self.rules = list(rules or [])
        self.classifier = classifier
        self.extractor = extractor
        self.price_table = price_table or {}
        self.sleeper = sleeper
        self.rng = rng or random.Random()
        self.stage_effect_hook = stage_effect_hook
        self.config_hash = config_fingerprint(self.classes, self.rules, config)
        self._locks: dict[str, threading.Lock] = defaultdict(threading.Lock)
        self._locks_guard = threading.Lock()
        self._packets: dict[str, DocumentPacket] = {}
        self._schema_by_name = {c.class_name: c for c in self.classes}

    # -- intake ---------------------------------------------------------------

    def _lock_for(self, job_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks[job_id]

    def submit(self, packet_path: str) -> str:
        """Register a packet; idempotent per (packet_id, config hash)."""
        packet = load_packet(packet_path)
        job_id = f"{_sanitize(packet.packet_id)}-{self.config_hash[:8]}"
        with self._lock_for(job_id):
            try:
                existing = self.store.load_record(job_id)
            except JobNotFound:
                existing = None
            if existing is not None:
                return job_id
            record = JobRecord(
                job_id=job_id,
                packet_id=packet.packet_id,
                packet_path=str(packet_path),
                config_hash=self.config_hash,
                stage="queued",
                created_at=time.time(),
            )
            self.store.save_record(record)
        return job_id

    def _packet(self, record: JobRecord) -> DocumentPacket:
        cached = self._packets.get(record.job_id)
        if cached is None:
            cached = load_packet(record.packet_path)
            self._packets[record.job_id] = cached
        return cached

    # -- stage execution ----------------------------------------------------------

    def _effect(self, job_id: str, stage: str):
        if self.stage_effect_hook is not None:
            self.stage_effect_hook(job_id, stage)

    def _run_stage_with_retries(self, record: JobRecord, stage: str) -> dict:
        policy = self.config.retry
        while True:
            attempt = record.attempts.get(stage, 0) + 1
            if attempt > policy.max_attempts:
                raise _StageExhausted(
                    f"{stage}: retry budget exhausted", attempts=policy.max_attempts
                )
            record.attempts[stage] = attempt
            self.store.save_record(record)
            try:
                self._effect(record.job_id, stage)
                return self._execute(record, stage)
            except BackendError as exc:
                record.error_log.append(f"{stage} attempt {attempt}: {exc}")
                self.store.save_record(record)
                if attempt >= policy.max_attempts:
                    raise _StageExhausted(str(exc), attempts=attempt) from exc
                self.sleeper(policy.delay(attempt, self.rng))

    def _execute(self, record: JobRecord, stage: str) -> dict:
        packet = self._packet(record)
        if stage == "classifying":
            labels = classify_pages(packet, self.classes, self.classifier)
            return {"labels": [label.to_dict() for label in labels]}

        if stage == "splitting":
            labels = self._labels(record)
            sections = decode_bio(labels)
            return {"sections": [s.to_dict() for s in sections]}

        if stage == "extracting":
            sections = self._sections(record)
            results = []
            for section in sections:
                schema = self._schema_by_name.get(section.class_name)
                if schema is None or section.class_name == OTHER_CLASS or not schema.attributes:
                    continue  # nothing to extract for unconfigured or reserved classes
                result = extract_section(
                    section,
                    packet,
                    schema,
                    self.extractor,
                    modality=self.config.modality,
                    policy=self.config.retry,
                    few_shot=self.config.few_shot,
                    backend_name=self.config.extractor_backend,
                    price_table=self.price_table,
                    sleeper=self.sleeper,
                    rng=self.rng,
                )
                if result.failure_kind == "backend":
                    # Infrastructure failure: the section consumed the whole
                    # retry budget, so the job dead-letters immediately.
                    record.attempts[stage] = self.config.retry.max_attempts
                    raise _StageExhausted(
                        result.failure_reason or "backend failure",
                        attempts=self.config.retry.max_attempts,
                    )
                results.append(result)
            return {"results": [r.to_dict() for r in results]}

        if stage == "assessing":
            sections = {s.section_id: s for s in self._sections(record)}
            reports = []
            triggers = []
            for result in self._extraction_results(record):
                if result.status != "ok":
                    continue
                lines = self._section_lines(packet, sections[result.section_id])
                report = assessment.assess(result, lines, self.config.confidence_threshold)
                reports.append(report)
                decision = assessment.route(
                    report, self.config.hitl_enabled, self.config.confidence_threshold
                )
                if decision.outcome == "review":
                    triggers.extend(
                        {"section_id": result.section_id, "name": name}
                        for name in decision.trigger_attributes
                    )
            outcome = "review" if triggers else "auto_approve"
            return {
                "reports": [r.to_dict() for r in reports],
                "routing": {
                    "outcome": outcome,
                    "trigger_attributes": triggers,
                    "threshold_used": self.config.confidence_threshold,
                },
            }

        if stage == "validating":
            sections = {s.section_id: s for s in self._sections(record)}
            pairs = [
                (sections[r.section_id], r)
                for r in self._extraction_results(record)
                if r.section_id in sections
            ]
            determinations = validate_all(self.rules, pairs)
            return {
                "determinations": [
                    {"rule_id": rule_id, **det.to_dict()} for rule_id, det in determinations
                ]
            }

        raise AssertionError(f"unknown stage {stage!r}")

    # -- persisted-output readers ---------------------------------------------------

    def _labels(self, record: JobRecord) -> list[BioLabel]:
        payload = self.store.load_stage_output(record.job_id, "classify")
        return [BioLabel.from_dict(d) for d in payload["labels"]]

    def _sections(self, record: JobRecord) -> list[Section]:
        payload = self.store.load_stage_output(record.job_id, "split")
        return [Section.from_dict(d) for d in payload["sections"]]

    def _extraction_results(self, record: JobRecord) -> list[ExtractionResult]:
        payload = self.store.load_stage_output(record.job_id, "extract")
        return [ExtractionResult.from_dict(d) for d in payload["results"]]

    @staticmethod
    def _section_lines(packet: DocumentPacket, section: Section):
        lines = []
        for idx in section.page_indices:
            lines.extend(packet.pages[idx].lines)
        return lines

    # -- the state machine ------------------------------------------------------------

    def step(self, job_id: str) -> str:
        """Run one transition for the job; returns the stage it lands in."""
        with self._lock_for(job_id):
            record = self.store.load_record(job_id)
            if record.stage in TERMINAL_STAGES or record.stage == AWAITING_REVIEW:
                return record.stage
            if record.stage == "queued":
                record.stage = "classifying"
                self.store.save_record(record)
                return record.stage
            stage = record.stage
            out_name = _OUTPUT_NAMES[stage]
            try:
                if not self.store.has_stage_output(job_id, out_name):
                    output = self._run_stage_with_retries(record, stage)
                    self.store.save_stage_output(job_id, out_name, output)
                else:
                    output = self.store.load_stage_output(job_id, out_name)
            except _StageExhausted as exc:
                return self._dead_letter(record, stage, exc)
            except (ParseError, ValidationError, OSError, KeyError) as exc:
                return self._fail(record, stage, f"{type(exc).__name__}: {exc}")

            if stage not in record.completed_stages:
                record.completed_stages.append(stage)
            if stage == "assessing" and output["routing"]["outcome"] == "review":
                record.routing = output["routing"]
                record.stage = AWAITING_REVIEW
                self.store.save_record(record)
                return record.stage
            if stage == "assessing":
                record.routing = output["routing"]
            next_index = PIPELINE_STAGES.index(stage) + 1
            if next_index < len(PIPELINE_STAGES):
                record.stage = PIPELINE_STAGES[next_index]
                self.store.save_record(record)
                return record.stage
            return self._complete(record)

    def run(self, job_id: str) -> JobRecord:
        """Drive the job to a terminal or awaiting-review state."""
        stage = self.store.load_record(job_id).stage  # raises JobNotFound
        while stage not in TERMINAL_STAGES and stage != AWAITING_REVIEW:
            stage = self.step(job_id)
        return self.store.load_record(job_id)

    # -- terminal transitions -----------------------------------------------------------

    def _complete(self, record: JobRecord) -> str:
        results = self.build_results(record)
        self.store.save_results(record.job_id, results)
        self._emit_event(record, "complete", results)
        record.stage = "complete"
        self.store.save_record(record)
        return record.stage

    def _fail(self, record: JobRecord, stage: str, diagnostic: str) -> str:
        logger.error("job %s failed at %s: %s", record.job_id, stage, diagnostic)
        record.error_log.append(f"{stage}: {diagnostic}")
        self._emit_event(record, "failed", None)
        record.stage = "failed"
        self.store.save_record(record)
        return record.stage

    def _dead_letter(self, record: JobRecord, stage: str, exc: _StageExhausted) -> str:
        self.store.save_dead_letter(
            {
                "job_id": record.job_id,
                "packet_id": record.packet_id,
                "stage": stage,
                "error": exc.cause,
                "attempts": exc.attempts,
                "timestamp": time.time(),
                "payload_ref": record.packet_path,
            }
        )
        self._emit_event(record, "dead_lettered", None)
        record.error_log.append(f"{stage}: dead-lettered after {exc.attempts} attempts: {exc.cause}")
        record.stage = "dead_lettered"
        self.store.save_record(record)
        return record.stage

    def _emit_event(self, record: JobRecord, status: str, results: dict | None):
        event = {
            "job_id": record.job_id,
            "packet_id": record.packet_id,
            "status": status,
            "result_locations": {
                "results": str(self.store.results_path(record.job_id)),
                "record": str(self.store.record_path(record.job_id)),
            },
            "confidence_summary": (results or {}).get("confidence_summary"),
            "determinations_summary": (results or {}).get("determinations_summary"),
            "timings": {
                "created_at": record.created_at,
                "finished_at": time.time(),
            },
        }
        self.store.append_event(event)

    # -- results assembly ------------------------------------------------------------------

    def build_results(self, record: JobRecord) -> dict:
        """Deterministic consolidated results for a job that reached validating."""
        packet = self._packet(record)
        labels = self._labels(record)
        sections = self._sections(record)
        results = self._extraction_results(record)
        section_by_id = {s.section_id: s for s in sections}
        confidence = []
        for result in results:
            if result.status != "ok":
                continue
            lines = self._section_lines(packet, section_by_id[result.section_id])
            confidence.append(
                assessment.assess(result, lines, self.config.confidence_threshold).to_dict()
            )
        determinations = []
        if self.store.has_stage_output(record.job_id, "validate"):
            determinations = self.store.load_stage_output(record.job_id, "validate")["determinations"]
        failed_sections = [r.section_id for r in results if r.status == "failed"]
        min_confidence = min(
            (c["min_attribute_confidence"] for c in confidence), default=1.0
        )
        return {
            "job_id": record.job_id,
            "packet_id": record.packet_id,
            "status": "complete",
            "bio_labels": [str(label) for label in labels],
            "sections": [s.to_dict() for s in sections],
            "extraction": [r.to_dict() for r in results],
            "confidence": confidence,
            "confidence_summary": {
                "min_attribute_confidence": min_confidence,
                "sections_assessed": len(confidence),
            },
            "routing": record.routing or {"outcome": "auto_approve", "trigger_attributes": []},
            "review": record.review,
            "determinations": determinations,
            "determinations_summary": {
                d["status"]: sum(1 for x in determinations if x["status"] == d["status"])
                for d in determinations
            },
            "failed_sections": failed_sections,
            "document_failed": bool(failed_sections),
        }

    # -- review ----------------------------------------------------------------------------

    def review_queue(self) -> list[dict]:
        """Jobs awaiting review, newest first, with their flagged attributes."""
        queue = []
        for job_id in self.store.list_job_ids():
            try:
                record = self.store.load_record(job_id)
            except (JobNotFound, ValueError, KeyError, json.JSONDecodeError):
                continue
            if record.stage != AWAITING_REVIEW:
                continue
            queue.append(self.review_payload(record))
        queue.sort(key=lambda item: item["created_at"], reverse=True)
        return queue

    def review_payload(self, record: JobRecord) -> dict:
        packet = self._packet(record)
        sections = {s.section_id: s for s in self._sections(record)}
        results = {r.section_id: r for r in self._extraction_results(record)}
        assess_out = self.store.load_stage_output(record.job_id, "assess")
        flagged = []
        for trigger in (record.routing or {}).get("trigger_attributes", []):
            section = sections[trigger["section_id"]]
            result = results[trigger["section_id"]]
            attr = result.attribute(trigger["name"])
            schema = self._schema_by_name.get(section.class_name)
            attr_schema = schema.attribute(trigger["name"]) if schema else None
            excerpt_lines = self._section_lines(packet, section)
            image_refs = [
                packet.pages[i].image_ref
                for i in section.page_indices
                if packet.pages[i].image_ref
            ]
            flagged.append(
                {
                    "section_id": trigger["section_id"],
                    "class_name": section.class_name,
                    "name": trigger["name"],
                    "value_kind": attr_schema.value_kind if attr_schema else "string",
                    "value": attr.value if attr else None,
                    "confidence": attr.confidence if attr else None,
                    "justification": attr.justification if attr else None,
                    "bbox": attr.bbox.to_list() if attr and attr.bbox else None,
                    "section_text": "\n".join(line.text for line in excerpt_lines),
                    "image_refs": image_refs,
                }
            )
        return {
            "job_id": record.job_id,
            "packet_id": record.packet_id,
            "created_at": record.created_at,
            "threshold": (record.routing or {}).get("threshold_used", self.config.confidence_threshold),
            "flagged": flagged,
            "reports": assess_out.get("reports", []),
        }

    def apply_review_decision(
        self,
        job_id: str,
        reviewer: str,
        role: str,
        actions: list[dict],
        timestamp: float | None = None,
    ) -> JobRecord:
        """Apply a job-level review decision and move the job to validating.

        ``actions`` rows look like {"section_id", "name", "action", "value"?}.
        Raises DecisionConflict when the job is not awaiting review or was
        already decided; decision errors (IncompleteDecision, Unauthorized,
        KindMismatch) propagate from the assessment layer.
        """
        timestamp = time.time() if timestamp is None else timestamp
        with self._lock_for(job_id):
            record = self.store.load_record(job_id)
            if record.stage != AWAITING_REVIEW or record.review is not None:
                raise DecisionConflict(f"job {job_id} is not awaiting review")
            flagged_by_section: dict[str, list[str]] = defaultdict(list)
            for trigger in (record.routing or {}).get("trigger_attributes", []):
                flagged_by_section[trigger["section_id"]].append(trigger["name"])
            actions_by_section: dict[str, dict] = defaultdict(dict)
            for row in actions:
                action = assessment.ReviewAction(kind=row["action"], value=row.get("value"))
                actions_by_section[row["section_id"]][row["name"]] = action

            results = self._extraction_results(record)
            updated_results = []
            corrections = []
            touched = set(flagged_by_section) | set(actions_by_section)
            for result in results:
                if result.section_id not in touched:
                    updated_results.append(result)
                    continue
                decision = assessment.ReviewDecision(
                    reviewer=reviewer,
                    role=role,
                    actions=actions_by_section.get(result.section_id, {}),
                    timestamp=timestamp,
                )
                schema = self._schema_by_name.get(result.class_name)
                updated, recs = assessment.apply_review(
                    result, flagged_by_section.get(result.section_id, []), decision, schema
                )
                updated_results.append(updated)
                for rec in recs:
                    rec.update({"job_id": job_id, "section_id": result.section_id})
                corrections.extend(recs)

            self.store.save_stage_output(
                job_id, "extract", {"results": [r.to_dict() for r in updated_results]}
            )
            self.store.append_corrections(corrections)
            record.review = {
                "reviewer": reviewer,
                "role": role,
                "timestamp": timestamp,
                "actions": actions,
            }
            record.stage = "validating"
            self.store.save_record(record)
            return record

    # -- resumption -----------------------------------------------------------------------------

    def resume_pending(self, runner=None) -> list[str]:
        """Resume every non-terminal, non-awaiting-review job.

        Completed stages are never re-executed: their outputs reload from the
        store. A corrupted record marks that job failed with a diagnostic and
        leaves the others untouched. ``runner`` overrides how each job is
        driven (default: run synchronously to quiescence).
        """
        runner = runner or self.run
        resumed = []
        for job_id in self.store.list_job_ids():
            try:
                record = self.store.load_record(job_id)
            except JobNotFound:
                continue
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                broken = JobRecord(
                    job_id=job_id,
                    packet_id="unknown",
                    packet_path="",
                    stage="failed",
                    error_log=[f"corrupted record: {type(exc).__name__}: {exc}"],
                )
                self.store.save_record(broken)
                logger.error("job %s: corrupted record marked failed", job_id)
                continue
            if record.stage in TERMINAL_STAGES or record.stage == AWAITING_REVIEW:
                continue
            resumed.append(job_id)
            runner(job_id)
        return resumed


def job_status(record: JobRecord) -> dict:
    """Public status view of a job record."""
    return {
        "job_id": record.job_id,
        "packet_id": record.packet_id,
        "stage": record.stage,
        "attempts": dict(record.attempts),
        "completed_stages": list(record.completed_stages),
        "error_log": list(record.error_log),
        "created_at": record.created_at,
        "updated_at": record.updated_at,
        "routing": record.routing,
        "review": record.review,
    }
