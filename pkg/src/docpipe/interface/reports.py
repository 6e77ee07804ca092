"""Run reports: evaluation wiring, the tabular summary, and volatility masking.

The tabular report mirrors the familiar benchmark columns (Modalities /
Extraction Score / Latency / Cost / Failed). Wall-clock fields are reported
but excluded from golden comparisons via mask_volatile.
"""
from __future__ import annotations

import copy
import json
import logging
from pathlib import Path

from docpipe.core.model import ClassSchema, GroundTruth, OTHER_CLASS
from docpipe.evaluation.aggregate import aggregate
from docpipe.evaluation.splitting import aggregate_splits, split_metrics
from docpipe.evaluation.structured import evaluate_document
from docpipe.errors import PartitionError
from docpipe.orchestrator.store import JobStore
from docpipe.segmentation import Section

logger = logging.getLogger(__name__)

VOLATILE_KEYS = {
    "latency_s",
    "mean_latency_s",
    "created_at",
    "updated_at",
    "finished_at",
    "timestamp",
    "timings",
}


def mask_volatile(obj):
    """Deep-copy with wall-clock fields zeroed, for golden comparisons."""
    obj = copy.deepcopy(obj)

    def walk(node):
        if isinstance(node, dict):
            for key in list(node):
                if key in VOLATILE_KEYS:
                    node[key] = 0
                else:
                    walk(node[key])
        elif isinstance(node, list):
            for item in node:
                walk(item)

    walk(obj)
    return obj


def _gt_sections(truth: GroundTruth) -> list[Section]:
    return [
        Section(section_id=f"gt{k}", class_name=s.class_name, page_indices=s.pages)
        for k, s in enumerate(truth.sections)
    ]


def evaluate_results(
    job_rows: list[dict],
    baselines: dict[str, GroundTruth],
    classes: list[ClassSchema],
) -> dict:
    """Score a processed run against its baselines.

    ``job_rows``: one entry per job with keys packet_id, status, results
    (results.json payload or None). Ground-truth sections pair with predicted
    sections by identical (class, page run); unmatched ground truth counts as
    misses, unmatched predictions as false positives, and failed documents
    join failed_count without contributing counts.
    """
    schema_by_name = {c.class_name: c for c in classes}
    per_doc = []
    failed_docs = 0
    packet_rows = []
    missing = []
    pending = []
    errors = []

    for row in job_rows:
        packet_id = row["packet_id"]
        truth = baselines.get(packet_id)
        if truth is None:
            missing.append(packet_id)
            continue
        if row["status"] == "awaiting_review":
            pending.append(packet_id)  # unscoreable but not failed
            continue
        countable_gt = [
            s
            for s in truth.sections
            if s.class_name != OTHER_CLASS
            and schema_by_name.get(s.class_name) is not None
            and schema_by_name[s.class_name].attributes
        ]
        if row["status"] != "complete" or not row.get("results"):
            failed_docs += len(countable_gt)
            continue
        results = row["results"]
        pred_sections = [Section.from_dict(d) for d in results.get("sections", [])]
        page_count = sum(len(s.page_indices) for s in pred_sections)
        gt_sections = _gt_sections(truth)
        try:
            report = split_metrics(gt_sections, pred_sections, page_count, packet_id=packet_id)
            packet_rows.extend(report.per_packet)
        except PartitionError as exc:
            errors.append(f"{packet_id}: {exc}")
            continue

        extraction = {r["section_id"]: r for r in results.get("extraction", [])}
        pred_by_key = {
            (s.class_name, s.page_indices): extraction.get(s.section_id)
            for s in pred_sections
        }
        used_pred_keys = set()
        for gt in truth.sections:
            schema = schema_by_name.get(gt.class_name)
            if gt.class_name == OTHER_CLASS or schema is None or not schema.attributes:
                continue
            key = (gt.class_name, tuple(gt.pages))
            pred = pred_by_key.get(key)
            prefix = f"{gt.class_name}."
            if key in pred_by_key:
                used_pred_keys.add(key)
            if pred is not None and pred["status"] == "failed":
                failed_docs += 1
                continue
            value_map = (
                {a["name"]: a["value"] for a in pred["attributes"]} if pred is not None else {}
            )
            per_doc.append(evaluate_document(dict(gt.attributes), value_map, schema, prefix))
        for (class_name, pages), pred in pred_by_key.items():
            if (class_name, pages) in used_pred_keys or pred is None:
                continue
            schema = schema_by_name.get(class_name)
            if schema is None or not schema.attributes or pred["status"] == "failed":
                continue
            value_map = {a["name"]: a["value"] for a in pred["attributes"]}
            per_doc.append(evaluate_document({}, value_map, schema, f"{class_name}."))

    evaluation = aggregate(per_doc, failed_count=failed_docs)
    splits = aggregate_splits(packet_rows) if packet_rows else None
    return {
        "evaluation": evaluation.to_dict(),
        "splits": splits.to_dict() if splits else None,
        "missing_baselines": missing,
        "pending_review": pending,
        "errors": errors,
    }


def build_run_report(
    store: JobStore,
    config,
    classes: list[ClassSchema],
    job_ids: list[str],
    baselines: dict[str, GroundTruth] | None = None,
) -> dict:
    """Summarize a processed run; includes metric scores when baselines exist."""
    job_rows = []
    dead_lettered = 0
    awaiting = 0
    complete = 0
    failed_jobs = 0
    total_cost = 0.0
    latencies = []
    for job_id in job_ids:
        record = store.load_record(job_id)
        results = None
        if record.stage == "complete":
            complete += 1
            results = store.load_results(job_id)
            cost = sum(r.get("cost", 0.0) for r in results.get("extraction", []))
            latency = sum(r.get("latency_s", 0.0) for r in results.get("extraction", []))
            total_cost += cost
            latencies.append(latency)
            if results.get("document_failed"):
                failed_jobs += 1
        elif record.stage == "dead_lettered":
            dead_lettered += 1
            failed_jobs += 1
        elif record.stage == "awaiting_review":
            awaiting += 1
        elif record.stage == "failed":
            failed_jobs += 1
        job_rows.append(
            {
                "job_id": job_id,
                "packet_id": record.packet_id,
                "status": record.stage,
                "results": results,
            }
        )

    modalities = {"ocr": "ocr" in config.modality, "image": "image" in config.modality}
    report = {
        "backend": config.extractor_backend,
        "modalities": modalities,
        "jobs": len(job_ids),
        "complete": complete,
        "awaiting_review": awaiting,
        "dead_lettered": dead_lettered,
        "failed": failed_jobs,
        "mean_latency_s": sum(latencies) / len(latencies) if latencies else 0.0,
        "total_cost": round(total_cost, 6),
        "extraction_score": None,
        "evaluation": None,
        "splits": None,
        "missing_baselines": [],
    }
    if baselines:
        scored = evaluate_results(job_rows, baselines, classes)
        report["evaluation"] = scored["evaluation"]
        report["splits"] = scored["splits"]
        report["missing_baselines"] = scored["missing_baselines"]
        report["evaluation_errors"] = scored["errors"]
        report["extraction_score"] = scored["evaluation"]["extraction_score"]
    return report


def _format_latency(seconds: float) -> str:
    m, s = divmod(int(round(seconds)), 60)
    return f"{m}m {s}s"


def render_report_table(report: dict) -> str:
    modalities = report["modalities"]
    mod = "+".join(k.upper() for k in ("ocr", "image") if modalities.get(k)) or "none"
    score = report.get("extraction_score")
    score_text = f"{score:.4f}" if score is not None else "n/a"
    header = f"{'Modalities':<12}{'Extraction Score':<18}{'Latency':<10}{'Cost':<10}{'Failed':<8}"
    row = (
        f"{mod:<12}"
        f"{score_text:<18}"
        f"{_format_latency(report.get('mean_latency_s', 0.0)):<10}"
        f"{'$' + format(report.get('total_cost', 0.0), '.2f'):<10}"
        f"{report.get('failed', 0):<8}"
    )
    lines = [header, "-" * len(header), row]
    splits = report.get("splits")
    if splits:
        lines.append("")
        lines.append(
            "Splitting: page_accuracy={:.4f} ordered={:.4f} unordered={:.4f}".format(
                splits["page_accuracy"], splits["ordered_accuracy"], splits["unordered_accuracy"]
            )
        )
    return "\n".join(lines) + "\n"


def write_reports(store: JobStore, report: dict) -> Path:
    store.reports_dir.mkdir(parents=True, exist_ok=True)
    latest = store.reports_dir / "latest.json"
    latest.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    (store.reports_dir / "report.txt").write_text(render_report_table(report))
    return latest
