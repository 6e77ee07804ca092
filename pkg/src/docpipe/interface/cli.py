"""Batch CLI: process manifests, evaluate runs, generate corpora, serve the API.

Exit codes: 0 success, 1 processing failures (dead-lettered jobs), 2
configuration or manifest errors.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from docpipe.config import load_engine_config
from docpipe.core.loaders import load_class_config, load_ground_truth
from docpipe.errors import DocpipeError, ManifestError, ParseError, ValidationError
from docpipe.interface.corpus import generate_corpus
from docpipe.interface.manifest import Manifest, load_manifest
from docpipe.interface.reports import (
    build_run_report,
    evaluate_results,
    render_report_table,
    write_reports,
)
from docpipe.orchestrator.engine import Engine
from docpipe.orchestrator.pool import WorkerPool
from docpipe.orchestrator.store import JobStore
from docpipe.resources import (
    default_classes_path,
    default_price_table_path,
    default_rules_path,
)
from docpipe.rules import load_rules


def _fail_config(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(2)


def _load_setup(config_path, out_dir, manifest: Manifest | None = None, **overrides):
    try:
        config = load_engine_config(config_path, store_dir=str(out_dir), **overrides)
        classes_path = None
        if manifest is not None and manifest.config_ref:
            classes_path = manifest.resolve(manifest.config_ref)
        elif config.class_config_path:
            classes_path = Path(config.class_config_path)
        classes = load_class_config(classes_path or default_classes_path())
        rules = load_rules(Path(config.rules_path) if config.rules_path else default_rules_path())
        price_path = Path(config.price_table_path) if config.price_table_path else default_price_table_path()
        price_table = json.loads(price_path.read_text())
    except (ParseError, ValidationError, OSError, json.JSONDecodeError) as exc:
        _fail_config(str(exc))
    return config, classes, rules, price_table


@click.group()
def main():
    """Document-intelligence pipeline engine."""


@main.command("process")
@click.option("--manifest", "manifest_path", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--modality", type=click.Choice(["ocr", "image", "ocr+image"]), default="ocr")
@click.option("--backend", default="mock", help="Extractor backend name.")
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--hitl/--no-hitl", default=None, help="Override human-review routing.")
def process_command(manifest_path, config_path, modality, backend, out_dir, hitl):
    """Process every document in the manifest to quiescence and report."""
    try:
        manifest = load_manifest(manifest_path)
    except ManifestError as exc:
        _fail_config(str(exc))
    overrides = {"modality": modality, "extractor_backend": backend}
    if hitl is not None:
        overrides["hitl_enabled"] = hitl
    config, classes, rules, price_table = _load_setup(config_path, out_dir, manifest, **overrides)

    for row in manifest.rows:
        doc = manifest.resolve(row.document_path)
        if not doc.exists():
            _fail_config(f"manifest row {row.row}: no such document {doc}")
        if row.ground_truth_path and not manifest.resolve(row.ground_truth_path).exists():
            _fail_config(f"manifest row {row.row}: no such ground truth {row.ground_truth_path}")

    store = JobStore(out_dir)
    engine = Engine(config, store, classes, rules, price_table=price_table)
    pool = WorkerPool(engine).start()
    job_ids = []
    try:
        for row in manifest.rows:
            try:
                job_id = engine.submit(str(manifest.resolve(row.document_path)))
            except (ParseError, ValidationError) as exc:
                pool.shutdown()
                _fail_config(f"manifest row {row.row}: {exc}")
            job_ids.append(job_id)
            pool.submit(job_id)
        pool.wait_quiescent()
    finally:
        pool.shutdown()

    baselines = {}
    for row in manifest.rows:
        if not row.ground_truth_path:
            continue
        truth = load_ground_truth(manifest.resolve(row.ground_truth_path), classes)
        baselines[truth.packet_id] = truth

    report = build_run_report(store, config, classes, job_ids, baselines or None)
    write_reports(store, report)
    click.echo(render_report_table(report))
    click.echo(f"run directory: {out_dir}")
    sys.exit(1 if report["dead_lettered"] > 0 else 0)


@main.command("evaluate")
@click.option("--results", "results_dir", required=True, type=click.Path(exists=True))
@click.option("--baselines", "baselines_path", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
def evaluate_command(results_dir, baselines_path, out_dir):
    """Score a processed run directory against ground-truth baselines."""
    try:
        manifest = load_manifest(baselines_path)
    except ManifestError as exc:
        _fail_config(str(exc))
    config, classes, rules, price_table = _load_setup(None, results_dir)
    store = JobStore(results_dir)

    baselines = {}
    for row in manifest.rows:
        if not row.ground_truth_path:
            continue
        try:
            truth = load_ground_truth(manifest.resolve(row.ground_truth_path), classes)
        except (ParseError, ValidationError) as exc:
            _fail_config(f"baseline row {row.row}: {exc}")
        baselines[truth.packet_id] = truth

    job_rows = []
    for job_id in store.list_job_ids():
        record = store.load_record(job_id)
        results = None
        if record.stage == "complete":
            results = store.load_results(job_id)
        job_rows.append(
            {
                "job_id": job_id,
                "packet_id": record.packet_id,
                "status": record.stage,
                "results": results,
            }
        )
    scored = evaluate_results(job_rows, baselines, classes)
    for packet_id in scored["missing_baselines"]:
        click.echo(f"warning: no baseline for packet {packet_id}; skipped", err=True)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "evaluation.json").write_text(json.dumps(scored, indent=2, sort_keys=True) + "\n")
    evaluation = scored["evaluation"]
    lines = [
        f"extraction_score (micro F1): {evaluation['extraction_score']:.4f}",
        f"micro P/R/F1: {evaluation['micro_precision']:.4f} {evaluation['micro_recall']:.4f} {evaluation['micro_f1']:.4f}",
        f"macro P/R/F1: {evaluation['macro_precision']:.4f} {evaluation['macro_recall']:.4f} {evaluation['macro_f1']:.4f}",
        f"documents: {evaluation['document_count']} failed: {evaluation['failed_count']}",
    ]
    if scored["splits"]:
        splits = scored["splits"]
        lines.append(
            "splitting: page={:.4f} ordered={:.4f} unordered={:.4f}".format(
                splits["page_accuracy"], splits["ordered_accuracy"], splits["unordered_accuracy"]
            )
        )
    text = "\n".join(lines) + "\n"
    (out / "evaluation.txt").write_text(text)
    click.echo(text)


@main.command("gen-corpus")
@click.option("--classes", "classes_path", type=click.Path(), default=None)
@click.option("--count", default=10, type=int)
@click.option("--seed", default=42, type=int)
@click.option("--pages", default="3:8", help="Page range per packet, LO:HI.")
@click.option("--inject-low", default=0, type=int, help="Packets given a low-confidence attribute.")
@click.option("--out", "out_dir", required=True, type=click.Path())
def gen_corpus_command(classes_path, count, seed, pages, inject_low, out_dir):
    """Generate a synthetic corpus with exact ground truth."""
    try:
        classes = load_class_config(classes_path or default_classes_path())
        lo, hi = (int(p) for p in pages.split(":", 1))
        class_names = tuple(
            c.class_name for c in classes if c.class_name != "other" and c.attributes
        )
        manifest_path = generate_corpus(
            out_dir,
            count=count,
            pages_range=(lo, hi),
            seed=seed,
            inject_low=inject_low,
            class_names=class_names,
        )
    except (ParseError, ValidationError, ValueError) as exc:
        _fail_config(str(exc))
    click.echo(f"manifest: {manifest_path}")


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--bind", default="127.0.0.1:8100")
@click.option("--tokens-file", "tokens_path", type=click.Path(), default=None)
@click.option("--store", "store_dir", type=click.Path(), default=None,
              help="Job store directory (defaults to the config store_dir).")
def serve_command(config_path, bind, tokens_path, store_dir):
    """Serve the review/status API over a job store."""
    import uvicorn

    from docpipe.interface.api import create_app, load_tokens

    try:
        config = load_engine_config(config_path, **({"store_dir": store_dir} if store_dir else {}))
        config, classes, rules, price_table = _load_setup(config_path, config.store_dir)
        tokens = load_tokens(tokens_path)
        host, port = bind.rsplit(":", 1)
    except (DocpipeError, ValueError, OSError) as exc:
        _fail_config(str(exc))

    store = JobStore(config.store_dir)
    engine = Engine(config, store, classes, rules, price_table=price_table)
    pool = WorkerPool(engine).start()
    engine.resume_pending(runner=pool.submit)
    app = create_app(engine, pool, tokens)
    try:
        uvicorn.run(app, host=host, port=int(port), log_level="info")
    finally:
        pool.shutdown()


if __name__ == "__main__":
    main()
