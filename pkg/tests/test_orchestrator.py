"""State machine behavior: intake, retries, dead letters, resume, review."""
from __future__ import annotations

import json
from collections import defaultdict

import pytest

from docpipe.errors import DecisionConflict, JobNotFound, ValidationError
from docpipe.orchestrator.store import JobStore, SimulatedCrash
from docpipe.retry import RetryPolicy

from conftest import (
    FailingClassifier,
    FailingExtractor,
    FlakyClassifier,
    RecordingSleeper,
    packet_payload,
    write_packet,
)


@pytest.fixture
def happy_packet(tmp_path):
    return write_packet(
        tmp_path / "happy.json",
        packet_payload(
            "pkt-happy",
            [
                [
                    "INVOICE",
                    "Invoice Number: INV-9001",
                    "Vendor: Globex Industrial",
                    "Date: 2030-03-03",
                    "Total: $450.00",
                    "Item: Copper Coil | Amount: 450.00",
                ],
                ["Form W-2 Wage and Tax Statement", "Employee: Alex Chen",
                 "Employer: Hooli Group", "Wages: $91,000.00", "Tax Year: 2030"],
            ],
        ),
    )


@pytest.fixture
def low_conf_packet(tmp_path):
    return write_packet(
        tmp_path / "low.json",
        packet_payload(
            "pkt-low",
            [
                [
                    "INVOICE",
                    "Invoice Number: INV-9002",
                    "Vendor: Acme Supplies",
                    "Date: 2030-05-05",
                    "Total: $90.00",
                    "PO Number: PO-777",
                ]
            ],
        ),
    )


def test_submit_creates_queued_record(make_engine, happy_packet):
    engine = make_engine()
    job_id = engine.submit(str(happy_packet))
    record = engine.store.load_record(job_id)
    assert record.stage == "queued"
    assert record.packet_id == "pkt-happy"


def test_submit_idempotent(make_engine, happy_packet):
    engine = make_engine()
    first = engine.submit(str(happy_packet))
    second = engine.submit(str(happy_packet))
    assert first == second
    assert engine.store.list_job_ids() == [first]


def test_submit_malformed_packet_leaves_no_record(make_engine, tmp_path):
    engine = make_engine()
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"packet_id": "x", "pages": [{"index": 0}, {"index": 2}]}))
    with pytest.raises(ValidationError):
        engine.submit(str(bad))
    assert engine.store.list_job_ids() == []


def test_run_happy_path_outputs_on_disk(make_engine, happy_packet):
    engine = make_engine()
    job_id = engine.submit(str(happy_packet))
    record = engine.run(job_id)
    assert record.stage == "complete"
    for name in ("classify", "split", "extract", "assess", "validate"):
        assert engine.store.has_stage_output(job_id, name), name
    results = engine.store.load_results(job_id)
    assert results["status"] == "complete"
    assert [s["class_name"] for s in results["sections"]] == ["invoice", "w2"]
    assert not results["document_failed"]
    statuses = {d["rule_id"]: d["status"] for d in results["determinations"]}
    assert statuses == {
        "invoice_total_limit": "pass",
        "balance_nonnegative": "information_not_found",
    }
    events = engine.store.read_events()
    assert len(events) == 1 and events[0]["job_id"] == job_id


def test_run_unknown_job(make_engine):
    engine = make_engine()
    with pytest.raises(JobNotFound):
        engine.run("nope")


def test_prose_extractor_completes_with_failed_sections(make_engine, happy_packet):
    from docpipe.extraction import AlwaysProseBackend

    engine = make_engine(extractor=AlwaysProseBackend())
    job_id = engine.submit(str(happy_packet))
    record = engine.run(job_id)
    assert record.stage == "complete"
    results = engine.store.load_results(job_id)
    assert results["document_failed"]
    assert len(results["failed_sections"]) == 2
    for r in results["extraction"]:
        assert r["status"] == "failed"
        assert r["failure_reason"].startswith("invalid output structure")
        assert r["attempts"] == 3


def test_backend_failure_dead_letters_after_exactly_three(make_engine, happy_packet):
    sleeper = RecordingSleeper()
    backend = FailingExtractor()
    policy = RetryPolicy(max_attempts=3, base_delay=0.5, factor=2.0, jitter=0.1)
    engine = make_engine(extractor=backend, sleeper=sleeper, retry=policy)
    job_id = engine.submit(str(happy_packet))
    record = engine.run(job_id)
    assert record.stage == "dead_lettered"
    assert backend.calls == 3
    # Two backoff delays, inside the policy's jitter bounds.
    assert len(sleeper.delays) == 2
    for k, delay in enumerate(sleeper.delays, start=1):
        low, high = policy.bounds(k)
        assert low <= delay <= high
    letters = engine.store.load_dead_letters()
    assert len(letters) == 1
    assert letters[0]["attempts"] == 3
    assert letters[0]["stage"] == "extracting"
    events = engine.store.read_events()
    assert [e["status"] for e in events] == ["dead_lettered"]


def test_classifier_failure_dead_letters(make_engine, happy_packet):
    sleeper = RecordingSleeper()
    backend = FailingClassifier()
    engine = make_engine(classifier=backend, sleeper=sleeper,
                         retry=RetryPolicy(max_attempts=3, base_delay=0.1))
    job_id = engine.submit(str(happy_packet))
    record = engine.run(job_id)
    assert record.stage == "dead_lettered"
    assert record.attempts["classifying"] == 3
    assert len(sleeper.delays) == 2
    letters = engine.store.load_dead_letters()
    assert letters[0]["stage"] == "classifying"


def test_flaky_classifier_recovers(make_engine, happy_packet):
    backend = FlakyClassifier(failures=1)
    engine = make_engine(classifier=backend, retry=RetryPolicy(max_attempts=3, base_delay=0.0))
    job_id = engine.submit(str(happy_packet))
    record = engine.run(job_id)
    assert record.stage == "complete"
    assert record.attempts["classifying"] == 2


def test_crash_after_extract_persist_resumes_without_reexecution(
    tmp_path, make_engine, happy_packet
):
    effects = defaultdict(int)

    def effect_hook(job_id, stage):
        effects[stage] += 1

    crashed = {}

    def crash_hook(label):
        if label.startswith("stage:") and label.endswith(":extract") and "hit" not in crashed:
            crashed["hit"] = label
            raise SimulatedCrash(label)

    engine = make_engine(stage_effect_hook=effect_hook, boundary_hook=crash_hook)
    job_id = engine.submit(str(happy_packet))
    with pytest.raises(SimulatedCrash):
        engine.run(job_id)
    assert engine.store.has_stage_output(job_id, "extract")
    assert effects == {"classifying": 1, "splitting": 1, "extracting": 1}

    # Restart: fresh engine over the same store, same effect counters.
    engine2 = make_engine(stage_effect_hook=effect_hook)
    resumed = engine2.resume_pending()
    assert resumed == [job_id]
    record = engine2.store.load_record(job_id)
    assert record.stage == "complete"
    # Completed stages never re-executed.
    assert effects == {
        "classifying": 1,
        "splitting": 1,
        "extracting": 1,
        "assessing": 1,
        "validating": 1,
    }


def test_resume_skips_terminal_and_empty(make_engine, happy_packet):
    engine = make_engine()
    job_id = engine.submit(str(happy_packet))
    engine.run(job_id)
    assert engine.resume_pending() == []


def test_corrupt_record_isolated(make_engine, tmp_path):
    engine = make_engine()
    paths = []
    for i in range(3):
        p = write_packet(
            tmp_path / f"c{i}.json",
            packet_payload(f"pkt-c{i}", [["INVOICE", f"Invoice Number: INV-{i:04d}",
                                          "Vendor: Acme Supplies", "Date: 2030-01-01",
                                          "Total: $10.00"]]),
        )
        paths.append(engine.submit(str(p)))
    # Corrupt the middle record.
    engine.store.record_path(paths[1]).write_text("{torn json")
    resumed = engine.resume_pending()
    assert sorted(resumed) == sorted([paths[0], paths[2]])
    broken = engine.store.load_record(paths[1])
    assert broken.stage == "failed"
    assert any("corrupted record" in line for line in broken.error_log)
    for good in (paths[0], paths[2]):
        assert engine.store.load_record(good).stage == "complete"


def test_event_dedup_across_recompletion(make_engine, happy_packet):
    engine = make_engine()
    job_id = engine.submit(str(happy_packet))
    engine.run(job_id)
    # Force the completion path to re-run: rewind the record one step.
    record = engine.store.load_record(job_id)
    record.stage = "validating"
    engine.store.save_record(record)
    engine.run(job_id)
    events = engine.store.read_events()
    assert len(events) == 1


def test_review_flow(make_engine, low_conf_packet):
    engine = make_engine(hitl_enabled=True)
    job_id = engine.submit(str(low_conf_packet))
    record = engine.run(job_id)
    assert record.stage == "awaiting_review"

    queue = engine.review_queue()
    assert [item["job_id"] for item in queue] == [job_id]
    flagged = queue[0]["flagged"]
    assert [f["name"] for f in flagged] == ["po_number"]
    assert flagged[0]["confidence"] == 0.5
    assert "PO Number: PO-777" in flagged[0]["section_text"]

    section_id = flagged[0]["section_id"]
    engine.apply_review_decision(
        job_id,
        reviewer="casey",
        role="reviewer",
        actions=[{"section_id": section_id, "name": "po_number", "action": "override", "value": "PO-778"}],
    )
    record = engine.run(job_id)
    assert record.stage == "complete"
    assert engine.review_queue() == []

    results = engine.store.load_results(job_id)
    extraction = {r["section_id"]: r for r in results["extraction"]}
    po = next(a for a in extraction[section_id]["attributes"] if a["name"] == "po_number")
    assert po["value"] == "PO-778"
    assert po["confidence"] == 1.0
    assert po["provenance"] == "human"

    corrections = engine.store.read_corrections()
    assert len(corrections) == 1
    assert corrections[0]["attribute"] == "po_number"
    assert corrections[0]["old"] == "PO-777"
    assert corrections[0]["new"] == "PO-778"

    with pytest.raises(DecisionConflict):
        engine.apply_review_decision(job_id, reviewer="x", role="admin", actions=[])


def test_review_not_awaiting_conflict(make_engine, happy_packet):
    engine = make_engine()
    job_id = engine.submit(str(happy_packet))
    engine.run(job_id)
    with pytest.raises(DecisionConflict):
        engine.apply_review_decision(job_id, reviewer="x", role="admin", actions=[])


def test_hitl_off_never_pauses(make_engine, low_conf_packet):
    engine = make_engine(hitl_enabled=False)
    job_id = engine.submit(str(low_conf_packet))
    assert engine.run(job_id).stage == "complete"


def test_store_append_event_dedup(tmp_path):
    store = JobStore(tmp_path / "s")
    assert store.append_event({"job_id": "a", "status": "complete"})
    assert not store.append_event({"job_id": "a", "status": "complete"})
    assert len(store.read_events()) == 1


def test_store_tolerates_torn_event_line(tmp_path):
    store = JobStore(tmp_path / "s")
    store.append_event({"job_id": "a", "status": "complete"})
    with open(store.events_path, "a") as fh:
        fh.write('{"job_id": "b", "stat')  # torn write
    assert [e["job_id"] for e in store.read_events()] == ["a"]
    assert store.append_event({"job_id": "b", "status": "complete"})
