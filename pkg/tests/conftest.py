"""Shared fixtures: packet builders, instrumented backends, engine factory."""
from __future__ import annotations

import json
from pathlib import Path

import pytest

from docpipe.config import load_engine_config
from docpipe.core.loaders import load_class_config
from docpipe.errors import BackendError
from docpipe.extraction import MockExtractorBackend
from docpipe.orchestrator.engine import Engine
from docpipe.orchestrator.store import JobStore
from docpipe.resources import (
    default_classes_path,
    default_price_table_path,
    default_rules_path,
)
from docpipe.retry import RetryPolicy
from docpipe.rules import load_rules
from docpipe.segmentation import MockClassifierBackend


@pytest.fixture(scope="session")
def default_classes():
    return load_class_config(default_classes_path())


@pytest.fixture(scope="session")
def default_rules():
    return load_rules(default_rules_path())


@pytest.fixture(scope="session")
def price_table():
    return json.loads(default_price_table_path().read_text())


# --- packet builders ----------------------------------------------------------

def packet_payload(packet_id: str, page_texts: list[list[str]], image_refs: dict | None = None) -> dict:
    pages = []
    for index, lines in enumerate(page_texts):
        page = {
            "index": index,
            "lines": [
                {
                    "text": text,
                    "confidence": 95.0,
                    "bbox": [0.05, round(0.05 + 0.05 * i, 3), 0.9, round(0.08 + 0.05 * i, 3)],
                }
                for i, text in enumerate(lines)
            ],
        }
        if image_refs and index in image_refs:
            page["image_ref"] = image_refs[index]
        pages.append(page)
    return {"packet_id": packet_id, "pages": pages}


def write_packet(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


@pytest.fixture
def invoice_w2_packet(tmp_path):
    """3-page packet: a 2-page invoice then a 1-page W-2."""
    payload = packet_payload(
        "pkt-unit",
        [
            [
                "INVOICE",
                "Invoice Number: INV-7001",
                "Vendor: Acme Supplies",
                "Date: 2030-01-15",
                "Total: $120.50",
                "Item: Widget Alpha | Amount: 25.00",
                "Item: Gizmo Beta | Amount: 95.50",
            ],
            ["Invoice continuation page 2", "Processed electronically."],
            [
                "Form W-2 Wage and Tax Statement",
                "Employee: Jordan Reyes",
                "Employer: Initech LLC",
                "Wages: $58,201.75",
                "Tax Year: 2029",
            ],
        ],
    )
    return write_packet(tmp_path / "pkt-unit.json", payload)


# --- instrumented backends -------------------------------------------------------

class FailingClassifier:
    """Raises BackendError forever."""

    def __init__(self):
        self.calls = 0

    def classify_page(self, page_text, image_ref, classes, prev_class):
        self.calls += 1
        raise BackendError("classifier offline")


class FlakyClassifier:
    """Fails the first N classify calls, then behaves like the mock."""

    def __init__(self, failures: int):
        self.failures = failures
        self.calls = 0
        self._inner = MockClassifierBackend()

    def classify_page(self, page_text, image_ref, classes, prev_class):
        self.calls += 1
        if self.calls <= self.failures:
            raise BackendError("transient classifier failure")
        return self._inner.classify_page(page_text, image_ref, classes, prev_class)


class FailingExtractor:
    """Raises BackendError forever."""

    def __init__(self):
        self.calls = 0

    def extract(self, request):
        self.calls += 1
        raise BackendError("model endpoint down")


class FlakyExtractor:
    """Fails the first N extract calls, then behaves like the mock."""

    def __init__(self, failures: int):
        self.failures = failures
        self.calls = 0
        self._inner = MockExtractorBackend()

    def extract(self, request):
        self.calls += 1
        if self.calls <= self.failures:
            raise BackendError("transient extractor failure")
        return self._inner.extract(request)


class RecordingSleeper:
    def __init__(self):
        self.delays: list[float] = []

    def __call__(self, seconds: float):
        self.delays.append(seconds)


class ProbeExtractor:
    """Tracks concurrent extract invocations; optional per-call dwell."""

    def __init__(self, dwell_s: float = 0.0):
        import threading
        import time as _time

        self._lock = threading.Lock()
        self._time = _time
        self.dwell_s = dwell_s
        self.active = 0
        self.peak = 0
        self.calls = 0
        self._inner = MockExtractorBackend()

    def extract(self, request):
        with self._lock:
            self.active += 1
            self.calls += 1
            self.peak = max(self.peak, self.active)
        try:
            if self.dwell_s:
                self._time.sleep(self.dwell_s)
            return self._inner.extract(request)
        finally:
            with self._lock:
                self.active -= 1


# --- engine factory ------------------------------------------------------------------

@pytest.fixture
def make_engine(tmp_path, default_classes, default_rules, price_table):
    """Build an engine over a fresh store; backends and hooks injectable."""

    def factory(
        subdir: str = "run",
        classifier=None,
        extractor=None,
        sleeper=None,
        boundary_hook=None,
        stage_effect_hook=None,
        retry: RetryPolicy | None = None,
        **config_overrides,
    ) -> Engine:
        config = load_engine_config(None, store_dir=str(tmp_path / subdir), **config_overrides)
        if retry is not None:
            from dataclasses import replace

            config = replace(config, retry=retry)
        store = JobStore(config.store_dir, boundary_hook=boundary_hook)
        return Engine(
            config,
            store,
            default_classes,
            default_rules,
            classifier=classifier or MockClassifierBackend(),
            extractor=extractor or MockExtractorBackend(),
            price_table=price_table,
            sleeper=sleeper or (lambda s: None),
            stage_effect_hook=stage_effect_hook,
        )

    return factory
