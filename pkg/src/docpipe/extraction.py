"""Schema-driven attribute extraction through pluggable model backends.

Backends return raw structured text plus token usage; the engine validates
the structure strictly (the report's Failed column hinges on it), retries
transient failures with the orchestrator's backoff policy, and accounts
latency and cost per section.
"""
from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass, field
from typing import Protocol

from docpipe.core.model import AttributeSchema, BoundingBox, ClassSchema, DocumentPacket
from docpipe.errors import BackendError, EmptyInput, KindMismatch, MissingImage, StructureError
from docpipe.segmentation import Section
from docpipe.values import check_kind
from docpipe.retry import RetryPolicy

logger = logging.getLogger(__name__)

MODALITIES = ("ocr", "image", "ocr+image")

MOCK_CONFIDENCE = 0.95
MOCK_LOW_CONFIDENCE = 0.5
LOW_SUFFIX = "::low"


@dataclass(frozen=True)
class Usage:
    input_tokens: int = 0
    output_tokens: int = 0

    def __add__(self, other: "Usage") -> "Usage":
        return Usage(self.input_tokens + other.input_tokens, self.output_tokens + other.output_tokens)

    def to_dict(self) -> dict:
        return {"input_tokens": self.input_tokens, "output_tokens": self.output_tokens}


@dataclass(frozen=True)
class ModelRequest:
    """Everything a backend needs for one section extraction."""

    class_name: str
    prompt: str
    section_text: str
    modality: str
    image_refs: tuple[str, ...] = ()
    schema: ClassSchema | None = None

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ValueError(f"modality must be one of {MODALITIES}, got {self.modality!r}")


@dataclass(frozen=True)
class AttributeValue:
    name: str
    value: object
    confidence: float = 1.0
    bbox: BoundingBox | None = None
    justification: str | None = None
    provenance: str = "backend"

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"{self.name}: confidence must be in [0,1], got {self.confidence}")

    def to_dict(self) -> dict:
        d: dict = {"name": self.name, "value": self.value, "confidence": self.confidence,
                   "provenance": self.provenance}
        if self.bbox is not None:
            d["bbox"] = self.bbox.to_list()
        if self.justification is not None:
            d["justification"] = self.justification
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AttributeValue":
        bbox = d.get("bbox")
        return cls(
            name=d["name"],
            value=d["value"],
            confidence=d.get("confidence", 1.0),
            bbox=BoundingBox.from_list(bbox) if bbox is not None else None,
            justification=d.get("justification"),
            provenance=d.get("provenance", "backend"),
        )


@dataclass(frozen=True)
class ExtractionResult:
    section_id: str
    class_name: str
    status: str = "ok"
    attributes: tuple[AttributeValue, ...] = ()
    failure_reason: str | None = None
    failure_kind: str | None = None
    latency_s: float = 0.0
    cost: float = 0.0
    attempts: int = 1
    raw_response: str | None = None
    usage: Usage = field(default_factory=Usage)

    def __post_init__(self):
        object.__setattr__(self, "attributes", tuple(self.attributes))
        if self.status not in ("ok", "failed"):
            raise ValueError(f"status must be ok or failed, got {self.status!r}")
        if self.status == "failed" and (self.attributes or not self.failure_reason):
            raise ValueError("failed results carry a reason and no attributes")
        if self.latency_s < 0 or self.cost < 0:
            raise ValueError("latency and cost must be nonnegative")

    def value_map(self) -> dict:
        return {a.name: a.value for a in self.attributes}

    def attribute(self, name: str) -> AttributeValue | None:
        for a in self.attributes:
            if a.name == name:
                return a
        return None

    def to_dict(self) -> dict:
        return {
            "section_id": self.section_id,
            "class_name": self.class_name,
            "status": self.status,
            "attributes": [a.to_dict() for a in self.attributes],
            "failure_reason": self.failure_reason,
            "failure_kind": self.failure_kind,
            "latency_s": self.latency_s,
            "cost": self.cost,
            "attempts": self.attempts,
            "raw_response": self.raw_response,
            "usage": self.usage.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExtractionResult":
        usage = d.get("usage") or {}
        return cls(
            section_id=d["section_id"],
            class_name=d["class_name"],
            status=d.get("status", "ok"),
            attributes=tuple(AttributeValue.from_dict(a) for a in d.get("attributes", [])),
            failure_reason=d.get("failure_reason"),
            failure_kind=d.get("failure_kind"),
            latency_s=d.get("latency_s", 0.0),
            cost=d.get("cost", 0.0),
            attempts=d.get("attempts", 1),
            raw_response=d.get("raw_response"),
            usage=Usage(usage.get("input_tokens", 0), usage.get("output_tokens", 0)),
        )


class ExtractorBackend(Protocol):
    """Pluggable extractor: raw structured-text response plus token usage."""

    def extract(self, request: ModelRequest) -> tuple[str, Usage]: ...


# --- request assembly ---------------------------------------------------------

def section_text(section: Section, packet: DocumentPacket) -> str:
    """Concatenated line text of the section's pages, with page markers."""
    parts = []
    for idx in section.page_indices:
        page = packet.pages[idx]
        parts.append(f"[page {page.index}]")
        if page.lines:
            parts.append(page.text)
    return "\n".join(parts)


def _few_shot_block(schema: ClassSchema) -> str:
    lines = []
    for attr in schema.attributes:
        for given, expected in attr.few_shot_examples:
            lines.append(f'Example input: "{given}" -> {{"{attr.name}": {json.dumps(expected)}}}')
    return "\n".join(lines)


def build_request(
    section: Section,
    packet: DocumentPacket,
    schema: ClassSchema,
    modality: str = "ocr",
    few_shot: bool = False,
) -> ModelRequest:
    """Assemble the backend request for one section.

    Prompt order: class description, attribute list with kinds, few-shot
    block (only when enabled and examples exist), then section text. Image
    modality ships image references and omits the text; ocr+image ships both.
    """
    if modality not in MODALITIES:
        raise ValueError(f"modality must be one of {MODALITIES}, got {modality!r}")
    text = section_text(section, packet)
    has_text = any(packet.pages[i].lines for i in section.page_indices)
    image_refs = tuple(
        packet.pages[i].image_ref for i in section.page_indices if packet.pages[i].image_ref
    )
    if "ocr" in modality and not has_text:
        raise EmptyInput(f"section {section.section_id}: no text lines for modality {modality!r}")
    if "image" in modality and not image_refs:
        raise MissingImage(f"section {section.section_id}: no page images for modality {modality!r}")

    parts = [f"Document class: {schema.class_name}"]
    if schema.description:
        parts.append(f"Definition: {schema.description}")
    parts.append("Extract these attributes and answer with a JSON object keyed by attribute name:")
    for attr in schema.attributes:
        desc = f" - {attr.description}" if attr.description else ""
        parts.append(f"- {attr.name} ({attr.value_kind}){desc}")
        for sub in attr.fields:
            parts.append(f"  - {attr.name}.{sub.name} ({sub.value_kind})")
    if few_shot:
        block = _few_shot_block(schema)
        if block:
            parts.append(block)
    include_text = "ocr" in modality
    if include_text:
        parts.append("Section text:")
        parts.append(text)
    return ModelRequest(
        class_name=schema.class_name,
        prompt="\n".join(parts),
        section_text=text if include_text else "",
        modality=modality,
        image_refs=image_refs if "image" in modality else (),
        schema=schema,
    )


# --- output validation --------------------------------------------------------

def _validate_record(raw: dict, attr: AttributeSchema) -> dict:
    record = {}
    known = {sub.name: sub for sub in attr.fields}
    for key, value in raw.items():
        sub = known.get(key)
        if sub is None:
            logger.warning("%s: unknown record field %r dropped", attr.name, key)
            continue
        if value is None:
            continue
        try:
            record[key] = check_kind(value, sub.value_kind, f"{attr.name}.{key}")
        except KindMismatch as exc:
            raise StructureError(str(exc)) from exc
    return record


def _unwrap(raw_value) -> tuple[object, float | None, list | None, str | None]:
    """Accept bare values or {value, confidence?, bbox?, justification?} wrappers."""
    if isinstance(raw_value, dict) and "value" in raw_value:
        return (
            raw_value.get("value"),
            raw_value.get("confidence"),
            raw_value.get("bbox"),
            raw_value.get("justification"),
        )
    return raw_value, None, None, None


def validate_output(raw: str, schema: ClassSchema) -> list[AttributeValue]:
    """Parse and kind-check a backend response against the class schema.

    Unknown attributes are dropped with a warning; missing ones are simply
    absent. Anything unparseable, mis-shapen, or kind-mismatched raises
    StructureError — the error that marks a document Failed after retries.
    """
    try:
        data = json.loads(raw)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise StructureError(f"response is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise StructureError(f"response top level must be an object, got {type(data).__name__}")

    by_name = {attr.name: attr for attr in schema.attributes}
    values: list[AttributeValue] = []
    for name, raw_value in data.items():
        attr = by_name.get(name)
        if attr is None:
            logger.warning("%s: unknown attribute %r dropped from backend output", schema.class_name, name)
            continue
        value, confidence, bbox_raw, justification = _unwrap(raw_value)
        if value is None:
            continue
        try:
            value = check_kind(value, attr.value_kind, name)
        except KindMismatch as exc:
            raise StructureError(str(exc)) from exc
        if attr.value_kind == "list-of-records":
            value = [_validate_record(rec, attr) for rec in value]
        if confidence is None:
            confidence = 1.0
        if not isinstance(confidence, (int, float)) or isinstance(confidence, bool) or not 0.0 <= confidence <= 1.0:
            raise StructureError(f"{name}: confidence must be a number in [0,1], got {confidence!r}")
        bbox = None
        if bbox_raw is not None:
            try:
                bbox = BoundingBox.from_list(bbox_raw)
            except Exception as exc:
                raise StructureError(f"{name}: invalid bbox: {exc}") from exc
        values.append(
            AttributeValue(
                name=name,
                value=value,
                confidence=float(confidence),
                bbox=bbox,
                justification=justification if isinstance(justification, str) else None,
            )
        )
    # Deterministic ordering: schema order, not backend key order.
    order = {attr.name: i for i, attr in enumerate(schema.attributes)}
    values.sort(key=lambda v: order[v.name])
    return values


# --- extraction with retries ---------------------------------------------------

def compute_cost(usage: Usage, backend_name: str, price_table: dict | None) -> float:
    """usage x configured per-1K-token prices; zero usage is always zero cost."""
    if not price_table or backend_name not in price_table:
        return 0.0
    prices = price_table[backend_name]
    return (
        usage.input_tokens / 1000.0 * float(prices.get("price_in", 0.0))
        + usage.output_tokens / 1000.0 * float(prices.get("price_out", 0.0))
    )


def extract_section(
    section: Section,
    packet: DocumentPacket,
    schema: ClassSchema,
    backend: ExtractorBackend,
    modality: str = "ocr",
    policy: RetryPolicy | None = None,
    *,
    few_shot: bool = False,
    backend_name: str = "mock",
    price_table: dict | None = None,
    sleeper=time.sleep,
    rng=None,
) -> ExtractionResult:
    """Run one section through the backend, retrying per the policy.

    Failures are encoded in the result status, never raised: structure
    failures read "invalid output structure", backend failures record
    failure_kind "backend" so the orchestrator can dead-letter the job.
    """
    policy = policy or RetryPolicy()
    started = time.perf_counter()
    usage = Usage()

    def finish(**kwargs) -> ExtractionResult:
        return ExtractionResult(
            section_id=section.section_id,
            class_name=section.class_name,
            latency_s=time.perf_counter() - started,
            usage=usage,
            cost=compute_cost(usage, backend_name, price_table),
            **kwargs,
        )

    try:
        request = build_request(section, packet, schema, modality=modality, few_shot=few_shot)
    except (EmptyInput, MissingImage) as exc:
        return finish(status="failed", failure_reason=str(exc), failure_kind="input")

    last_exc: Exception | None = None
    raw: str | None = None
    for attempt in range(1, policy.max_attempts + 1):
        try:
            raw, attempt_usage = backend.extract(request)
            usage = usage + attempt_usage
            values = validate_output(raw, schema)
            return finish(status="ok", attributes=tuple(values), attempts=attempt, raw_response=raw)
        except StructureError as exc:
            last_exc = exc
        except BackendError as exc:
            last_exc = exc
        if attempt < policy.max_attempts:
            sleeper(policy.delay(attempt, rng))
    if isinstance(last_exc, StructureError):
        reason = f"invalid output structure: {last_exc}"
        kind = "structure"
    else:
        reason = f"backend error: {last_exc}"
        kind = "backend"
    return finish(
        status="failed",
        failure_reason=reason,
        failure_kind=kind,
        attempts=policy.max_attempts,
        raw_response=raw,
    )


# --- backends -------------------------------------------------------------------

def _usage_for(prompt: str, response: str) -> Usage:
    # Deterministic stand-in for tokenizer counts.
    return Usage(input_tokens=max(1, len(prompt) // 4), output_tokens=max(1, len(response) // 4))


def split_low_suffix(pattern: str) -> tuple[str, bool]:
    if pattern.endswith(LOW_SUFFIX):
        return pattern[: -len(LOW_SUFFIX)], True
    return pattern, False


def _coerce_capture(text: str, value_kind: str):
    """Best-effort coercion; None when the capture can't satisfy the kind."""
    try:
        return check_kind(text.strip(), value_kind, "capture")
    except KindMismatch:
        return None


class MockExtractorBackend:
    """Deterministic offline extractor driven by per-attribute mock patterns.

    Scalar patterns emit their first capture group coerced to the attribute
    kind; list-of-records patterns emit one record per match from named
    groups. Patterns carrying the ``::low`` suffix report confidence 0.5
    instead of 0.95, exercising review routing. Output is always
    structurally valid.
    """

    deterministic = True

    def __init__(self):
        self.calls = 0

    def extract(self, request: ModelRequest) -> tuple[str, Usage]:
        self.calls += 1
        schema = request.schema
        out: dict = {}
        if schema is not None:
            for attr in schema.attributes:
                if not attr.mock_pattern:
                    continue
                pattern, low = split_low_suffix(attr.mock_pattern)
                try:
                    compiled = re.compile(pattern, re.MULTILINE)
                except re.error:
                    logger.warning("%s: invalid mock pattern %r skipped", attr.name, attr.mock_pattern)
                    continue
                confidence = MOCK_LOW_CONFIDENCE if low else MOCK_CONFIDENCE
                if attr.value_kind == "list-of-records":
                    records = []
                    for match in compiled.finditer(request.section_text):
                        record = {}
                        groups = match.groupdict()
                        for sub in attr.fields:
                            captured = groups.get(sub.name)
                            if captured is None:
                                continue
                            value = _coerce_capture(captured, sub.value_kind)
                            if value is not None:
                                record[sub.name] = value
                        if record:
                            records.append(record)
                    if records:
                        out[attr.name] = {"value": records, "confidence": confidence}
                else:
                    match = compiled.search(request.section_text)
                    if match:
                        captured = match.group(1) if match.groups() else match.group(0)
                        value = _coerce_capture(captured, attr.value_kind)
                        if value is not None:
                            out[attr.name] = {
                                "value": value,
                                "confidence": confidence,
                                "justification": f"pattern match for {attr.name}",
                            }
        raw = json.dumps(out, sort_keys=True)
        return raw, _usage_for(request.prompt, raw)


class AlwaysProseBackend:
    """Misbehaving backend: answers in prose, never valid structure."""

    deterministic = True

    def __init__(self):
        self.calls = 0

    def extract(self, request: ModelRequest) -> tuple[str, Usage]:
        self.calls += 1
        raw = "Sure! The values you asked about are all in the document, happy to help."
        return raw, _usage_for(request.prompt, raw)


class HttpExtractorBackend:
    """Thin adapter speaking a plain request/response wire call.

    Posts {class_name, prompt, modality, image_refs} to ``<endpoint>/extract``
    and expects {"raw": str, "usage": {"input_tokens", "output_tokens"}}.
    Endpoint and credentials come from configuration or the environment
    (DOCPIPE_MODEL_ENDPOINT / DOCPIPE_MODEL_TOKEN); never exercised offline.
    """

    deterministic = False

    def __init__(self, endpoint: str, token: str = "", timeout_s: float = 120.0):
        self.endpoint = endpoint.rstrip("/")
        self.token = token
        self.timeout_s = timeout_s

    def extract(self, request: ModelRequest) -> tuple[str, Usage]:
        import httpx

        headers = {"Authorization": f"Bearer {self.token}"} if self.token else {}
        payload = {
            "class_name": request.class_name,
            "prompt": request.prompt,
            "modality": request.modality,
            "image_refs": list(request.image_refs),
        }
        try:
            response = httpx.post(
                f"{self.endpoint}/extract", json=payload, headers=headers, timeout=self.timeout_s
            )
        except httpx.HTTPError as exc:
            raise BackendError(f"model endpoint unreachable: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(f"model endpoint returned {response.status_code}")
        body = response.json()
        usage = body.get("usage") or {}
        return str(body.get("raw", "")), Usage(
            input_tokens=int(usage.get("input_tokens", 0)),
            output_tokens=int(usage.get("output_tokens", 0)),
        )
