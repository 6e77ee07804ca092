"""Confidence reporting, review routing, and review-decision application.

Flagging is strict: an attribute is flagged when its confidence is below the
threshold, so a confidence of exactly 0.8 passes under the default. Review
decisions certify attributes: both accepts and overrides end at confidence
1.0 with human provenance, and every action lands in the append-only
correction history.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from docpipe.core.model import ClassSchema, TextLine
from docpipe.errors import (
    AssessOnFailed,
    IncompleteDecision,
    KindMismatch,
    Unauthorized,
)
from docpipe.extraction import AttributeValue, ExtractionResult
from docpipe.values import check_kind

DEFAULT_CONFIDENCE_THRESHOLD = 0.8

ROLES = ("admin", "reviewer")


@dataclass(frozen=True)
class ConfidenceEntry:
    name: str
    confidence: float
    flagged: bool
    justification: str | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "confidence": self.confidence,
            "flagged": self.flagged,
            "justification": self.justification,
        }


@dataclass(frozen=True)
class OcrSummary:
    min: float = 1.0
    mean: float = 1.0

    def to_dict(self) -> dict:
        return {"min": self.min, "mean": self.mean}


@dataclass(frozen=True)
class ConfidenceReport:
    section_id: str
    entries: tuple[ConfidenceEntry, ...]
    ocr_summary: OcrSummary
    min_attribute_confidence: float
    threshold: float

    def flagged_names(self) -> list[str]:
        return [e.name for e in self.entries if e.flagged]

    def to_dict(self) -> dict:
        return {
            "section_id": self.section_id,
            "entries": [e.to_dict() for e in self.entries],
            "ocr_summary": self.ocr_summary.to_dict(),
            "min_attribute_confidence": self.min_attribute_confidence,
            "threshold": self.threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConfidenceReport":
        return cls(
            section_id=d["section_id"],
            entries=tuple(
                ConfidenceEntry(
                    name=e["name"],
                    confidence=e["confidence"],
                    flagged=e["flagged"],
                    justification=e.get("justification"),
                )
                for e in d.get("entries", [])
            ),
            ocr_summary=OcrSummary(**d.get("ocr_summary", {})),
            min_attribute_confidence=d.get("min_attribute_confidence", 1.0),
            threshold=d.get("threshold", DEFAULT_CONFIDENCE_THRESHOLD),
        )


@dataclass(frozen=True)
class RoutingDecision:
    outcome: str  # auto_approve | review
    trigger_attributes: tuple[str, ...] = ()
    threshold_used: float = DEFAULT_CONFIDENCE_THRESHOLD

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "trigger_attributes": list(self.trigger_attributes),
            "threshold_used": self.threshold_used,
        }


@dataclass(frozen=True)
class ReviewAction:
    kind: str  # accept | override
    value: object = None

    def __post_init__(self):
        if self.kind not in ("accept", "override"):
            raise ValueError(f"action kind must be accept or override, got {self.kind!r}")


@dataclass(frozen=True)
class ReviewDecision:
    reviewer: str
    role: str
    actions: dict = field(default_factory=dict)  # attribute name -> ReviewAction
    timestamp: float = 0.0

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"role must be one of {ROLES}, got {self.role!r}")


def assess(
    result: ExtractionResult,
    lines: list[TextLine],
    threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
) -> ConfidenceReport:
    """Report per-attribute confidence and an OCR quality summary.

    Uses backend-reported confidences; flagged means strictly below the
    threshold. With no attributes the minimum confidence is 1.0.
    """
    if result.status != "ok":
        raise AssessOnFailed(f"cannot assess failed result for section {result.section_id}")
    entries = tuple(
        ConfidenceEntry(
            name=a.name,
            confidence=a.confidence,
            flagged=a.confidence < threshold,
            justification=a.justification,
        )
        for a in result.attributes
    )
    if lines:
        confidences = [line.confidence / 100.0 for line in lines]
        ocr = OcrSummary(min=min(confidences), mean=sum(confidences) / len(confidences))
    else:
        ocr = OcrSummary()
    min_conf = min((e.confidence for e in entries), default=1.0)
    return ConfidenceReport(
        section_id=result.section_id,
        entries=entries,
        ocr_summary=ocr,
        min_attribute_confidence=min_conf,
        threshold=threshold,
    )


def route(
    report: ConfidenceReport,
    hitl_enabled: bool,
    threshold: float = DEFAULT_CONFIDENCE_THRESHOLD,
) -> RoutingDecision:
    """Route to review iff review is enabled and any attribute is flagged."""
    flagged = tuple(e.name for e in report.entries if e.confidence < threshold)
    if hitl_enabled and flagged:
        return RoutingDecision(outcome="review", trigger_attributes=flagged, threshold_used=threshold)
    return RoutingDecision(outcome="auto_approve", trigger_attributes=(), threshold_used=threshold)


def apply_review(
    result: ExtractionResult,
    flagged_names: list[str],
    decision: ReviewDecision,
    schema: ClassSchema | None = None,
) -> tuple[ExtractionResult, list[dict]]:
    """Apply reviewer actions to a result; returns the updated result and
    correction records for the history log.

    Every flagged attribute needs exactly one action; reviewers may only act
    on flagged attributes while admins may also decide unflagged ones.
    Overrides are kind-checked against the schema.
    """
    missing = [name for name in flagged_names if name not in decision.actions]
    if missing:
        raise IncompleteDecision(f"flagged attributes without an action: {', '.join(sorted(missing))}")
    flagged = set(flagged_names)
    by_name = {a.name: a for a in result.attributes}
    for name in decision.actions:
        if name not in by_name:
            raise KindMismatch(f"decision names unknown attribute {name!r}")
        if name not in flagged and decision.role != "admin":
            raise Unauthorized(f"role {decision.role!r} cannot decide unflagged attribute {name!r}")

    corrections: list[dict] = []
    updated: list[AttributeValue] = []
    for attr in result.attributes:
        action = decision.actions.get(attr.name)
        if action is None:
            updated.append(attr)
            continue
        if action.kind == "override":
            new_value = action.value
            if schema is not None:
                attr_schema = schema.attribute(attr.name)
                if attr_schema is not None:
                    new_value = check_kind(new_value, attr_schema.value_kind, attr.name)
            else:
                if new_value is None:
                    raise KindMismatch(f"{attr.name}: override value must not be null")
        else:
            new_value = attr.value
        updated.append(
            replace(attr, value=new_value, confidence=1.0, provenance="human")
        )
        corrections.append(
            {
                "attribute": attr.name,
                "old": attr.value,
                "new": new_value,
                "action": action.kind,
                "reviewer": decision.reviewer,
                "role": decision.role,
                "timestamp": decision.timestamp,
            }
        )
    return replace(result, attributes=tuple(updated)), corrections
