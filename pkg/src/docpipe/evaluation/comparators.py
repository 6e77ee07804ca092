"""Attribute-level comparators: exact, fuzzy, numeric, and box-overlap."""
from __future__ import annotations

from dataclasses import dataclass

from docpipe.core.model import BoundingBox, ComparatorSpec
from docpipe.errors import KindMismatch
from docpipe.evaluation.geometry import bbox_iou
from docpipe.evaluation.text import normalize_text, similarity
from docpipe.values import parse_number


@dataclass(frozen=True)
class MatchOutcome:
    matched: bool
    score: float
    detail: str = ""


def _as_text(value, side: str) -> str:
    if not isinstance(value, str):
        raise KindMismatch(f"{side} value {value!r} is not a string")
    return value


def _as_box(value, side: str) -> BoundingBox:
    if isinstance(value, BoundingBox):
        return value
    if isinstance(value, (list, tuple)) and len(value) == 4:
        return BoundingBox(*[float(v) for v in value])
    raise KindMismatch(f"{side} value {value!r} is not a bounding box")


def compare_value(expected, predicted, spec: ComparatorSpec) -> MatchOutcome:
    """Match a predicted value against the expected one per the comparator."""
    if spec.kind == "exact":
        e = normalize_text(
            _as_text(expected, "expected"),
            normalize_case=spec.normalize_case,
            trim_whitespace=spec.trim_whitespace,
        )
        p = normalize_text(
            _as_text(predicted, "predicted"),
            normalize_case=spec.normalize_case,
            trim_whitespace=spec.trim_whitespace,
        )
        matched = e == p
        return MatchOutcome(matched, 1.0 if matched else 0.0, "exact")

    if spec.kind == "fuzzy":
        score = similarity(
            _as_text(expected, "expected"),
            _as_text(predicted, "predicted"),
            normalize_case=spec.normalize_case,
            trim_whitespace=spec.trim_whitespace,
        )
        matched = score >= spec.threshold
        return MatchOutcome(matched, score, f"similarity={score:.4f} vs threshold {spec.threshold}")

    if spec.kind == "numeric":
        e = parse_number(expected)
        p = parse_number(predicted)
        diff = abs(e - p)
        matched = diff <= spec.tolerance
        scale = max(abs(e), abs(p), 1.0)
        score = 1.0 if matched else max(0.0, 1.0 - diff / scale)
        return MatchOutcome(matched, score, f"|{e}-{p}|={diff} vs tolerance {spec.tolerance}")

    if spec.kind == "bbox-iou":
        iou = bbox_iou(_as_box(expected, "expected"), _as_box(predicted, "predicted"))
        matched = iou >= spec.threshold
        return MatchOutcome(matched, iou, f"iou={iou:.4f} vs threshold {spec.threshold}")

    raise KindMismatch(f"unknown comparator kind {spec.kind!r}")
