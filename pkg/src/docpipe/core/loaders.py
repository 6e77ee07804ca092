"""Loaders for the three on-disk formats: packets, class configs, ground truth.

Each loader parses JSON, walks the structure with explicit field paths, and
raises ParseError for malformed input or ValidationError for invariant
violations. Arbitrary bytes never crash a parser.
"""
from __future__ import annotations

import json
from pathlib import Path

from docpipe.core.model import (
    OTHER_CLASS,
    AttributeSchema,
    BoundingBox,
    ClassSchema,
    ComparatorSpec,
    DocumentPacket,
    GroundTruth,
    GroundTruthSection,
    Page,
    TextLine,
    default_comparator,
)
from docpipe.errors import ParseError, ValidationError


def _parse_json(text: str | bytes, what: str) -> dict:
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError, TypeError, ValueError) as exc:
        raise ParseError(f"{what}: not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{what}: top level must be an object, got {type(data).__name__}")
    return data


def _require(obj: dict, key: str, path: str):
    if key not in obj or obj[key] is None:
        raise ValidationError(f"{path}.{key}: required field missing")
    return obj[key]


def _as_str(value, path: str) -> str:
    if not isinstance(value, str):
        raise ValidationError(f"{path}: expected a string, got {type(value).__name__}")
    return value


def _as_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{path}: expected a number, got {type(value).__name__}")
    return float(value)


def _as_list(value, path: str) -> list:
    if not isinstance(value, list):
        raise ValidationError(f"{path}: expected a list, got {type(value).__name__}")
    return value


def _as_dict(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ValidationError(f"{path}: expected an object, got {type(value).__name__}")
    return value


def _wrap(path: str, exc: ValidationError) -> ValidationError:
    return ValidationError(f"{path}: {exc}")


# --- packets -----------------------------------------------------------------

def parse_packet(text: str | bytes, source_path: str = "") -> DocumentPacket:
    data = _parse_json(text, "packet")
    packet_id = _as_str(_require(data, "packet_id", "packet"), "packet.packet_id")
    pages_raw = _as_list(_require(data, "pages", "packet"), "packet.pages")
    pages = []
    for i, page_raw in enumerate(pages_raw):
        ppath = f"pages[{i}]"
        page_raw = _as_dict(page_raw, ppath)
        index = _require(page_raw, "index", ppath)
        if isinstance(index, bool) or not isinstance(index, int):
            raise ValidationError(f"{ppath}.index: expected an integer")
        lines = []
        for j, line_raw in enumerate(page_raw.get("lines") or []):
            lpath = f"{ppath}.lines[{j}]"
            line_raw = _as_dict(line_raw, lpath)
            text_val = _as_str(_require(line_raw, "text", lpath), f"{lpath}.text")
            conf = _as_number(_require(line_raw, "confidence", lpath), f"{lpath}.confidence")
            try:
                bbox = BoundingBox.from_list(_require(line_raw, "bbox", lpath))
                lines.append(TextLine(text=text_val, confidence=conf, bbox=bbox))
            except ValidationError as exc:
                raise _wrap(lpath, exc) from exc
        image_ref = page_raw.get("image_ref")
        if image_ref is not None:
            image_ref = _as_str(image_ref, f"{ppath}.image_ref")
        try:
            pages.append(Page(index=index, lines=tuple(lines), image_ref=image_ref))
        except ValidationError as exc:
            raise _wrap(ppath, exc) from exc
    return DocumentPacket(packet_id=packet_id, pages=tuple(pages), source_path=source_path)


def load_packet(path: str | Path) -> DocumentPacket:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"packet {path}: cannot read: {exc}") from exc
    return parse_packet(raw, source_path=str(path))


def dump_packet(packet: DocumentPacket, path: str | Path) -> None:
    Path(path).write_text(json.dumps(packet.to_dict(), indent=2, sort_keys=True) + "\n")


# --- class configs -----------------------------------------------------------

def _parse_comparator(raw, value_kind: str, path: str) -> ComparatorSpec:
    if raw is None:
        return default_comparator(value_kind)
    raw = _as_dict(raw, path)
    base = default_comparator(value_kind)
    kind = raw.get("kind") or base.kind
    # Null and absent behave identically: the default fills in.
    threshold = raw.get("threshold")
    if threshold is None:
        threshold = 0.5 if kind == "bbox-iou" else 0.8
    tolerance = raw.get("tolerance")
    if tolerance is None:
        tolerance = 0.0
    normalize_case = raw.get("normalize_case")
    if normalize_case is None:
        normalize_case = True
    trim = raw.get("trim_whitespace")
    if trim is None:
        trim = True
    try:
        return ComparatorSpec(
            kind=_as_str(kind, f"{path}.kind"),
            threshold=_as_number(threshold, f"{path}.threshold"),
            tolerance=_as_number(tolerance, f"{path}.tolerance"),
            normalize_case=bool(normalize_case),
            trim_whitespace=bool(trim),
        )
    except ValidationError as exc:
        raise _wrap(path, exc) from exc


def _parse_attribute(raw, path: str) -> AttributeSchema:
    raw = _as_dict(raw, path)
    name = _as_str(_require(raw, "name", path), f"{path}.name")
    value_kind = raw.get("value_kind") or "string"
    weight = raw.get("weight")
    if weight is None:
        weight = 1.0
    examples = []
    for k, pair in enumerate(raw.get("few_shot_examples") or []):
        epath = f"{path}.few_shot_examples[{k}]"
        pair = _as_list(pair, epath)
        if len(pair) != 2:
            raise ValidationError(f"{epath}: expected [input, expected] pair")
        examples.append((_as_str(pair[0], epath), _as_str(pair[1], epath)))
    fields = []
    for k, sub in enumerate(raw.get("fields") or []):
        fields.append(_parse_attribute(sub, f"{path}.fields[{k}]"))
    mock_pattern = raw.get("mock_pattern")
    if mock_pattern is not None:
        mock_pattern = _as_str(mock_pattern, f"{path}.mock_pattern")
    try:
        return AttributeSchema(
            name=name,
            value_kind=_as_str(value_kind, f"{path}.value_kind"),
            comparator=_parse_comparator(raw.get("comparator"), value_kind, f"{path}.comparator"),
            weight=_as_number(weight, f"{path}.weight"),
            description=_as_str(raw.get("description") or "", f"{path}.description"),
            mock_pattern=mock_pattern,
            few_shot_examples=tuple(examples),
            fields=tuple(fields),
        )
    except ValidationError as exc:
        raise _wrap(path, exc) from exc


def parse_class_config(text: str | bytes) -> list[ClassSchema]:
    data = _parse_json(text, "class config")
    classes_raw = _as_list(_require(data, "classes", "config"), "config.classes")
    classes = []
    names = set()
    for i, raw in enumerate(classes_raw):
        cpath = f"classes[{i}]"
        raw = _as_dict(raw, cpath)
        name = _as_str(_require(raw, "class_name", cpath), f"{cpath}.class_name")
        if name in names:
            raise ValidationError(f"{cpath}.class_name: duplicate class {name!r}")
        names.add(name)
        keywords = [_as_str(k, f"{cpath}.keywords") for k in raw.get("keywords") or []]
        attributes = [
            _parse_attribute(a, f"{cpath}.attributes[{j}]")
            for j, a in enumerate(raw.get("attributes") or [])
        ]
        try:
            classes.append(
                ClassSchema(
                    class_name=name,
                    description=_as_str(raw.get("description") or "", f"{cpath}.description"),
                    keywords=tuple(keywords),
                    attributes=tuple(attributes),
                )
            )
        except ValidationError as exc:
            raise _wrap(cpath, exc) from exc
    return classes


def load_class_config(path: str | Path) -> list[ClassSchema]:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"class config {path}: cannot read: {exc}") from exc
    return parse_class_config(raw)


# --- ground truth ------------------------------------------------------------

def parse_ground_truth(text: str | bytes, classes: list[ClassSchema] | None = None) -> GroundTruth:
    data = _parse_json(text, "ground truth")
    packet_id = _as_str(_require(data, "packet_id", "baseline"), "baseline.packet_id")
    sections_raw = _as_list(_require(data, "sections", "baseline"), "baseline.sections")
    known = {c.class_name for c in classes} | {OTHER_CLASS} if classes is not None else None
    sections = []
    for i, raw in enumerate(sections_raw):
        spath = f"sections[{i}]"
        raw = _as_dict(raw, spath)
        class_name = _as_str(_require(raw, "class_name", spath), f"{spath}.class_name")
        if known is not None and class_name not in known:
            raise ValidationError(f"{spath}.class_name: unknown class {class_name!r}")
        pages = _as_list(_require(raw, "pages", spath), f"{spath}.pages")
        for p in pages:
            if isinstance(p, bool) or not isinstance(p, int) or p < 0:
                raise ValidationError(f"{spath}.pages: expected nonnegative integers, got {p!r}")
        attributes = raw.get("attributes")
        if attributes is None:
            attributes = {}
        attributes = _as_dict(attributes, f"{spath}.attributes")
        try:
            sections.append(
                GroundTruthSection(class_name=class_name, pages=tuple(pages), attributes=dict(attributes))
            )
        except ValidationError as exc:
            raise _wrap(spath, exc) from exc
    try:
        return GroundTruth(packet_id=packet_id, sections=tuple(sections))
    except ValidationError as exc:
        raise _wrap("baseline", exc) from exc


def load_ground_truth(path: str | Path, classes: list[ClassSchema] | None = None) -> GroundTruth:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise ParseError(f"ground truth {path}: cannot read: {exc}") from exc
    return parse_ground_truth(raw, classes=classes)
