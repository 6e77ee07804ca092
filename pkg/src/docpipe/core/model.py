"""Core domain types: packets, pages, OCR lines, and extraction schemas.

All types are immutable after construction and safe to share across threads.
Constructors enforce local invariants; loaders add file-level context (field
paths) before construction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from docpipe.errors import ValidationError

# Reserved class for pages no classifier could place; never carries attributes.
OTHER_CLASS = "other"

VALUE_KINDS = ("string", "number", "date", "list-of-records")
COMPARATOR_KINDS = ("exact", "fuzzy", "numeric", "bbox-iou")

# Engine defaults; the fuzzy floor mirrors the documented confidence default.
DEFAULT_FUZZY_THRESHOLD = 0.8
DEFAULT_IOU_THRESHOLD = 0.5


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned rectangle in page-fraction coordinates, origin top-left."""

    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        for name in ("x0", "y0", "x1", "y1"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise ValidationError(f"{name}: must be a number, got {type(v).__name__}")
            if not 0.0 <= v <= 1.0:
                raise ValidationError(f"{name}: must be in [0,1], got {v}")
        if self.x0 > self.x1:
            raise ValidationError(f"x0 must not exceed x1 ({self.x0} > {self.x1})")
        if self.y0 > self.y1:
            raise ValidationError(f"y0 must not exceed y1 ({self.y0} > {self.y1})")

    def to_list(self) -> list[float]:
        return [self.x0, self.y0, self.x1, self.y1]

    @classmethod
    def from_list(cls, raw) -> "BoundingBox":
        if not isinstance(raw, (list, tuple)) or len(raw) != 4:
            raise ValidationError(f"bbox: expected [x0,y0,x1,y1], got {raw!r}")
        return cls(*[float(v) for v in raw])


@dataclass(frozen=True)
class TextLine:
    """One OCR line: text, OCR confidence as a percentage, and its box."""

    text: str
    confidence: float
    bbox: BoundingBox

    def __post_init__(self):
        if not isinstance(self.text, str):
            raise ValidationError("text: must be a string")
        if not isinstance(self.confidence, (int, float)) or isinstance(self.confidence, bool):
            raise ValidationError("confidence: must be a number")
        if not 0.0 <= self.confidence <= 100.0:
            raise ValidationError(f"confidence: must be in [0,100], got {self.confidence}")

    def to_dict(self) -> dict:
        return {"text": self.text, "confidence": self.confidence, "bbox": self.bbox.to_list()}


@dataclass(frozen=True)
class Page:
    """One page of a packet: 0-based index, OCR lines, optional image path."""

    index: int
    lines: tuple[TextLine, ...] = ()
    image_ref: str | None = None

    def __post_init__(self):
        if not isinstance(self.index, int) or isinstance(self.index, bool) or self.index < 0:
            raise ValidationError(f"index: must be a nonnegative integer, got {self.index!r}")
        object.__setattr__(self, "lines", tuple(self.lines))

    @property
    def text(self) -> str:
        return "\n".join(line.text for line in self.lines)

    def to_dict(self) -> dict:
        d: dict = {"index": self.index, "lines": [line.to_dict() for line in self.lines]}
        if self.image_ref is not None:
            d["image_ref"] = self.image_ref
        return d


@dataclass(frozen=True)
class DocumentPacket:
    """An ordered multi-document file: pages 0..n-1 with no gaps."""

    packet_id: str
    pages: tuple[Page, ...]
    source_path: str = ""

    def __post_init__(self):
        if not isinstance(self.packet_id, str) or not self.packet_id:
            raise ValidationError("packet_id: must be a nonempty string")
        object.__setattr__(self, "pages", tuple(self.pages))
        if not self.pages:
            raise ValidationError("pages: a packet must have at least one page")
        indices = [p.index for p in self.pages]
        if indices != list(range(len(self.pages))):
            raise ValidationError(
                f"pages: indices must be 0..{len(self.pages) - 1} with no gaps or duplicates, got {indices}"
            )

    @property
    def page_count(self) -> int:
        return len(self.pages)

    def to_dict(self) -> dict:
        return {"packet_id": self.packet_id, "pages": [p.to_dict() for p in self.pages]}


@dataclass(frozen=True)
class ComparatorSpec:
    """How an attribute's predicted value is matched against ground truth."""

    kind: str = "exact"
    threshold: float = DEFAULT_FUZZY_THRESHOLD
    tolerance: float = 0.0
    normalize_case: bool = True
    trim_whitespace: bool = True

    def __post_init__(self):
        if self.kind not in COMPARATOR_KINDS:
            raise ValidationError(f"comparator.kind: unknown kind {self.kind!r}")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValidationError(f"comparator.threshold: must be in [0,1], got {self.threshold}")
        if self.tolerance < 0:
            raise ValidationError(f"comparator.tolerance: must be >= 0, got {self.tolerance}")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "threshold": self.threshold,
            "tolerance": self.tolerance,
            "normalize_case": self.normalize_case,
            "trim_whitespace": self.trim_whitespace,
        }


def default_comparator(value_kind: str) -> ComparatorSpec:
    """Comparator applied when the config omits one: numeric for numbers, exact otherwise."""
    if value_kind == "number":
        return ComparatorSpec(kind="numeric")
    return ComparatorSpec(kind="exact")


@dataclass(frozen=True)
class AttributeSchema:
    """One extractable attribute: kind, comparator, weight, and mock/few-shot hints."""

    name: str
    value_kind: str = "string"
    comparator: ComparatorSpec | None = None
    weight: float = 1.0
    description: str = ""
    mock_pattern: str | None = None
    few_shot_examples: tuple[tuple[str, str], ...] = ()
    fields: tuple["AttributeSchema", ...] = ()

    def __post_init__(self):
        if not isinstance(self.name, str) or not self.name:
            raise ValidationError("attribute.name: must be a nonempty string")
        if self.value_kind not in VALUE_KINDS:
            raise ValidationError(f"{self.name}: unknown value_kind {self.value_kind!r}")
        if self.weight < 0:
            raise ValidationError(f"{self.name}: weight must be >= 0, got {self.weight}")
        if self.comparator is None:
            object.__setattr__(self, "comparator", default_comparator(self.value_kind))
        object.__setattr__(self, "fields", tuple(self.fields))
        object.__setattr__(
            self, "few_shot_examples", tuple(tuple(pair) for pair in self.few_shot_examples)
        )
        if self.value_kind == "list-of-records":
            if not self.fields:
                raise ValidationError(f"{self.name}: list-of-records requires at least one nested field")
            seen = set()
            for f in self.fields:
                if f.name in seen:
                    raise ValidationError(f"{self.name}: duplicate nested field {f.name!r}")
                seen.add(f.name)
                if f.value_kind == "list-of-records":
                    raise ValidationError(f"{self.name}.{f.name}: nested lists are not supported")
        elif self.fields:
            raise ValidationError(f"{self.name}: only list-of-records attributes take nested fields")

    def to_dict(self) -> dict:
        d: dict = {
            "name": self.name,
            "value_kind": self.value_kind,
            "comparator": self.comparator.to_dict(),
            "weight": self.weight,
        }
        if self.description:
            d["description"] = self.description
        if self.mock_pattern is not None:
            d["mock_pattern"] = self.mock_pattern
        if self.few_shot_examples:
            d["few_shot_examples"] = [list(pair) for pair in self.few_shot_examples]
        if self.fields:
            d["fields"] = [f.to_dict() for f in self.fields]
        return d


@dataclass(frozen=True)
class ClassSchema:
    """A document class: natural-language definition, mock keywords, attributes."""

    class_name: str
    description: str = ""
    keywords: tuple[str, ...] = ()
    attributes: tuple[AttributeSchema, ...] = ()

    def __post_init__(self):
        if not isinstance(self.class_name, str) or not self.class_name:
            raise ValidationError("class_name: must be a nonempty string")
        object.__setattr__(self, "keywords", tuple(self.keywords))
        object.__setattr__(self, "attributes", tuple(self.attributes))
        if self.class_name == OTHER_CLASS and self.attributes:
            raise ValidationError(f"class {OTHER_CLASS!r} is reserved and must not declare attributes")
        seen = set()
        for attr in self.attributes:
            if attr.name in seen:
                raise ValidationError(f"{self.class_name}: duplicate attribute {attr.name!r}")
            seen.add(attr.name)

    def attribute(self, name: str) -> AttributeSchema | None:
        for attr in self.attributes:
            if attr.name == name:
                return attr
        return None

    def to_dict(self) -> dict:
        return {
            "class_name": self.class_name,
            "description": self.description,
            "keywords": list(self.keywords),
            "attributes": [a.to_dict() for a in self.attributes],
        }


@dataclass(frozen=True)
class GroundTruthSection:
    """One labeled section of a packet baseline."""

    class_name: str
    pages: tuple[int, ...]
    attributes: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "pages", tuple(self.pages))
        if not self.pages:
            raise ValidationError("sections: a section must label at least one page")

    def to_dict(self) -> dict:
        return {"class_name": self.class_name, "pages": list(self.pages), "attributes": dict(self.attributes)}


@dataclass(frozen=True)
class GroundTruth:
    """A packet baseline: per-page class labels and expected attribute values."""

    packet_id: str
    sections: tuple[GroundTruthSection, ...]

    def __post_init__(self):
        object.__setattr__(self, "sections", tuple(self.sections))
        if not self.sections:
            raise ValidationError("sections: a baseline must label every page (empty list given)")

    def to_dict(self) -> dict:
        return {"packet_id": self.packet_id, "sections": [s.to_dict() for s in self.sections]}
