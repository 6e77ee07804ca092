"""Page-level classification and BIO decoding into contiguous sections.

Decoding is total: malformed sequences are repaired rather than rejected
(leading I becomes B, a class-mismatched I becomes B, O pages become
singleton sections of the reserved "other" class), so every page always
lands in exactly one section.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Protocol

from docpipe.core.model import OTHER_CLASS, ClassSchema, DocumentPacket

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BioLabel:
    """Per-page label: B starts a section, I continues one, O is unclassified."""

    tag: str
    class_name: str = ""

    def __post_init__(self):
        if self.tag not in ("B", "I", "O"):
            raise ValueError(f"tag must be B, I, or O, got {self.tag!r}")
        if self.tag == "O" and self.class_name:
            raise ValueError("O labels carry no class name")
        if self.tag in ("B", "I") and not self.class_name:
            raise ValueError(f"{self.tag} labels require a class name")

    def to_dict(self) -> dict:
        return {"tag": self.tag, "class_name": self.class_name}

    @classmethod
    def from_dict(cls, d: dict) -> "BioLabel":
        return cls(tag=d["tag"], class_name=d.get("class_name", ""))

    def __str__(self) -> str:
        return self.tag if self.tag == "O" else f"{self.tag}-{self.class_name}"


@dataclass(frozen=True)
class Section:
    """A contiguous run of pages carrying one document class."""

    section_id: str
    class_name: str
    page_indices: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "page_indices", tuple(self.page_indices))
        if not self.page_indices:
            raise ValueError("a section must span at least one page")
        for prev, cur in zip(self.page_indices, self.page_indices[1:]):
            if cur != prev + 1:
                raise ValueError(f"page_indices must be contiguous ascending, got {self.page_indices}")

    def to_dict(self) -> dict:
        return {
            "section_id": self.section_id,
            "class_name": self.class_name,
            "page_indices": list(self.page_indices),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Section":
        return cls(
            section_id=d["section_id"],
            class_name=d["class_name"],
            page_indices=tuple(d["page_indices"]),
        )


class ClassifierBackend(Protocol):
    """Pluggable page classifier.

    Receives one page's text, its optional image reference, the configured
    class schemas (descriptions included so a model backend can use them),
    and the class predicted for the previous page (None on the first page).
    Returns a BioLabel whose class is drawn from the configuration or empty.
    """

    def classify_page(
        self,
        page_text: str,
        image_ref: str | None,
        classes: list[ClassSchema],
        prev_class: str | None,
    ) -> BioLabel: ...


class MockClassifierBackend:
    """Deterministic keyword classifier for offline runs.

    Scores each class by how many of its configured keywords occur in the
    page text (case-insensitive); argmax wins with ties broken by
    configuration order. All-zero scores yield O. The label is B when the
    predicted class differs from the previous page's prediction, else I.
    """

    deterministic = True

    def __init__(self):
        self.calls = 0

    def classify_page(self, page_text, image_ref, classes, prev_class):
        self.calls += 1
        haystack = page_text.lower()
        best_name = None
        best_score = 0
        for schema in classes:
            if schema.class_name == OTHER_CLASS:
                continue
            score = sum(1 for kw in schema.keywords if kw.lower() in haystack)
            if score > best_score:
                best_score = score
                best_name = schema.class_name
        if best_name is None:
            return BioLabel(tag="O")
        tag = "I" if best_name == prev_class else "B"
        return BioLabel(tag=tag, class_name=best_name)


def classify_pages(
    packet: DocumentPacket,
    classes: list[ClassSchema],
    backend: ClassifierBackend,
) -> list[BioLabel]:
    """Label every page of the packet, in page order.

    A backend label naming a class absent from the configuration is coerced
    to O and a warning is recorded. BackendError propagates to the caller's
    retry machinery.
    """
    if not classes:
        raise ValueError("classify_pages requires at least one configured class")
    configured = {c.class_name for c in classes} | {OTHER_CLASS}
    labels: list[BioLabel] = []
    prev_class: str | None = None
    for page in packet.pages:
        label = backend.classify_page(page.text, page.image_ref, list(classes), prev_class)
        if label.tag != "O" and label.class_name not in configured:
            logger.warning(
                "packet %s page %d: backend class %r not configured; coerced to O",
                packet.packet_id,
                page.index,
                label.class_name,
            )
            label = BioLabel(tag="O")
        labels.append(label)
        prev_class = label.class_name if label.tag != "O" else None
    return labels


def decode_bio(labels: list[BioLabel], section_prefix: str = "s") -> list[Section]:
    """Decode a label sequence into sections covering every page exactly once."""
    if not labels:
        raise ValueError("decode_bio requires a nonempty label sequence")
    # Each run is (class, pages, open); O singletons are closed and never extended.
    runs: list[tuple[str, list[int], bool]] = []
    for i, label in enumerate(labels):
        if label.tag == "O":
            runs.append((OTHER_CLASS, [i], False))
        elif label.tag == "B":
            runs.append((label.class_name, [i], True))
        else:  # I: extend the open section of the same class, else repair to B
            if runs and runs[-1][2] and runs[-1][0] == label.class_name:
                runs[-1][1].append(i)
            else:
                runs.append((label.class_name, [i], True))
    return [
        Section(section_id=f"{section_prefix}{k}", class_name=name, page_indices=tuple(pages))
        for k, (name, pages, _) in enumerate(runs)
    ]


def encode_sections(sections: list[Section]) -> list[BioLabel]:
    """Rebuild a label sequence: B on each section's first page, I thereafter."""
    ordered = sorted(sections, key=lambda s: s.page_indices[0])
    labels: list[BioLabel] = []
    for section in ordered:
        for j, _ in enumerate(section.page_indices):
            labels.append(BioLabel(tag="B" if j == 0 else "I", class_name=section.class_name))
    return labels


def sectionize(
    packet: DocumentPacket,
    classes: list[ClassSchema],
    backend: ClassifierBackend,
) -> list[Section]:
    """Classify then decode: sections cover all pages exactly once, in order."""
    return decode_bio(classify_pages(packet, classes, backend))
