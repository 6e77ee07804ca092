"""Domain data model, configuration loading, and input validation."""

from docpipe.core.model import (
    AttributeSchema,
    BoundingBox,
    ClassSchema,
    ComparatorSpec,
    DocumentPacket,
    GroundTruth,
    GroundTruthSection,
    Page,
    TextLine,
    OTHER_CLASS,
)
from docpipe.core.loaders import (
    load_class_config,
    load_ground_truth,
    load_packet,
    dump_packet,
    parse_class_config,
    parse_ground_truth,
    parse_packet,
)

__all__ = [
    "AttributeSchema",
    "BoundingBox",
    "ClassSchema",
    "ComparatorSpec",
    "DocumentPacket",
    "GroundTruth",
    "GroundTruthSection",
    "Page",
    "TextLine",
    "OTHER_CLASS",
    "load_class_config",
    "load_ground_truth",
    "load_packet",
    "dump_packet",
    "parse_class_config",
    "parse_ground_truth",
    "parse_packet",
]
