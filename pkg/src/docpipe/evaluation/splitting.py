"""Document-splitting accuracies: page-level, ordered, and unordered."""
from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

from docpipe.errors import PartitionError
from docpipe.segmentation import Section


@dataclass
class PacketSplit:
    """Raw per-packet counts feeding the micro-aggregated ratios."""

    packet_id: str
    page_total: int
    page_correct: int
    gt_section_count: int
    ordered_matched: int
    unordered_matched: int

    def to_dict(self) -> dict:
        return {
            "packet_id": self.packet_id,
            "page_total": self.page_total,
            "page_correct": self.page_correct,
            "gt_section_count": self.gt_section_count,
            "ordered_matched": self.ordered_matched,
            "unordered_matched": self.unordered_matched,
        }


@dataclass
class SplitReport:
    page_accuracy: float
    ordered_accuracy: float
    unordered_accuracy: float
    per_packet: list[PacketSplit] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "page_accuracy": self.page_accuracy,
            "ordered_accuracy": self.ordered_accuracy,
            "unordered_accuracy": self.unordered_accuracy,
            "per_packet": [p.to_dict() for p in self.per_packet],
        }


def _check_partition(sections: list[Section], page_count: int, side: str):
    pages = sorted(p for s in sections for p in s.page_indices)
    if pages != list(range(page_count)):
        raise PartitionError(f"{side} sections do not partition pages 0..{page_count - 1}: {pages}")


def _page_classes(sections: list[Section], page_count: int) -> list[str]:
    owner = [""] * page_count
    for s in sections:
        for p in s.page_indices:
            owner[p] = s.class_name
    return owner


def split_metrics(
    gt_sections: list[Section],
    pred_sections: list[Section],
    page_count: int,
    packet_id: str = "",
) -> SplitReport:
    """Score one packet's predicted split against its ground truth.

    Ordered accuracy credits predicted sections whose class and exact page
    sequence appear among the ground-truth sections (one-to-one, greedy in
    packet order); unordered compares page sets instead. Both divide by the
    ground-truth section count.
    """
    _check_partition(gt_sections, page_count, "ground-truth")
    _check_partition(pred_sections, page_count, "predicted")

    gt_classes = _page_classes(gt_sections, page_count)
    pred_classes = _page_classes(pred_sections, page_count)
    page_correct = sum(1 for g, p in zip(gt_classes, pred_classes) if g == p)

    ordered_pool = Counter((s.class_name, tuple(s.page_indices)) for s in gt_sections)
    unordered_pool = Counter((s.class_name, frozenset(s.page_indices)) for s in gt_sections)
    ordered = 0
    unordered = 0
    for s in sorted(pred_sections, key=lambda s: s.page_indices[0]):
        okey = (s.class_name, tuple(s.page_indices))
        if ordered_pool[okey] > 0:
            ordered_pool[okey] -= 1
            ordered += 1
        ukey = (s.class_name, frozenset(s.page_indices))
        if unordered_pool[ukey] > 0:
            unordered_pool[ukey] -= 1
            unordered += 1

    packet = PacketSplit(
        packet_id=packet_id,
        page_total=page_count,
        page_correct=page_correct,
        gt_section_count=len(gt_sections),
        ordered_matched=ordered,
        unordered_matched=unordered,
    )
    return aggregate_splits([packet])


def aggregate_splits(packets: list[PacketSplit]) -> SplitReport:
    """Micro-aggregate packet counts: totals over pages and ground-truth sections."""
    pages = sum(p.page_total for p in packets)
    correct = sum(p.page_correct for p in packets)
    gt_total = sum(p.gt_section_count for p in packets)
    ordered = sum(p.ordered_matched for p in packets)
    unordered = sum(p.unordered_matched for p in packets)
    return SplitReport(
        page_accuracy=correct / pages if pages else 0.0,
        ordered_accuracy=ordered / gt_total if gt_total else 0.0,
        unordered_accuracy=unordered / gt_total if gt_total else 0.0,
        per_packet=list(packets),
    )
