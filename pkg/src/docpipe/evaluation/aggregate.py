"""Micro and macro metric aggregation across document collections."""
from __future__ import annotations

import math

from dataclasses import dataclass, field

from docpipe.evaluation.structured import FieldCounts


def _precision(tp: float, fp: float) -> float:
    return tp / (tp + fp) if (tp + fp) > 0 else 0.0


def _recall(tp: float, fn: float) -> float:
    return tp / (tp + fn) if (tp + fn) > 0 else 0.0


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass
class EvaluationReport:
    micro_precision: float
    micro_recall: float
    micro_f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    extraction_score: float
    per_field: dict = field(default_factory=dict)
    document_count: int = 0
    failed_count: int = 0

    def to_dict(self) -> dict:
        return {
            "micro_precision": self.micro_precision,
            "micro_recall": self.micro_recall,
            "micro_f1": self.micro_f1,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "extraction_score": self.extraction_score,
            "per_field": self.per_field,
            "document_count": self.document_count,
            "failed_count": self.failed_count,
        }


def aggregate(per_document: list[FieldCounts], failed_count: int = 0) -> EvaluationReport:
    """Pool counts field-level (micro) and average per-document F1 (macro).

    Failed documents contribute nothing to the counts; they only raise
    failed_count. Documents with no countable fields are excluded from the
    macro means. Sums are exactly rounded (fsum), so document order never
    changes the report.
    """
    field_names = sorted({name for doc in per_document for name in doc.fields})
    pooled = FieldCounts()
    for name in field_names:
        slots = [doc.fields[name] for doc in per_document if name in doc.fields]
        slot = pooled._slot(name, slots[0].weight)
        slot.tp = math.fsum(c.tp for c in slots)
        slot.fp = math.fsum(c.fp for c in slots)
        slot.fn = math.fsum(c.fn for c in slots)
    tp, fp, fn = pooled.totals()
    micro_p = _precision(tp, fp)
    micro_r = _recall(tp, fn)
    micro_f1 = f1_score(micro_p, micro_r)

    doc_p: list[float] = []
    doc_r: list[float] = []
    doc_f1: list[float] = []
    for doc in per_document:
        if not doc.countable:
            continue
        dtp, dfp, dfn = doc.totals()
        p = _precision(dtp, dfp)
        r = _recall(dtp, dfn)
        doc_p.append(p)
        doc_r.append(r)
        doc_f1.append(f1_score(p, r))

    per_field = {}
    for name in sorted(pooled.fields):
        c = pooled.fields[name]
        p = _precision(c.tp, c.fp)
        r = _recall(c.tp, c.fn)
        per_field[name] = {
            "tp": c.tp,
            "fp": c.fp,
            "fn": c.fn,
            "weight": c.weight,
            "precision": p,
            "recall": r,
            "f1": f1_score(p, r),
        }

    def mean(xs: list[float]) -> float:
        return math.fsum(xs) / len(xs) if xs else 0.0

    return EvaluationReport(
        micro_precision=micro_p,
        micro_recall=micro_r,
        micro_f1=micro_f1,
        macro_precision=mean(doc_p),
        macro_recall=mean(doc_r),
        macro_f1=mean(doc_f1),
        extraction_score=micro_f1,
        per_field=per_field,
        document_count=len(per_document) + failed_count,
        failed_count=failed_count,
    )
