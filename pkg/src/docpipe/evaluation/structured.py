"""Weighted tp/fp/fn counting over schema-defined documents.

Scalar attributes compare directly; list-of-records attributes pair rows by
minimum-cost assignment before counting at the subfield level. Both-present-
but-wrong counts as fp and fn simultaneously (the usual KIE convention).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from docpipe.core.model import AttributeSchema, ClassSchema
from docpipe.evaluation.assignment import hungarian_assign
from docpipe.evaluation.comparators import compare_value

logger = logging.getLogger(__name__)


@dataclass
class Counts:
    tp: float = 0.0
    fp: float = 0.0
    fn: float = 0.0
    weight: float = 1.0


@dataclass
class FieldCounts:
    """Per-field weighted counts; accumulates additively across documents."""

    fields: dict[str, Counts] = field(default_factory=dict)

    def _slot(self, name: str, weight: float) -> Counts:
        if name not in self.fields:
            self.fields[name] = Counts(weight=weight)
        return self.fields[name]

    def add_tp(self, name: str, weight: float):
        self._slot(name, weight).tp += weight

    def add_fp(self, name: str, weight: float):
        self._slot(name, weight).fp += weight

    def add_fn(self, name: str, weight: float):
        self._slot(name, weight).fn += weight

    def merge(self, other: "FieldCounts") -> "FieldCounts":
        for name, counts in other.fields.items():
            slot = self._slot(name, counts.weight)
            slot.tp += counts.tp
            slot.fp += counts.fp
            slot.fn += counts.fn
        return self

    def totals(self) -> tuple[float, float, float]:
        # fsum: exactly rounded, so totals never depend on field order.
        ordered = [self.fields[name] for name in sorted(self.fields)]
        tp = math.fsum(c.tp for c in ordered)
        fp = math.fsum(c.fp for c in ordered)
        fn = math.fsum(c.fn for c in ordered)
        return tp, fp, fn

    @property
    def countable(self) -> bool:
        tp, fp, fn = self.totals()
        return (tp + fp + fn) > 0


def _present(record: dict, name: str) -> bool:
    return record.get(name) is not None


def _item_score(expected: dict, predicted: dict, attr: AttributeSchema) -> float:
    """Weighted fraction of matched subfields over the union of present ones."""
    num = 0.0
    denom = 0.0
    for sub in attr.fields:
        e_has = _present(expected, sub.name)
        p_has = _present(predicted, sub.name)
        if not e_has and not p_has:
            continue
        denom += sub.weight
        if e_has and p_has:
            if compare_value(expected[sub.name], predicted[sub.name], sub.comparator).matched:
                num += sub.weight
    if denom == 0.0:
        return 1.0  # two empty records are vacuously identical
    return num / denom


def _count_scalar(counts: FieldCounts, name: str, weight: float, expected, predicted, comparator):
    e_has = expected is not None
    p_has = predicted is not None
    if not e_has and not p_has:
        return
    if not e_has:
        counts.add_fp(name, weight)
    elif not p_has:
        counts.add_fn(name, weight)
    elif compare_value(expected, predicted, comparator).matched:
        counts.add_tp(name, weight)
    else:
        counts.add_fp(name, weight)
        counts.add_fn(name, weight)


def match_lists(
    expected_rows: list[dict],
    predicted_rows: list[dict],
    attr: AttributeSchema,
    counts: FieldCounts | None = None,
    prefix: str = "",
) -> list[tuple[int, int, float]]:
    """Pair expected and predicted records and count their subfields.

    Returns the surviving pairings as (expected_index, predicted_index,
    score). Zero-score pairings dissolve; their rows count as unpaired.
    Unpaired predicted rows charge every present subfield as fp, unpaired
    expected rows as fn.
    """
    if counts is None:
        counts = FieldCounts()
    prefix = prefix or attr.name
    scores = [[_item_score(e, p, attr) for p in predicted_rows] for e in expected_rows]
    if expected_rows and predicted_rows:
        cost = [[1.0 - s for s in row] for row in scores]
        pairs, _ = hungarian_assign(cost)
    else:
        pairs = []
    kept = [(i, j, scores[i][j]) for i, j in pairs if scores[i][j] > 0.0]
    paired_e = {i for i, _, _ in kept}
    paired_p = {j for _, j, _ in kept}

    for i, j, _score in kept:
        for sub in attr.fields:
            _count_scalar(
                counts,
                f"{prefix}.{sub.name}",
                attr.weight * sub.weight,
                expected_rows[i].get(sub.name),
                predicted_rows[j].get(sub.name),
                sub.comparator,
            )
    for j, record in enumerate(predicted_rows):
        if j in paired_p:
            continue
        for sub in attr.fields:
            if _present(record, sub.name):
                counts.add_fp(f"{prefix}.{sub.name}", attr.weight * sub.weight)
    for i, record in enumerate(expected_rows):
        if i in paired_e:
            continue
        for sub in attr.fields:
            if _present(record, sub.name):
                counts.add_fn(f"{prefix}.{sub.name}", attr.weight * sub.weight)
    return kept


def evaluate_document(
    expected: dict,
    predicted: dict,
    schema: ClassSchema,
    field_prefix: str = "",
) -> FieldCounts:
    """Count weighted tp/fp/fn for one document against its class schema."""
    counts = FieldCounts()
    known = {attr.name for attr in schema.attributes}
    for stray in set(expected) - known:
        logger.warning("%s: expected value for unknown attribute %r ignored", schema.class_name, stray)
    for attr in schema.attributes:
        name = f"{field_prefix}{attr.name}"
        e = expected.get(attr.name)
        p = predicted.get(attr.name)
        if attr.value_kind == "list-of-records":
            if e is None and p is None:
                continue
            match_lists(e or [], p or [], attr, counts, prefix=name)
        else:
            _count_scalar(counts, name, attr.weight, e, p, attr.comparator)
    return counts
