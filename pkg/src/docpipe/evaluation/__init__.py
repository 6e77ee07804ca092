"""Structured-comparison engine: comparators, list matching, metrics."""

from docpipe.evaluation.text import edit_distance, similarity
from docpipe.evaluation.geometry import bbox_iou
from docpipe.evaluation.assignment import hungarian_assign
from docpipe.evaluation.comparators import MatchOutcome, compare_value
from docpipe.evaluation.structured import FieldCounts, evaluate_document, match_lists
from docpipe.evaluation.aggregate import EvaluationReport, aggregate, f1_score
from docpipe.evaluation.splitting import SplitReport, aggregate_splits, split_metrics

__all__ = [
    "edit_distance",
    "similarity",
    "bbox_iou",
    "hungarian_assign",
    "MatchOutcome",
    "compare_value",
    "FieldCounts",
    "evaluate_document",
    "match_lists",
    "EvaluationReport",
    "aggregate",
    "f1_score",
    "SplitReport",
    "split_metrics",
    "aggregate_splits",
]
