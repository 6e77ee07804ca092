"""Bounding-box overlap scoring."""
from __future__ import annotations

from docpipe.core.model import BoundingBox


def _area(x0: float, y0: float, x1: float, y1: float) -> float:
    return max(0.0, x1 - x0) * max(0.0, y1 - y0)


def bbox_iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0.0 when the union has no area."""
    ix0 = max(a.x0, b.x0)
    iy0 = max(a.y0, b.y0)
    ix1 = min(a.x1, b.x1)
    iy1 = min(a.y1, b.y1)
    inter = _area(ix0, iy0, ix1, iy1)
    union = _area(a.x0, a.y0, a.x1, a.y1) + _area(b.x0, b.y0, b.x1, b.y1) - inter
    if union <= 0.0:
        return 0.0
    return inter / union
