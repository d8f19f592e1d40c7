"""Axis-aligned box algebra: IoU, GIoU, DIoU, and the buffered-box variants.

Boxes are stored in top-left / width / height form with fractional pixel
coordinates; corner form is derived on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Buffer scales beyond this are pathological (the useful search range tops
# out well below 1); rejected at validation.
MAX_BUFFER_SCALE = 2.0


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box: left edge x, top edge y, width w, height h."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"box {name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        if self.w <= 0.0 or self.h <= 0.0:
            raise ValueError(f"box extent must be positive, got w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    @property
    def area(self) -> float:
        return self.w * self.h


def check_buffer_scale(b: float) -> float:
    """Validate a buffer scale: finite and within [0, MAX_BUFFER_SCALE]."""
    b = float(b)
    if not math.isfinite(b) or b < 0.0 or b > MAX_BUFFER_SCALE:
        raise ValueError(f"buffer scale must be in [0, {MAX_BUFFER_SCALE}], got {b!r}")
    return b


def buffer_box(box: BoundingBox, b: float) -> BoundingBox:
    """Expand a box by a buffer proportional to its own size.

    The buffered box keeps the original center and aspect ratio; each side
    grows by factor (1 + 2b).
    """
    b = check_buffer_scale(b)
    dx = b * box.w
    dy = b * box.h
    return BoundingBox(box.x - dx, box.y - dy, box.w + 2.0 * dx, box.h + 2.0 * dy)


def _intersection_area(a: BoundingBox, c: BoundingBox) -> float:
    iw = min(a.x2, c.x2) - max(a.x, c.x)
    ih = min(a.y2, c.y2) - max(a.y, c.y)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    return iw * ih


def iou(a: BoundingBox, c: BoundingBox) -> float:
    """Intersection over union, in [0, 1]; 0 for disjoint boxes."""
    if a == c:
        # corner arithmetic can lose an ulp on the self-overlap case
        return 1.0
    inter = _intersection_area(a, c)
    if inter == 0.0:
        return 0.0
    return inter / (a.area + c.area - inter)


def biou(a: BoundingBox, c: BoundingBox, b: float) -> float:
    """Buffered IoU: plain IoU after buffering *both* boxes by scale b.

    A buffer of 0 reduces to plain IoU exactly.
    """
    return iou(buffer_box(a, b), buffer_box(c, b))


def giou(a: BoundingBox, c: BoundingBox) -> float:
    """Generalized IoU, in [-1, 1]: IoU minus the hull-waste penalty."""
    inter = _intersection_area(a, c)
    union = a.area + c.area - inter
    hull = (max(a.x2, c.x2) - min(a.x, c.x)) * (max(a.y2, c.y2) - min(a.y, c.y))
    return inter / union - (hull - union) / hull


def diou(a: BoundingBox, c: BoundingBox) -> float:
    """Distance IoU, in [-1, 1]: IoU minus squared center offset over squared hull diagonal."""
    dx = a.cx - c.cx
    dy = a.cy - c.cy
    hull_w = max(a.x2, c.x2) - min(a.x, c.x)
    hull_h = max(a.y2, c.y2) - min(a.y, c.y)
    return iou(a, c) - (dx * dx + dy * dy) / (hull_w * hull_w + hull_h * hull_h)
