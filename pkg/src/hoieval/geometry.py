"""Bounding-box arithmetic and the spatial matching predicate."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in corner (x_min, y_min, x_max, y_max) format.

    Coordinates are real-valued image-space pixels. Degenerate (zero-area)
    boxes are rejected at construction.
    """

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        for name in ("x_min", "y_min", "x_max", "y_max"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f"box coordinate {name} is not finite: {value}")
            if value < 0:
                raise ValidationError(f"box coordinate {name} is negative: {value}")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValidationError(
                f"degenerate box: ({self.x_min}, {self.y_min}, {self.x_max}, {self.y_max})"
            )

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)

    @classmethod
    def from_sequence(cls, coords) -> "BoundingBox":
        if len(coords) != 4:
            raise ValidationError(f"box needs 4 coordinates, got {len(coords)}")
        return cls(*(float(c) for c in coords))


@dataclass(frozen=True)
class UnionRegion:
    """Smallest axis-aligned box containing a human box and an object box."""

    box: BoundingBox


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes; 0.0 when disjoint."""
    ix_min = max(a.x_min, b.x_min)
    iy_min = max(a.y_min, b.y_min)
    ix_max = min(a.x_max, b.x_max)
    iy_max = min(a.y_max, b.y_max)
    iw = ix_max - ix_min
    ih = iy_max - iy_min
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    return inter / union


def union_box(a: BoundingBox, b: BoundingBox) -> UnionRegion:
    """Per-axis min/max hull of the two boxes."""
    return UnionRegion(
        BoundingBox(
            min(a.x_min, b.x_min),
            min(a.y_min, b.y_min),
            max(a.x_max, b.x_max),
            max(a.y_max, b.y_max),
        )
    )


def spatial_match(
    pred_pair: tuple[BoundingBox, BoundingBox],
    gt_pair: tuple[BoundingBox, BoundingBox],
    iou_threshold: float = 0.5,
) -> bool:
    """True iff both the human IoU and the object IoU reach the threshold.

    The comparison is inclusive (>=), so a pair sitting exactly at the
    threshold matches.
    """
    if not (0.0 < iou_threshold <= 1.0):
        raise ValidationError(f"iou_threshold must be in (0, 1], got {iou_threshold}")
    pred_h, pred_o = pred_pair
    gt_h, gt_o = gt_pair
    return iou(pred_h, gt_h) >= iou_threshold and iou(pred_o, gt_o) >= iou_threshold
