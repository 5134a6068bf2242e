"""Axis-aligned boxes in top-left/width/height ("tlwh") pixel coordinates."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, List, Optional

import numpy as np


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        # plain floats keep repr-based output free of numpy scalar reprs
        for name in ("x", "y", "w", "h"):
            object.__setattr__(self, name, float(getattr(self, name)))
        vals = (self.x, self.y, self.w, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite box {vals}")
        if self.w < 0 or self.h < 0:
            raise ValueError(f"negative box size {vals}")

    @classmethod
    def from_tlwh(cls, tlwh) -> "BoundingBox":
        x, y, w, h = (float(v) for v in tlwh)
        return cls(x, y, w, h)

    @classmethod
    def from_center(cls, xc: float, yc: float, w: float, h: float) -> "BoundingBox":
        """Box from center and size."""
        return cls(xc - w / 2.0, yc - h / 2.0, w, h)

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self):
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def tlwh(self) -> np.ndarray:
        return np.array([self.x, self.y, self.w, self.h], dtype=np.float64)

    def to_list(self) -> List[float]:
        return [self.x, self.y, self.w, self.h]

    def clip(self, width: float, height: float) -> "BoundingBox":
        """Intersect the box with the frame ``[0, width] x [0, height]``."""
        x1 = min(max(self.x, 0.0), width)
        y1 = min(max(self.y, 0.0), height)
        x2 = min(max(self.x + self.w, 0.0), width)
        y2 = min(max(self.y + self.h, 0.0), height)
        return BoundingBox(x1, y1, x2 - x1, y2 - y1)


@dataclass(frozen=True)
class Detection:
    box: BoundingBox
    score: float
    embedding_ref: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "score", float(self.score))
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"detection score {self.score} outside [0, 1]")


def area(b: BoundingBox) -> float:
    return b.w * b.h


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; 0 for disjoint or degenerate pairs.

    Same arithmetic as the vectorised kernel in :mod:`uavtrack.kernels`.
    """
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    if not iw > 0.0:
        return 0.0
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if not ih > 0.0:
        return 0.0
    inter = iw * ih
    union = (a.w * a.h + b.w * b.h) - inter
    if not union > 0.0:
        return 0.0
    # edge subtraction can round the overlap a hair above the true size
    return min(inter / union, 1.0)


def filter_min_area(dets: Iterable[Detection], min_area: float) -> List[Detection]:
    """Keep detections whose box area is strictly greater than ``min_area``."""
    if min_area < 0:
        raise ValueError("min_area must be >= 0")
    return [d for d in dets if d.box.w * d.box.h > min_area]


def boxes_to_array(boxes: Iterable[BoundingBox]) -> np.ndarray:
    arr = np.array([[b.x, b.y, b.w, b.h] for b in boxes], dtype=np.float64)
    return arr.reshape(-1, 4)
