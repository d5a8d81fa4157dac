"""Axis-aligned bounding boxes, top-left + size convention."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BBox:
    """Box with top-left (x, y) and positive size (w, h), in pixels."""
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"box size must be positive, got {self.w}x{self.h}")

    @property
    def cx(self) -> float:
        return self.x + 0.5 * self.w

    @property
    def cy(self) -> float:
        return self.y + 0.5 * self.h

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    @classmethod
    def from_center(cls, cx, cy, w, h) -> "BBox":
        return cls(cx - 0.5 * w, cy - 0.5 * h, w, h)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.w, self.h], dtype=np.float64)

    def center_distance(self, other: "BBox") -> float:
        return float(np.hypot(self.cx - other.cx, self.cy - other.cy))
