"""Relative-coordinate bounding boxes and the spatial predicates built on them.

All boxes are axis-aligned and expressed as fractions of image size:
``x``/``y`` is the top-left corner, ``w``/``h`` the extent, all nominally
in [0, 1].  Centers drive every spatial decision; "left" means the center
x is strictly below 0.5, "above" compares center ys, and so on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

#: Floor for degenerate extents and slack for clamping ingested boxes.
EPS = 1e-6


@dataclass(frozen=True)
class BoundingBox:
    x: float
    y: float
    w: float
    h: float

    @classmethod
    def clamped(cls, x: float, y: float, w: float, h: float) -> BoundingBox:
        """Build a box, nudging slightly out-of-range values back into [0, 1].

        Detectors occasionally emit coordinates a hair outside the image;
        those are clamped rather than rejected.  Extents are floored at EPS
        so downstream area math never divides by zero.
        """
        x = min(max(x, 0.0), 1.0)
        y = min(max(y, 0.0), 1.0)
        w = max(w, EPS)
        h = max(h, EPS)
        w = min(w, 1.0 + EPS - x)
        h = min(h, 1.0 + EPS - y)
        return cls(x=x, y=y, w=w, h=h)

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def area(self) -> float:
        return self.w * self.h

    def intersection(self, other: BoundingBox) -> float:
        ix = max(0.0, min(self.x + self.w, other.x + other.w) - max(self.x, other.x))
        iy = max(0.0, min(self.y + self.h, other.y + other.h) - max(self.y, other.y))
        return ix * iy

    def iou(self, other: BoundingBox) -> float:
        inter = self.intersection(other)
        union = self.area + other.area - inter
        return inter / union if union > 0 else 0.0

    def approx_equal(self, other: BoundingBox, tol: float = 1e-9) -> bool:
        return (
            math.isclose(self.x, other.x, abs_tol=tol)
            and math.isclose(self.y, other.y, abs_tol=tol)
            and math.isclose(self.w, other.w, abs_tol=tol)
            and math.isclose(self.h, other.h, abs_tol=tol)
        )

    def to_dict(self) -> dict[str, float]:
        return {"x": self.x, "y": self.y, "w": self.w, "h": self.h}

    @classmethod
    def from_dict(cls, d: dict[str, float]) -> BoundingBox:
        return cls.clamped(float(d["x"]), float(d["y"]), float(d["w"]), float(d["h"]))


def is_left_half(box: BoundingBox) -> bool:
    """Center strictly in the left half.  A center exactly on the midline
    counts as right, so the left/right split is exhaustive and exclusive."""
    return box.center[0] < 0.5


def is_top_half(box: BoundingBox) -> bool:
    """Center strictly in the top half; exactly on the midline counts as
    bottom."""
    return box.center[1] < 0.5


def is_left_of(a: BoundingBox, b: BoundingBox) -> bool:
    """Strict center comparison; equal centers make both orders False."""
    return a.center[0] < b.center[0]


def is_above(a: BoundingBox, b: BoundingBox) -> bool:
    return a.center[1] < b.center[1]
