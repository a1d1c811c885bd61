"""Region arithmetic on image pixels.

A region is the protocol's crop/mask instruction: "crop" keeps the
sub-image under its one box, "mask_keep" keeps the original size and
blacks out every pixel outside its two boxes.  Boxes travel as relative
decimals and land on the pixel grid here; rounding is half-up on both
edges (0.25..0.75 of a 100px axis is exactly pixels 25..75), and a box
that rounds to zero pixels on either axis is an error rather than an
empty image.

Images are numpy arrays indexed [row, column, ...]; grayscale (2-d) and
channeled (3-d) arrays both work since only the first two axes are
touched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BadRequest, DegenerateRegionError

#: Relative box as (x, y, w, h) decimals.
Box = tuple[float, float, float, float]

#: Region op -> number of boxes it takes.
REGION_BOX_COUNT = {"crop": 1, "mask_keep": 2}


@dataclass(frozen=True)
class Region:
    op: str
    boxes: tuple[Box, ...]


def _pixel(value: float, size: int) -> int:
    # Half-up, not banker's: round(2.5) == 2 would shift odd grids.
    return min(max(int(math.floor(value * size + 0.5)), 0), size)


def pixel_box(box: Box, width: int, height: int) -> tuple[int, int, int, int]:
    """Snap a relative box to pixel edges as (x0, y0, x1, y1), clipped to
    the image.  Both edges are rounded independently, so a box's pixel
    width is round(right) - round(left), not round(w * width)."""
    x, y, w, h = box
    x0, x1 = _pixel(x, width), _pixel(x + w, width)
    y0, y1 = _pixel(y, height), _pixel(y + h, height)
    if x1 <= x0 or y1 <= y0:
        raise DegenerateRegionError(
            f"box {box} covers no pixels at {width}x{height}"
        )
    return (x0, y0, x1, y1)


def apply_region(image: np.ndarray, region: Region) -> np.ndarray:
    """Materialize a region: crop returns the sub-image, mask_keep a
    same-size copy with everything outside the boxes set to black."""
    if image.ndim < 2:
        raise BadRequest(f"image must have at least 2 axes, got {image.ndim}")
    height, width = image.shape[0], image.shape[1]
    expected = REGION_BOX_COUNT.get(region.op)
    if expected is None:
        raise BadRequest(f"unknown region op {region.op!r}")
    if len(region.boxes) != expected:
        raise BadRequest(
            f"region op {region.op!r} takes {expected} boxes, got {len(region.boxes)}"
        )
    if region.op == "crop":
        x0, y0, x1, y1 = pixel_box(region.boxes[0], width, height)
        return image[y0:y1, x0:x1].copy()
    out = np.zeros_like(image)
    for box in region.boxes:
        x0, y0, x1, y1 = pixel_box(box, width, height)
        out[y0:y1, x0:x1] = image[y0:y1, x0:x1]
    return out
