"""Test-time height adjustment of bounding-box centers.

A detected box center is displaced radially toward the image center by
alpha * h/2 pixels (h = box pixel height).  Positive alpha effectively
lowers the detected person; occluded people need a larger alpha because
lower-body occlusion shifts the box center radially outward.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .camera import PixelPoint
from .errors import OvershootsCenter, UndefinedDirection

ALPHA_MIN = -0.1
ALPHA_MAX = 1.0  # exclusive


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned person detection in pixel coordinates."""

    person_id: str
    center: PixelPoint
    width: float
    height: float
    occluded: bool = False

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(
                f"box {self.person_id!r}: width and height must be positive "
                f"(got {self.width} x {self.height})"
            )


def adjust(box: BoundingBox, alpha: float, image_center: PixelPoint) -> PixelPoint:
    """Displace the box center by alpha * h/2 toward the image center.

    Negative alpha moves away from the center.  The polar angle about the
    image center is preserved; only the radius changes, by exactly
    alpha * h/2.
    """
    if not (ALPHA_MIN <= alpha < ALPHA_MAX):
        raise ValueError(f"alpha {alpha} outside [{ALPHA_MIN}, {ALPHA_MAX})")
    if alpha == 0.0:
        return box.center
    du = box.center.u - image_center.u
    dv = box.center.v - image_center.v
    radius = math.hypot(du, dv)
    if radius == 0.0:
        raise UndefinedDirection(
            f"box {box.person_id!r} center coincides with the image center"
        )
    displacement = alpha * box.height / 2.0
    if displacement > radius:
        raise OvershootsCenter(
            f"box {box.person_id!r}: displacement {displacement:.2f} px exceeds "
            f"radius {radius:.2f} px"
        )
    scale = (radius - displacement) / radius
    return PixelPoint(u=image_center.u + du * scale, v=image_center.v + dv * scale)


def adjust_pair(
    a: BoundingBox,
    b: BoundingBox,
    alpha_visible: float,
    alpha_occluded: float,
    image_center: PixelPoint,
) -> tuple[PixelPoint, PixelPoint]:
    """Adjust two boxes, picking alpha by each box's occlusion flag."""
    return (
        adjust(a, alpha_occluded if a.occluded else alpha_visible, image_center),
        adjust(b, alpha_occluded if b.occluded else alpha_visible, image_center),
    )
