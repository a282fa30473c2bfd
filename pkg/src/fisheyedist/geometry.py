"""Geometry-based inter-person distance estimation.

Each person's bounding-box center is back-projected at z = B - H/2 using an
assumed height H; the distance estimate is the Euclidean norm between the
resulting 3D points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .camera import CameraParams, PixelPoint, WorldPoint, backproject_points, height_to_pz


@dataclass(frozen=True)
class LocalizedPerson:
    """A detected person: bounding-box center plus an assumed height."""

    center: PixelPoint
    assumed_height: float
    world: Optional[WorldPoint] = None

    def locate(self, params: CameraParams) -> WorldPoint:
        """Back-project the center at z = B - H/2 (cached if already present)."""
        if self.world is not None:
            return self.world
        p_z = height_to_pz(params, self.assumed_height)
        xyz = backproject_points(self.center.as_array(), p_z, params)
        return WorldPoint(float(xyz[0]), float(xyz[1]), float(xyz[2]))


def estimate_distance(a: LocalizedPerson, b: LocalizedPerson, params: CameraParams) -> float:
    """3D-world Euclidean distance between two localized people, in inches."""
    pa = a.locate(params).as_array()
    pb = b.locate(params).as_array()
    return float(np.linalg.norm(pa - pb))


def batch_distances(people: Sequence[LocalizedPerson], params: CameraParams) -> np.ndarray:
    """Symmetric pairwise-distance matrix over ``people``.

    Each person is back-projected exactly once (n inversions for n people,
    not one per pair).  People whose centers cannot be back-projected get
    NaN in their row/column; all other entries are still computed.
    """
    n = len(people)
    if n < 2:
        raise ValueError("need at least two people")

    centers = np.array([[p.center.u, p.center.v] for p in people])
    heights = np.array([p.assumed_height for p in people])
    b = params.mount_height_b

    # masked back-projection: invalid people become NaN instead of raising
    p_z = b - heights / 2.0
    mx = (centers[:, 0] - params.cx) / params.fx
    my = (centers[:, 1] - params.cy) / params.fy
    r2 = mx * mx + my * my
    disc = 1.0 + (1.0 - params.xi**2) * r2
    valid = (heights > 0) & (heights < 2 * b) & (disc >= 0)
    eta = (params.xi + np.sqrt(np.where(valid, disc, 0.0))) / (r2 + 1.0)
    sz = eta - params.xi
    valid &= sz > 0
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(valid, p_z / np.where(sz != 0, sz, 1.0), np.nan)
    points = np.stack([eta * mx * scale, eta * my * scale,
                       np.where(valid, p_z, np.nan)], axis=1)

    # cached world points take precedence, matching locate()
    for i, person in enumerate(people):
        if person.world is not None:
            points[i] = person.world.as_array()

    diff = points[:, None, :] - points[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    np.fill_diagonal(dist, 0.0)
    # a person with an invalid projection has a NaN diagonal entry too
    bad = np.isnan(points).any(axis=1)
    dist[bad, :] = np.nan
    dist[:, bad] = np.nan
    return dist
