"""Synthetic ground-truth generation through the forward camera model.

Two generators: a virtual chessboard-style grid of coplanar points with
exact pairwise distances (training data for the regression network), and
virtual-people scenes with controllable heights and lower-body occlusions
(evaluation data with exact floor-plane ground truth).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .adjust import BoundingBox
from .camera import CameraParams, PixelPoint, project_points
from .dataio import Category, DetectionsFile, GroundTruthFile, GroundTruthPair
from .errors import DegenerateProjection, GridOutsideFov, PersonOutsideFov

#: assumed body width for synthesized bounding boxes, inches
BODY_WIDTH_IN = 18.0

DEFAULT_IMAGE_SIDE = 2048

#: camera used by the DEPOF-style layout generator
DEFAULT_DEPOF_CAMERA = CameraParams(
    xi=1.0, fx=900.0, fy=900.0, cx=1024.0, cy=1024.0, mount_height_b=114.0
)

# 72 ft x 28 ft classroom, inches, centered on the camera in x
ROOM_HALF_X = 432.0
ROOM_HALF_Y = 168.0


@dataclass(frozen=True)
class GridSpec:
    """Virtual grid of coplanar corners at a fixed height above the floor."""

    rows: int
    cols: int
    spacing: float = 12.5
    plane_height: float = 32.5
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.spacing <= 0:
            raise ValueError("grid spacing must be positive")
        if self.rows < 2 or self.cols < 2:
            raise ValueError("grid needs at least 2x2 corners")


def generate_grid(
    spec: GridSpec,
    params: CameraParams,
    pair_budget: int,
    seed: int = 0,
    image_side: int = DEFAULT_IMAGE_SIDE,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample corner pairs from the projected grid.

    Returns (points_a, points_b, gt_distance): two (m, 2) pixel arrays and the
    exact in-plane distances spacing * sqrt(di^2 + dj^2).  Pairs are sampled
    without replacement up to ``pair_budget``.
    """
    if spec.plane_height >= params.mount_height_b:
        raise ValueError("grid plane must lie below the camera")
    x0, y0 = spec.origin
    jj, ii = np.meshgrid(np.arange(spec.cols), np.arange(spec.rows))
    ij = np.stack([ii.ravel(), jj.ravel()], axis=1)
    z = params.mount_height_b - spec.plane_height
    world = np.column_stack([
        x0 + ij[:, 1] * spec.spacing,
        y0 + ij[:, 0] * spec.spacing,
        np.full(len(ij), z),
    ])
    try:
        pixels = project_points(world, params)
    except DegenerateProjection as exc:
        raise GridOutsideFov(str(exc)) from exc
    if np.any(pixels < 0) or np.any(pixels >= image_side):
        raise GridOutsideFov("a grid corner projects outside the image")

    pairs = np.array(list(itertools.combinations(range(len(ij)), 2)))
    rng = np.random.default_rng(seed)
    if pair_budget < len(pairs):
        pairs = pairs[rng.choice(len(pairs), size=pair_budget, replace=False)]
    a, b = pairs[:, 0], pairs[:, 1]
    delta = ij[a] - ij[b]
    gt = spec.spacing * np.sqrt((delta.astype(float) ** 2).sum(axis=1))
    return pixels[a], pixels[b], gt


@dataclass(frozen=True)
class VirtualPerson:
    """A person to render: floor position, true height, lower-body occlusion."""

    x: float
    y: float
    height: float
    occlusion_fraction: float = 0.0
    person_id: str = ""

    def __post_init__(self):
        if self.height <= 0:
            raise ValueError("person height must be positive")
        if not (0 <= self.occlusion_fraction < 1):
            raise ValueError("occlusion fraction must be in [0, 1)")


@dataclass
class Scene:
    detections: DetectionsFile
    gt_matrix: np.ndarray  # (n, n) floor-plane distances, inches
    people: list[VirtualPerson] = field(default_factory=list)

    def ground_truth(self) -> GroundTruthFile:
        """All-pairs ground truth with categories from the occlusion flags."""
        boxes = self.detections.boxes
        pairs = []
        for i, j in itertools.combinations(range(len(boxes)), 2):
            pairs.append(GroundTruthPair(
                id_a=boxes[i].person_id,
                id_b=boxes[j].person_id,
                distance=float(self.gt_matrix[i, j]),
                category=Category.from_flags(boxes[i].occluded, boxes[j].occluded),
            ))
        return GroundTruthFile(pairs=pairs)


def synthesize_box(
    person: VirtualPerson,
    params: CameraParams,
    quantize: bool = False,
    image_side: int = DEFAULT_IMAGE_SIDE,
) -> BoundingBox:
    """Render one person to a bounding box through the forward model.

    The box's vertical extent spans the projections of the head and of the
    lowest visible body point; its center is the projection of the midpoint
    (in world height) of that visible span, which keeps unoccluded centers
    exactly at the person's half-height.  Width comes from a fixed 18-inch
    body width projected at the center height.
    """
    b = params.mount_height_b
    h, q = person.height, person.occlusion_fraction
    if h >= 2 * b:
        raise ValueError(f"person height {h} too large for mount height {b}")
    z_head = b - h
    z_low = b - h * q
    z_center = b - h * (1.0 + q) / 2.0
    if z_head <= 0:
        raise PersonOutsideFov(f"person {person.person_id!r} head is above the camera")

    # perpendicular (in the floor plane) to the radial direction, for width
    radial = np.hypot(person.x, person.y)
    if radial > 0:
        perp = np.array([-person.y, person.x]) / radial * (BODY_WIDTH_IN / 2)
    else:
        perp = np.array([BODY_WIDTH_IN / 2, 0.0])

    points = np.array([
        [person.x, person.y, z_head],
        [person.x, person.y, z_low],
        [person.x, person.y, z_center],
        [person.x + perp[0], person.y + perp[1], z_center],
        [person.x - perp[0], person.y - perp[1], z_center],
    ])
    try:
        px = project_points(points, params)
    except DegenerateProjection as exc:
        raise PersonOutsideFov(f"person {person.person_id!r}: {exc}") from exc
    if np.any(px < 0) or np.any(px >= image_side):
        raise PersonOutsideFov(f"person {person.person_id!r} projects outside the image")

    box_h = float(np.linalg.norm(px[0] - px[1]))
    box_w = float(np.linalg.norm(px[3] - px[4]))
    cu, cv = float(px[2, 0]), float(px[2, 1])
    if quantize:
        cu, cv = float(round(cu)), float(round(cv))
        box_w, box_h = max(1.0, round(box_w)), max(1.0, round(box_h))
    return BoundingBox(
        person_id=person.person_id,
        center=PixelPoint(cu, cv),
        width=box_w,
        height=box_h,
        occluded=q > 0,
    )


def generate_scene(
    people: list[VirtualPerson],
    params: CameraParams,
    quantize: bool = False,
    image_id: str = "synthetic",
    image_side: int = DEFAULT_IMAGE_SIDE,
) -> Scene:
    """Render people to detections plus an exact floor-plane distance matrix."""
    named = [
        p if p.person_id else VirtualPerson(
            p.x, p.y, p.height, p.occlusion_fraction, person_id=f"P{i:03d}"
        )
        for i, p in enumerate(people)
    ]
    boxes = [synthesize_box(p, params, quantize=quantize, image_side=image_side) for p in named]
    pos = np.array([[p.x, p.y] for p in named])
    diff = pos[:, None, :] - pos[None, :, :]
    gt = np.sqrt((diff**2).sum(axis=-1))
    det = DetectionsFile(image_id=image_id, image_side=image_side, boxes=boxes)
    return Scene(detections=det, gt_matrix=gt, people=named)


def generate_depof_layout(
    seed: int,
    params: CameraParams = DEFAULT_DEPOF_CAMERA,
    n_extra_people: int = 12,
    quantize: bool = False,
) -> Scene:
    """A DEPOF-style varying-height scene in a 72 x 28 ft room.

    Pairwise ground-truth distances span at least [11.63, 701.96] inches and
    populate all three distance buckets (0-6 ft, 6-12 ft, above 12 ft).
    Deterministic for a fixed seed.
    """
    rng = np.random.default_rng(seed)
    people = [
        # closest pair, just under the smallest DEPOF distance
        VirtualPerson(14.0, 40.0, 66.0, 0.0),
        VirtualPerson(25.5, 40.0, 68.5, 0.0),
        # farthest pair, just above the largest DEPOF distance
        VirtualPerson(-352.0, 30.0, 70.0, 0.0),
        VirtualPerson(351.0, 30.0, 64.0, 0.0),
    ]
    for _ in range(n_extra_people):
        people.append(VirtualPerson(
            x=float(rng.uniform(-420.0, 420.0)),
            y=float(rng.uniform(20.0, ROOM_HALF_Y - 10.0)),
            height=float(rng.uniform(62.0, 75.0)),
            occlusion_fraction=0.5 if rng.random() < 0.4 else 0.0,
        ))
    return generate_scene(people, params, quantize=quantize, image_id=f"depof-synth-{seed}")
