"""Ingestion and persistence of detections, ground-truth distances, and stats.

Formats:
  detections  - JSON Lines, one box per line with keys
                image_id, person_id, cx, cy, w, h, occluded
  ground truth - CSV with header id_a,id_b,distance_in,category

All distances are in inches.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .adjust import BoundingBox
from .camera import PixelPoint
from .errors import ParseError, ValidationError

DEFAULT_IMAGE_SIDE = 2048

# pair-distance buckets in inches: 0-6 ft, 6-12 ft, above 12 ft
BUCKET_EDGES = (72.0, 144.0)


class Category(str, Enum):
    """Occlusion category of a pair."""

    VV = "V-V"
    VO = "V-O"
    OO = "O-O"

    @classmethod
    def from_flags(cls, occluded_a: bool, occluded_b: bool) -> "Category":
        n = int(occluded_a) + int(occluded_b)
        return (cls.VV, cls.VO, cls.OO)[n]


@dataclass(frozen=True)
class DetectionsFile:
    image_id: str
    image_side: int
    boxes: list[BoundingBox]

    def by_id(self) -> dict[str, BoundingBox]:
        return {b.person_id: b for b in self.boxes}


@dataclass(frozen=True)
class GroundTruthPair:
    id_a: str
    id_b: str
    distance: float
    category: Category


@dataclass(frozen=True)
class GroundTruthFile:
    pairs: list[GroundTruthPair]


def load_detections(path: str | Path, image_side: int = DEFAULT_IMAGE_SIDE) -> DetectionsFile:
    """Load and validate a JSON Lines detections file."""
    boxes: list[BoundingBox] = []
    image_id = None
    seen: set[str] = set()
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                pid = str(rec["person_id"])
                box = BoundingBox(
                    person_id=pid,
                    center=PixelPoint(float(rec["cx"]), float(rec["cy"])),
                    width=float(rec["w"]),
                    height=float(rec["h"]),
                    occluded=bool(rec["occluded"]),
                )
            except KeyError as exc:
                raise ParseError(f"{path}:{lineno}: missing field {exc}") from exc
            except (TypeError, ValueError) as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc
            if image_id is None:
                image_id = str(rec["image_id"])
            elif str(rec["image_id"]) != image_id:
                raise ValidationError(
                    f"{path}:{lineno}: image_id {rec['image_id']!r} differs from {image_id!r}"
                )
            if pid in seen:
                raise ValidationError(f"{path}:{lineno}: duplicate person_id {pid!r}")
            seen.add(pid)
            if not (0 <= box.center.u < image_side and 0 <= box.center.v < image_side):
                raise ValidationError(
                    f"{path}:{lineno}: box {pid!r} center ({box.center.u}, {box.center.v}) "
                    f"outside {image_side}x{image_side} image"
                )
            boxes.append(box)
    if image_id is None:
        raise ValidationError(f"{path}: no detections found")
    return DetectionsFile(image_id=image_id, image_side=image_side, boxes=boxes)


def save_detections(path: str | Path, det: DetectionsFile) -> None:
    with open(path, "w") as fh:
        for box in det.boxes:
            fh.write(json.dumps({
                "image_id": det.image_id,
                "person_id": box.person_id,
                "cx": box.center.u,
                "cy": box.center.v,
                "w": box.width,
                "h": box.height,
                "occluded": box.occluded,
            }) + "\n")


GT_HEADER = ["id_a", "id_b", "distance_in", "category"]


def load_ground_truth(path: str | Path, detections: DetectionsFile | None = None) -> GroundTruthFile:
    """Load a ground-truth CSV; cross-validates against detections if given."""
    by_id = detections.by_id() if detections is not None else None
    pairs: list[GroundTruthPair] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != GT_HEADER:
            raise ParseError(f"{path}: expected header {','.join(GT_HEADER)}, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 4:
                raise ParseError(f"{path}:{lineno}: expected 4 fields, got {len(row)}")
            id_a, id_b, dist_s, cat_s = row
            try:
                dist = float(dist_s)
                cat = Category(cat_s)
            except ValueError as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from exc
            if dist <= 0:
                raise ValidationError(f"{path}:{lineno}: non-positive distance {dist}")
            if by_id is not None:
                if id_a not in by_id or id_b not in by_id:
                    raise ValidationError(
                        f"{path}:{lineno}: pair ({id_a}, {id_b}) has no matching detections"
                    )
                derived = Category.from_flags(by_id[id_a].occluded, by_id[id_b].occluded)
                if derived != cat:
                    raise ValidationError(
                        f"{path}:{lineno}: stored category {cat.value} does not match "
                        f"occlusion flags ({derived.value})"
                    )
            pairs.append(GroundTruthPair(id_a=id_a, id_b=id_b, distance=dist, category=cat))
    return GroundTruthFile(pairs=pairs)


def save_ground_truth(path: str | Path, gt: GroundTruthFile) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(GT_HEADER)
        for p in gt.pairs:
            writer.writerow([p.id_a, p.id_b, repr(float(p.distance)), p.category.value])


# --- statistics ------------------------------------------------------------

@dataclass(frozen=True)
class DatasetStats:
    n_pairs: int
    category_counts: dict[str, int]
    bucket_counts: tuple[int, int, int]
    min_distance: float | None
    max_distance: float | None


def bucket_of(distance: float) -> int:
    """0 for [0, 6 ft), 1 for [6 ft, 12 ft), 2 for >= 12 ft."""
    if distance < BUCKET_EDGES[0]:
        return 0
    if distance < BUCKET_EDGES[1]:
        return 1
    return 2


def dataset_stats(detections: DetectionsFile, gt: GroundTruthFile) -> DatasetStats:
    """Category counts, distance buckets, and min/max distance of a dataset."""
    by_id = detections.by_id()
    for p in gt.pairs:
        if p.id_a not in by_id or p.id_b not in by_id:
            raise ValidationError(f"pair ({p.id_a}, {p.id_b}) has no matching detections")
    cats = {c.value: 0 for c in Category}
    buckets = [0, 0, 0]
    for p in gt.pairs:
        cats[p.category.value] += 1
        buckets[bucket_of(p.distance)] += 1
    dists = [p.distance for p in gt.pairs]
    return DatasetStats(
        n_pairs=len(gt.pairs),
        category_counts=cats,
        bucket_counts=tuple(buckets),
        min_distance=min(dists) if dists else None,
        max_distance=max(dists) if dists else None,
    )


def depof_fixture_path(name: str) -> Path:
    """Path to a shipped DEPOF-style annotation fixture.

    Names: depof_fixed_detections.jsonl, depof_fixed_gt.csv,
    depof_varying_detections.jsonl, depof_varying_gt.csv.
    """
    path = Path(__file__).parent / "data" / name
    if not path.exists():
        raise FileNotFoundError(f"no shipped fixture named {name!r}")
    return path
