#!/usr/bin/env python3
"""Generate the shipped DEPOF-style annotation fixtures.

Produces two datasets (fixed-height and varying-height) whose category
counts, distance buckets, and distance extremes match the published
statistics exactly:

  fixed:   73 pairs  (V-V 35, V-O 32, O-O 6), buckets 25/15/33
  varying: 256 pairs (V-V 100, V-O 126, O-O 30), buckets 45/73/138
  both:    min distance 11.63 in, max distance 701.96 in
"""

import itertools
import math
from pathlib import Path

import numpy as np

from fisheyedist.adjust import BoundingBox
from fisheyedist.camera import PixelPoint
from fisheyedist.dataio import (
    Category,
    DetectionsFile,
    GroundTruthFile,
    GroundTruthPair,
    save_detections,
    save_ground_truth,
)

OUT = Path(__file__).resolve().parents[1] / "src" / "fisheyedist" / "data"


def make_boxes(n_visible, n_occluded, rng):
    boxes = []
    n = n_visible + n_occluded
    for i in range(n):
        occluded = i >= n_visible
        pid = (chr(ord("A") + i) if i < n_visible else str(i - n_visible + 1))
        ang = 2 * math.pi * i / n + rng.uniform(-0.1, 0.1)
        radius = rng.uniform(280, 720)
        cu = 1024 + radius * math.cos(ang)
        cv = 1024 + radius * math.sin(ang)
        h = rng.uniform(70, 130) if occluded else rng.uniform(140, 250)
        w = rng.uniform(40, 85)
        boxes.append(BoundingBox(
            person_id=pid,
            center=PixelPoint(round(cu, 1), round(cv, 1)),
            width=round(w, 1),
            height=round(h, 1),
            occluded=occluded,
        ))
    return boxes


def distances_for_buckets(counts, rng):
    """Bucket-respecting distances including the exact 11.63 / 701.96 extremes."""
    low = [11.63] + sorted(rng.uniform(16.0, 70.5, counts[0] - 1).round(2).tolist())
    mid = sorted(rng.uniform(73.0, 142.5, counts[1]).round(2).tolist())
    high = sorted(rng.uniform(146.0, 690.0, counts[2] - 1).round(2).tolist()) + [701.96]
    return low + mid + high


def make_dataset(name, n_visible, n_occluded, cat_counts, bucket_counts, seed):
    rng = np.random.default_rng(seed)
    boxes = make_boxes(n_visible, n_occluded, rng)
    vis = [b.person_id for b in boxes if not b.occluded]
    occ = [b.person_id for b in boxes if b.occluded]

    vv = list(itertools.combinations(vis, 2))[: cat_counts[0]]
    vo = list(itertools.product(vis, occ))[: cat_counts[1]]
    oo = list(itertools.combinations(occ, 2))[: cat_counts[2]]
    pairs = (
        [(a, b, Category.VV) for a, b in vv]
        + [(a, b, Category.VO) for a, b in vo]
        + [(a, b, Category.OO) for a, b in oo]
    )
    order = rng.permutation(len(pairs))
    dists = distances_for_buckets(bucket_counts, rng)
    gt_pairs = [
        GroundTruthPair(id_a=pairs[j][0], id_b=pairs[j][1], distance=d, category=pairs[j][2])
        for j, d in zip(order, dists)
    ]
    gt_pairs.sort(key=lambda p: (p.id_a, p.id_b))

    det = DetectionsFile(image_id=f"depof-{name}", image_side=2048, boxes=boxes)
    save_detections(OUT / f"depof_{name}_detections.jsonl", det)
    save_ground_truth(OUT / f"depof_{name}_gt.csv", GroundTruthFile(pairs=gt_pairs))
    print(f"{name}: {len(boxes)} boxes, {len(gt_pairs)} pairs")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    make_dataset("fixed", 12, 6, (35, 32, 6), (25, 15, 33), seed=20230501)
    make_dataset("varying", 15, 9, (100, 126, 30), (45, 73, 138), seed=20230502)


if __name__ == "__main__":
    main()
