"""Synthetic grid and scene generators."""

import math

import numpy as np
import pytest

from fisheyedist.camera import CameraParams, project_points
from fisheyedist.errors import GridOutsideFov, PersonOutsideFov
from fisheyedist.synth import (
    GridSpec,
    VirtualPerson,
    generate_depof_layout,
    generate_grid,
    generate_scene,
    synthesize_box,
)
from fisheyedist.dataio import bucket_of

SMALL_GRID = GridSpec(rows=5, cols=7, spacing=12.5, plane_height=32.5,
                      origin=(-40.0, 20.0))


class TestGrid:
    def test_ground_truth_distances_are_exact(self, camera):
        pa, pb, gt = generate_grid(SMALL_GRID, camera, pair_budget=10**6, seed=0)
        assert len(gt) == (5 * 7) * (5 * 7 - 1) // 2
        # every distance is spacing * sqrt(di^2 + dj^2) for integers di, dj
        scaled = (gt / SMALL_GRID.spacing) ** 2
        assert np.allclose(scaled, np.round(scaled), atol=1e-9)
        assert gt.min() == pytest.approx(12.5)

    def test_pixels_match_forward_projection(self, camera):
        pa, pb, gt = generate_grid(SMALL_GRID, camera, pair_budget=10, seed=1)
        z = camera.mount_height_b - SMALL_GRID.plane_height
        # first sampled pair's ground truth is consistent with its pixels
        from fisheyedist.camera import backproject_points

        wa = backproject_points(pa[0], z, camera)
        wb = backproject_points(pb[0], z, camera)
        assert np.linalg.norm(wa - wb) == pytest.approx(gt[0], abs=1e-9)

    def test_budget_sampling_is_deterministic(self, camera):
        out1 = generate_grid(SMALL_GRID, camera, pair_budget=100, seed=9)
        out2 = generate_grid(SMALL_GRID, camera, pair_budget=100, seed=9)
        out3 = generate_grid(SMALL_GRID, camera, pair_budget=100, seed=10)
        assert all((a == b).all() for a, b in zip(out1, out2))
        assert not (out1[2] == out3[2]).all()
        assert len(out1[2]) == 100

    def test_grid_outside_fov(self):
        # a long lens pushes radial corners off the sensor
        narrow = CameraParams(xi=1.0, fx=2500.0, fy=2500.0, cx=1024.0, cy=1024.0,
                              mount_height_b=114.0)
        wide = GridSpec(rows=2, cols=2, spacing=50000.0, plane_height=32.5)
        with pytest.raises(GridOutsideFov):
            generate_grid(wide, narrow, pair_budget=10)

    def test_plane_above_camera_rejected(self, camera):
        spec = GridSpec(rows=2, cols=2, spacing=10.0, plane_height=200.0)
        with pytest.raises(ValueError):
            generate_grid(spec, camera, pair_budget=10)

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            GridSpec(rows=1, cols=5)
        with pytest.raises(ValueError):
            GridSpec(rows=3, cols=3, spacing=0.0)


class TestBoxes:
    def test_unoccluded_center_is_half_height_projection(self, camera):
        person = VirtualPerson(90.0, 120.0, 70.0)
        b = camera.mount_height_b
        expected = project_points(np.array([90.0, 120.0, b - 35.0]), camera)
        bx = synthesize_box(person, camera)
        assert bx.center.u == pytest.approx(float(expected[0]), abs=1e-9)
        assert bx.center.v == pytest.approx(float(expected[1]), abs=1e-9)
        assert not bx.occluded

    def test_occlusion_moves_center_outward(self, camera):
        vis = synthesize_box(VirtualPerson(150.0, 80.0, 70.0, 0.0), camera)
        occ = synthesize_box(VirtualPerson(150.0, 80.0, 70.0, 0.5), camera)
        r_vis = math.hypot(vis.center.u - 1024.0, vis.center.v - 1024.0)
        r_occ = math.hypot(occ.center.u - 1024.0, occ.center.v - 1024.0)
        assert occ.occluded
        assert r_occ > r_vis
        assert occ.height < vis.height  # occlusion shortens the box

    def test_quantized_boxes_have_integer_pixels(self, camera):
        bx = synthesize_box(VirtualPerson(33.3, 77.7, 68.2, 0.25), camera, quantize=True)
        for value in (bx.center.u, bx.center.v, bx.width, bx.height):
            assert value == round(value)

    def test_person_outside_fov(self):
        narrow = CameraParams(xi=1.0, fx=2500.0, fy=2500.0, cx=1024.0, cy=1024.0,
                              mount_height_b=114.0)
        with pytest.raises(PersonOutsideFov):
            synthesize_box(VirtualPerson(50000.0, 0.0, 70.0), narrow)

    def test_person_validation(self):
        with pytest.raises(ValueError):
            VirtualPerson(0.0, 0.0, -5.0)
        with pytest.raises(ValueError):
            VirtualPerson(0.0, 0.0, 70.0, occlusion_fraction=1.0)


class TestScenes:
    def test_scene_ground_truth_matrix(self, camera):
        people = [VirtualPerson(0.0, 60.0, 66.0), VirtualPerson(80.0, 60.0, 70.0),
                  VirtualPerson(0.0, 140.0, 64.0, 0.5)]
        scene = generate_scene(people, camera)
        assert scene.gt_matrix[0, 1] == pytest.approx(80.0)
        assert scene.gt_matrix[0, 2] == pytest.approx(80.0)
        assert np.allclose(scene.gt_matrix, scene.gt_matrix.T)
        assert np.all(np.diag(scene.gt_matrix) == 0.0)

    def test_scene_categories_follow_occlusion_flags(self, camera):
        people = [VirtualPerson(0.0, 60.0, 66.0), VirtualPerson(80.0, 60.0, 70.0),
                  VirtualPerson(0.0, 140.0, 64.0, 0.5)]
        gt = generate_scene(people, camera).ground_truth()
        cats = {(p.id_a, p.id_b): p.category.value for p in gt.pairs}
        assert cats[("P000", "P001")] == "V-V"
        assert cats[("P000", "P002")] == "V-O"
        assert len(gt.pairs) == 3

    def test_auto_ids_are_unique(self, camera):
        people = [VirtualPerson(20.0 * i, 80.0, 66.0) for i in range(1, 6)]
        scene = generate_scene(people, camera)
        ids = [b.person_id for b in scene.detections.boxes]
        assert len(set(ids)) == len(ids)


class TestDepofLayout:
    def test_spans_published_distance_range(self):
        scene = generate_depof_layout(seed=0)
        gt = scene.ground_truth()
        dists = [p.distance for p in gt.pairs]
        assert min(dists) <= 11.63
        assert max(dists) >= 701.96
        buckets = [sum(bucket_of(d) == k for d in dists) for k in range(3)]
        assert all(b > 0 for b in buckets)

    def test_deterministic_per_seed(self):
        s1 = generate_depof_layout(seed=4)
        s2 = generate_depof_layout(seed=4)
        assert (s1.gt_matrix == s2.gt_matrix).all()
        assert s1.detections.boxes == s2.detections.boxes

    def test_respects_custom_camera(self):
        cam = CameraParams(xi=1.0, fx=850.0, fy=850.0, cx=1024.0, cy=1024.0,
                           mount_height_b=120.0)
        scene = generate_depof_layout(seed=2, params=cam)
        assert scene.detections.image_side == 2048
        assert len(scene.detections.boxes) == 16
