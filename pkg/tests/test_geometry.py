"""Geometry estimator: localization and pairwise distance matrices."""

import numpy as np
import pytest

from fisheyedist.camera import PixelPoint, WorldPoint, project_points
from fisheyedist.geometry import LocalizedPerson, batch_distances, estimate_distance


def people_on_floor(camera, xy, height=65.0):
    z = camera.mount_height_b - height / 2.0
    world = np.column_stack([xy, np.full(len(xy), z)])
    px = project_points(world, camera)
    return [LocalizedPerson(PixelPoint(float(u), float(v)), height) for u, v in px]


def test_locate_recovers_floor_position(camera):
    people = people_on_floor(camera, np.array([[120.0, -45.0]]))
    w = people[0].locate(camera)
    assert w.x == pytest.approx(120.0, abs=1e-9)
    assert w.y == pytest.approx(-45.0, abs=1e-9)
    assert w.z == pytest.approx(camera.mount_height_b - 32.5)


def test_cached_world_point_wins(camera):
    person = LocalizedPerson(PixelPoint(1024.0, 1024.0), 65.0,
                             world=WorldPoint(1.0, 2.0, 3.0))
    assert person.locate(camera) == WorldPoint(1.0, 2.0, 3.0)


def test_estimate_distance_matches_truth(camera):
    xy = np.array([[0.0, 50.0], [90.0, 170.0]])
    a, b = people_on_floor(camera, xy)
    d = estimate_distance(a, b, camera)
    assert d == pytest.approx(np.linalg.norm(xy[0] - xy[1]), abs=1e-9)
    assert estimate_distance(b, a, camera) == pytest.approx(d, abs=1e-12)


def test_batch_matches_scalar_path(camera):
    rng = np.random.default_rng(12)
    xy = rng.uniform(-250.0, 250.0, size=(12, 2))
    people = people_on_floor(camera, xy)
    dist = batch_distances(people, camera)
    for i in range(12):
        for j in range(12):
            if i != j:
                assert dist[i, j] == pytest.approx(
                    estimate_distance(people[i], people[j], camera), abs=1e-9)
    assert np.allclose(dist, dist.T)
    assert np.all(np.diag(dist) == 0.0)


def test_batch_mixed_heights(camera):
    rng = np.random.default_rng(13)
    xy = rng.uniform(-200.0, 200.0, size=(6, 2))
    people = []
    for (x, y), h in zip(xy, [60.0, 62.0, 66.0, 70.0, 74.0, 78.0]):
        z = camera.mount_height_b - h / 2.0
        u, v = project_points(np.array([x, y, z]), camera)
        people.append(LocalizedPerson(PixelPoint(float(u), float(v)), h))
    dist = batch_distances(people, camera)
    ref = estimate_distance(people[0], people[5], camera)
    assert dist[0, 5] == pytest.approx(ref, abs=1e-9)


def test_batch_flags_invalid_people_with_nan(camera):
    xy = np.array([[10.0, 20.0], [30.0, -40.0], [50.0, 60.0]])
    people = people_on_floor(camera, xy)
    people.append(LocalizedPerson(PixelPoint(10.0, 10.0), 65.0))  # outside the FOV
    dist = batch_distances(people, camera)
    assert np.isnan(dist[3]).all()
    assert np.isnan(dist[:, 3]).all()
    assert np.isfinite(dist[:3, :3]).all()


def test_batch_triangle_inequality(camera):
    rng = np.random.default_rng(14)
    people = people_on_floor(camera, rng.uniform(-300.0, 300.0, size=(10, 2)))
    dist = batch_distances(people, camera)
    for i in range(10):
        for j in range(10):
            for k in range(10):
                assert dist[i, k] <= dist[i, j] + dist[j, k] + 1e-9


def test_batch_requires_two_people(camera):
    people = people_on_floor(camera, np.array([[0.0, 50.0]]))
    with pytest.raises(ValueError):
        batch_distances(people, camera)
