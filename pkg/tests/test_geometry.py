import math

import numpy as np
import pytest

from mixclust.errors import GeometryError, SamplingError
from mixclust.geometry import (AffinePatch, CircleArc, ClusterSpec, Point, Polyline, SceneSpec,
                               Segment, Sphere, distance_to_surface, gamma_volume, min_separation,
                               parallel_segments_scene, sample_scene, substream, surface_distance,
                               surface_from_dict, tube_ball_volume, verify_volume_condition)


def test_segment_distance():
    s = Segment([0, 0], [1, 0])
    assert distance_to_surface(s, [0.5, 0.3]) == pytest.approx(0.3)
    assert distance_to_surface(s, [1.3, 0.4]) == pytest.approx(0.5)


def test_sphere_distance_from_center():
    s = Sphere([0.5, 0.5], 0.25)
    assert distance_to_surface(s, [0.5, 0.5]) == pytest.approx(0.25)


def test_dimension_mismatch():
    with pytest.raises(GeometryError):
        Segment([0, 0], [1, 0]).distance(np.zeros((2, 3)))


@pytest.mark.parametrize("A,B,expected", [
    (Segment([0, 0], [1, 0]), Segment([0, 0.5], [1, 0.5]), 0.5),
    (Point([0, 0]), Point([0.3, 0.4]), 0.5),
    (Segment([0, 0], [1, 0]), Sphere([0.5, 0.6], 0.1), 0.5),
    (Segment([0, 0], [1, 0]), CircleArc([0.5, 0.6], 0.1), 0.5),
])
def test_surface_distance(A, B, expected):
    assert surface_distance(A, B) == pytest.approx(expected, abs=1e-6)


def test_min_separation_single_cluster_is_inf():
    scene = SceneSpec(2, [ClusterSpec(Point([0.5, 0.5]), 10)])
    assert min_separation(scene) == math.inf


@pytest.mark.parametrize("args,expected", [
    ((1, 2, 0.1, 0.05, 1.0), 2.5e-3),
    ((1, 2, 0.01, 0.05, 1.0), 5e-4),
    ((0, 3, 0.1, 0.05, 0.0), 1.25e-4),
])
def test_gamma_volume_examples(args, expected):
    assert gamma_volume(*args) == pytest.approx(expected, rel=1e-12)


def test_gamma_volume_infinite_eps():
    assert gamma_volume(1, 2, 0.01, math.inf, 1.0) == pytest.approx(0.01)


def test_gamma_volume_d_above_D():
    with pytest.raises(GeometryError):
        gamma_volume(3, 2, 0.1, 0.1, 1.0)


def test_volume_condition_segment():
    assert verify_volume_condition(Segment([0, 0.5], [1, 0.5]), 2.0).passed


def test_volume_condition_circle():
    rep = verify_volume_condition(Sphere([0.5, 0.5], 0.25), 4.0)
    assert rep.passed and rep.worst_ratio <= 4.0 + 1e-9


def test_volume_condition_point_vacuous():
    assert verify_volume_condition(Point([0.5, 0.5]), 1.0).passed


def test_cluster_points_inside_tube():
    scene = SceneSpec(2, [ClusterSpec(Segment([0.1, 0.2], [0.9, 0.7]), 500, 0.03),
                          ClusterSpec(Sphere([0.3, 0.75], 0.1), 500, 0.02)],
                      n_outliers=50, delta=0.1, seed=3)
    cloud = sample_scene(scene)
    for k, c in enumerate(scene.clusters, 1):
        d = c.surface.distance(cloud.points[cloud.labels == k])
        assert d.max() <= c.tau + 1e-12
    out = cloud.points[cloud.labels == 0]
    d = np.min([c.surface.distance(out) for c in scene.clusters], axis=0)
    assert d.min() > scene.delta
    assert np.all((cloud.points >= 0) & (cloud.points <= 1))


def test_sampling_deterministic():
    scene = parallel_segments_scene(0.1, (300, 300), n_outliers=20, seed=11)
    a, b = sample_scene(scene), sample_scene(scene)
    assert np.array_equal(a.points, b.points) and np.array_equal(a.labels, b.labels)


def test_adding_cluster_keeps_others():
    c1 = ClusterSpec(Segment([0, 0.2], [1, 0.2]), 100, 0.01)
    c2 = ClusterSpec(Segment([0, 0.8], [1, 0.8]), 100, 0.01)
    a = sample_scene(SceneSpec(2, [c1], seed=5))
    b = sample_scene(SceneSpec(2, [c1, c2], delta=0.6, seed=5))
    assert np.array_equal(a.points, b.points[:100])


def test_substreams_differ():
    assert substream(1, 1).random() != substream(1, 2).random()


def test_delta_must_exceed_two_tau():
    with pytest.raises(GeometryError):
        parallel_segments_scene(0.02, tau=0.01)


def test_validate_separation_refuses_overclaim():
    c1 = ClusterSpec(Segment([0, 0.4], [1, 0.4]), 10)
    c2 = ClusterSpec(Segment([0, 0.5], [1, 0.5]), 10)
    with pytest.raises(GeometryError, match="min_separation"):
        SceneSpec(2, [c1, c2], delta=0.3).validate_separation()


def test_degenerate_outlier_region():
    # the tube covers the whole square: no room for outliers
    scene = SceneSpec(1, [ClusterSpec(Point([0.5]), 10, 0.5)], n_outliers=5, delta=0.6)
    with pytest.raises(SamplingError):
        sample_scene(scene)


@pytest.mark.parametrize("surface", [
    Point([0.2, 0.3]),
    Segment([0.1, 0.1], [0.8, 0.4]),
    Polyline([[0.1, 0.1], [0.5, 0.5], [0.9, 0.1]]),
    CircleArc([0.5, 0.5], 0.2, 0.0, math.pi),
    AffinePatch([0.2, 0.2, 0.5], [[1, 0, 0], [0, 1, 0]], [0.5, 0.5]),
    Sphere([0.5, 0.5, 0.5], 0.25),
])
def test_roundtrip_and_samples_on_surface(surface, rng):
    again = surface_from_dict(surface.to_dict())
    X = surface.sample(200, rng)
    assert np.allclose(again.distance(X), 0, atol=1e-12)
    assert np.allclose(surface.distance(X), 0, atol=1e-12)


def test_tube_ball_volume_interior_segment(rng):
    v, se = tube_ball_volume(Segment([0, 0.5], [1, 0.5]), 0.02, [0.5, 0.5], 0.2, 100_000, rng)
    # ball much wider than the tube: area close to 2 tau * 2 eps
    assert abs(v - 0.016) < 4 * se + 1e-4
