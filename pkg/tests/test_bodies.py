import math

import numpy as np
import pytest

from emptysimplex.bodies import (
    Ball,
    Box,
    Ellipsoid,
    HPolytope,
    SamplingError,
    Seed,
    body_volume,
    grid_cell_counts,
    membership,
    parse_body,
    sample_uniform,
    shadow_area,
    volume,
)
from emptysimplex.geometry import PointSet

TRIANGLE = HPolytope([[-1, 0], [0, -1], [1, 1]], [0, 0, 1])


def test_membership_examples():
    disc = Ball(1.0)
    assert membership(disc, (0, 0))
    assert not membership(disc, (2, 0))
    assert membership(Box.unit(3), (1, 1, 1))
    with pytest.raises(ValueError):
        membership(disc, (0, 0, 0))


def test_volume_examples():
    assert volume(Box([0, 0, 0], [2, 2, 2])) == (8.0, 0.0)
    assert body_volume(Ball(1.0)) == pytest.approx(math.pi)
    assert body_volume(Ellipsoid([1, 2, 3])) == pytest.approx(4 / 3 * math.pi * 6)
    v, se = volume(TRIANGLE)
    assert se > 0
    assert abs(v - 0.5) <= 3 * se


def test_shadow_examples():
    sq = Box.unit(2)
    assert shadow_area(sq, (1, 0)) == pytest.approx(1.0)
    assert shadow_area(sq, np.array([1, 1]) / math.sqrt(2)) == pytest.approx(math.sqrt(2))
    assert shadow_area(Ball(1.0), (0.6, 0.8)) == pytest.approx(2.0)
    assert shadow_area(Ball(1.0, dim=3), (0, 0, 1)) == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        shadow_area(sq, (1, 1))


def test_box_shadow_is_product_of_other_extents():
    b = Box([0, 0, 0], [2, 3, 5])
    for i, expect in enumerate([15, 10, 6]):
        assert shadow_area(b, np.eye(3)[i]) == expect


def test_polytope_shadow_matches_box():
    unit = HPolytope(np.vstack([np.eye(3), -np.eye(3)]), [1, 1, 1, 0, 0, 0])
    u = np.array([1.0, 2.0, 2.0]) / 3.0
    assert shadow_area(unit, u) == pytest.approx(shadow_area(Box.unit(3), u), rel=1e-9)
    assert shadow_area(TRIANGLE, (1, 0)) == pytest.approx(1.0)
    assert shadow_area(TRIANGLE, np.array([1, 1]) / math.sqrt(2)) == pytest.approx(math.sqrt(2))


def test_ellipsoid_shadow():
    e = Ellipsoid([2.0, 1.0])
    assert shadow_area(e, (1, 0)) == pytest.approx(2.0)
    assert shadow_area(e, (0, 1)) == pytest.approx(4.0)


@pytest.mark.parametrize(
    "body",
    [Box.unit(2), Ball(1.0), Ball(2.0, center=[1, 1, 1]), Ellipsoid([1, 0.2, 3]), TRIANGLE],
    ids=["square", "disc", "ball3", "ellipsoid", "triangle"],
)
def test_samples_inside_and_deterministic(body):
    a = sample_uniform(body, 2000, Seed(5))
    b = sample_uniform(body, 2000, Seed(5))
    assert np.array_equal(a.points, b.points)
    assert body.contains(a.points).all()
    lo, hi = body.bbox
    assert np.all(a.points >= lo) and np.all(a.points <= hi)


def test_sample_edge_cases():
    X = sample_uniform(Box.unit(2), 0, 1)
    assert len(X) == 0
    assert sample_uniform(Box.unit(2), 5, 3) == sample_uniform(Box.unit(2), 5, 3)
    with pytest.raises(ValueError):
        sample_uniform(Box.unit(2), -1, 0)


def test_sample_mean_clt():
    n = 10_000
    X = sample_uniform(Box.unit(2), n, 11)
    assert np.all(np.abs(X.points.mean(axis=0) - 0.5) <= 3 / math.sqrt(12 * n))


def test_ball_radial_law():
    # P(|x| <= r) = r^M for the unit ball
    X = sample_uniform(Ball(1.0, dim=3), 20_000, 4).points
    frac = np.mean(np.linalg.norm(X, axis=1) <= 0.5)
    assert abs(frac - 0.125) <= 3 * math.sqrt(0.125 * 0.875 / 20_000)


def test_rejection_acceptance_estimates_volume_ratio():
    rng = np.random.default_rng(0)
    lo, hi = TRIANGLE.bbox
    x = rng.uniform(lo, hi, size=(50_000, 2))
    p = TRIANGLE.contains(x).mean()
    assert abs(p - 0.5) <= 3 * math.sqrt(0.25 / 50_000)


def test_thin_polytope_aborts():
    eps = 1e-9
    thin = HPolytope([[-1, 0], [1, 0], [-1, 1], [1, -1]], [0, 1, eps, eps])
    with pytest.raises(SamplingError):
        thin.sample_array(10, np.random.default_rng(0))


def test_seed_streams_differ():
    assert not np.array_equal(Seed(1, 0).rng().random(4), Seed(1, 1).rng().random(4))
    c = Seed(1).child(3)
    assert np.array_equal(c.rng().random(4), Seed(1).child(3).rng().random(4))
    assert not np.array_equal(c.rng().random(4), Seed(1).rng().random(4))


class TestParse:
    def test_shorthands(self):
        assert isinstance(parse_body("unit-square"), Box)
        assert parse_body("unit-cube").dim == 3
        assert parse_body("unit-ball", 4).dim == 4
        assert isinstance(parse_body("unit-disc"), Ball)

    def test_dicts(self):
        b = parse_body({"kind": "box", "lo": [0, 0], "hi": [2, 1]})
        assert body_volume(b) == 2.0
        e = parse_body({"kind": "ellipsoid", "semi_axes": [1, 2]})
        assert body_volume(e) == pytest.approx(2 * math.pi)
        p = parse_body(TRIANGLE.to_spec())
        assert p.dim == 2

    def test_errors(self):
        with pytest.raises(ValueError):
            parse_body("unit-donut")
        with pytest.raises(ValueError):
            parse_body({"kind": "ball", "radius": 1, "colour": "red"})
        with pytest.raises(ValueError):
            parse_body({"kind": "box", "lo": [0, 0]})
        with pytest.raises(ValueError):
            parse_body("unit-square", 3)


class TestGridCells:
    def test_single_point_single_cell(self):
        counts = grid_cell_counts(PointSet([(0.5, 0.5)]), Box.unit(2), 1.0)
        assert counts.tolist() == [1]

    def test_empty_set(self):
        counts = grid_cell_counts(np.zeros((0, 2)), Box.unit(2), 0.1)
        assert len(counts) == 100 and counts.sum() == 0

    def test_boundary_cells_excluded_for_disc(self):
        disc = Ball(1.0)
        X = sample_uniform(disc, 5000, 2)
        mesh = 0.1
        counts = grid_cell_counts(X, disc, mesh)
        assert counts.sum() <= len(X)
        # no contained cube can exceed the disc area
        assert len(counts) * mesh ** 2 <= math.pi
        assert len(counts) > 0.8 * math.pi / mesh ** 2 - 4 * 2 * math.pi / mesh

    def test_counts_sum_on_box(self):
        X = sample_uniform(Box.unit(2), 1000, 9)
        counts = grid_cell_counts(X, Box.unit(2), 0.1)
        assert counts.sum() == 1000
