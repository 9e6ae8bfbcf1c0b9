import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

import mmwhcn
from mmwhcn import geometry
from mmwhcn.geometry import PointPattern, SectorHole


def test_sample_ppp_count_statistics():
    # density 10 per km^2 on a 10 km disk: mean count 3141.6
    rng = np.random.default_rng(101)
    density, radius = 10e-6, 10e3
    mean = density * math.pi * radius**2
    counts = np.array([len(geometry.sample_ppp(density, radius, rng)) for _ in range(10_000)])
    stderr = math.sqrt(mean / 10_000)
    assert abs(counts.mean() - mean) < 3 * stderr
    assert counts.var() == pytest.approx(mean, rel=0.05)


def test_sample_ppp_degenerate_and_errors():
    rng = np.random.default_rng(0)
    assert len(geometry.sample_ppp(0.0, 1000.0, rng)) == 0
    with pytest.raises(ValueError):
        geometry.sample_ppp(-1.0, 1000.0, rng)
    with pytest.raises(ValueError):
        geometry.sample_ppp(1.0, 0.0, rng)


def test_points_stay_inside_window():
    rng = np.random.default_rng(1)
    pts = geometry.sample_ppp(100e-6, 2000.0, rng)
    assert np.all(np.hypot(pts[:, 0], pts[:, 1]) <= 2000.0)


def test_point_in_sector_circular_case():
    hole = SectorHole((0.0, 0.0), 100.0, 2 * math.pi, 1.234)
    assert geometry.point_in_sector((50.0, 0.0), hole)
    assert geometry.point_in_sector((0.0, -50.0), hole)
    assert not geometry.point_in_sector((101.0, 0.0), hole)


def test_point_in_sector_angular_boundary():
    # quarter sector opening from angle 0; points just below/above the x-axis
    hole = SectorHole((0.0, 0.0), 100.0, math.pi / 2, 0.0)
    assert geometry.point_in_sector((50.0, +0.05), hole)
    assert not geometry.point_in_sector((50.0, -0.05), hole)
    assert geometry.point_in_sector((50.0, 0.0), hole)  # half-open: start ray included


@settings(max_examples=80, deadline=None)
@given(
    px=st.floats(-100, 100),
    py=st.floats(-100, 100),
    cx=st.floats(-50, 50),
    cy=st.floats(-50, 50),
    radius=st.floats(1.0, 120.0),
    angle=st.floats(0.0, 2 * math.pi),
    orient=st.floats(0.0, 2 * math.pi),
    rot=st.floats(0.0, 2 * math.pi),
)
def test_point_in_sector_rotation_covariance(px, py, cx, cy, radius, angle, orient, rot):
    hole = SectorHole((cx, cy), radius, angle, orient)
    c, s = math.cos(rot), math.sin(rot)

    def rotate(x, y):
        return (c * x - s * y, s * x + c * y)

    rotated_hole = SectorHole(rotate(cx, cy), radius, angle, (orient + rot) % (2 * math.pi))
    assert geometry.point_in_sector((px, py), hole) == geometry.point_in_sector(
        rotate(px, py), rotated_hole
    )


def test_carve_degenerate_cases():
    rng = np.random.default_rng(3)
    base = geometry.sample_ppp(50e-6, 2000.0, rng)
    centers = geometry.sample_ppp(10e-6, 2000.0, rng)
    kept, holes = geometry.carve_php(base, centers, 0.0, math.pi, rng)
    assert len(kept) == len(base)
    kept, holes = geometry.carve_php(base, centers, 200.0, 0.0, rng)
    assert len(kept) == len(base)


def test_carve_full_angle_is_distance_test():
    rng = np.random.default_rng(4)
    base = geometry.sample_ppp(200e-6, 1500.0, rng)
    kept, holes = geometry.carve_php(base, np.array([[0.0, 0.0]]), 300.0, 2 * math.pi, rng)
    assert np.all(np.hypot(kept[:, 0], kept[:, 1]) > 300.0)
    removed = len(base) - len(kept)
    assert removed == int(np.sum(np.hypot(base[:, 0], base[:, 1]) <= 300.0))


def test_carve_is_subset_and_idempotent():
    rng = np.random.default_rng(5)
    base = geometry.sample_ppp(100e-6, 1500.0, rng)
    centers = geometry.sample_ppp(10e-6, 1700.0, rng)
    kept, holes = geometry.carve_php(base, centers, 200.0, 2 * math.pi / 3, rng)
    base_set = {tuple(p) for p in base}
    assert all(tuple(p) in base_set for p in kept)
    # re-carving the retained points with the same oriented holes removes nothing
    mask = geometry._in_any_hole(
        kept,
        np.asarray([h.center for h in holes]),
        200.0,
        2 * math.pi / 3,
        np.asarray([h.orientation for h in holes]),
    )
    assert not mask.any()


def test_carving_matches_equivalent_density(cfg_setup2):
    # retention over many realizations approaches exp(-lambda1 theta_c D^2 / 2)
    rng = np.random.default_rng(6)
    cfg = cfg_setup2
    window = 1500.0
    total = kept_n = 0
    for _ in range(1000):
        base = geometry.sample_ppp(cfg.lambda_small, window, rng)
        centers = geometry.sample_ppp(cfg.lambda_macro, window + cfg.hole_radius, rng)
        kept, _ = geometry.carve_php(base, centers, cfg.hole_radius, cfg.hole_angle, rng)
        total += len(base)
        kept_n += len(kept)
    assert kept_n / total == pytest.approx(0.6577837688198456, abs=0.01)


def test_sample_network_labels_follow_blockage(cfg_setup2):
    cfg_all_nlos = cfg_setup2.replace(los=mmwhcn.ExponentialLos(1e3))
    cfg_all_los = cfg_setup2.replace(los=mmwhcn.ExponentialLos(0.0))
    rng = np.random.default_rng(7)
    pat = geometry.sample_network(cfg_all_nlos, 1000.0, rng)
    assert not pat.is_los.any()
    pat = geometry.sample_network(cfg_all_los, 1000.0, rng)
    assert pat.is_los.all()


def test_sample_network_los_fraction(cfg_setup2):
    # fraction of LOS labels among small cells matches the blockage integral
    rng = np.random.default_rng(8)
    window = 1500.0
    beta = cfg_setup2.los.rate
    expected = 2 * (1 - math.exp(-beta * window) * (1 + beta * window)) / (beta * window) ** 2
    los = total = 0
    for _ in range(200):
        pat = geometry.sample_network(cfg_setup2, window, rng)
        small = pat.tier == 2
        los += int(np.sum(pat.is_los[small]))
        total += int(np.sum(small))
    stderr = math.sqrt(expected * (1 - expected) / total)
    assert abs(los / total - expected) < 3 * stderr


def test_sample_network_without_macros_is_homogeneous(cfg_setup2):
    # no macro layer: the small-cell layer stays a plain Poisson process
    cfg = cfg_setup2.replace(lambda_macro=0.0)
    rng = np.random.default_rng(9)
    pat = geometry.sample_network(cfg, 3000.0, rng)
    assert np.all(pat.tier == 2)
    quadrant = (pat.xy[:, 0] > 0).astype(int) * 2 + (pat.xy[:, 1] > 0).astype(int)
    counts = np.bincount(quadrant, minlength=4)
    assert stats.chisquare(counts).pvalue > 0.01


def test_sample_network_returns_only_in_window(cfg_setup2):
    rng = np.random.default_rng(10)
    pat = geometry.sample_network(cfg_setup2, 1200.0, rng)
    assert np.all(pat.distances() <= 1200.0)
    assert set(np.unique(pat.tier)) <= {1, 2}


def test_default_window_radius(cfg_setup1, cfg_setup2):
    # blockage support dominates for these setups: 20 / beta
    assert geometry.default_window_radius(cfg_setup2) == pytest.approx(
        20.0 / cfg_setup2.los.rate, rel=1e-9
    )
    assert geometry.default_window_radius(cfg_setup1) == pytest.approx(
        10.0 * math.sqrt(1.0 / (math.pi * cfg_setup1.lambda_macro)), rel=1e-9
    )
    assert geometry.default_window_radius(cfg_setup2, cap=1500.0) == 1500.0


def test_pattern_validation():
    with pytest.raises(ValueError):
        PointPattern(np.zeros((2, 2)), np.array([1]), np.array([True, False]))
    with pytest.raises(ValueError):
        PointPattern(np.zeros((1, 2)), np.array([3]), np.array([True]))


def test_dump_realization(tmp_path, cfg_setup2):
    path = tmp_path / "realization.csv"
    n = geometry.dump_realization(cfg_setup2, 800.0, 42, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x_m,y_m,tier,state,in_hole"
    assert len(lines) == n + 1
    in_hole = [ln for ln in lines[1:] if ln.endswith(",1")]
    assert len(in_hole) > 0  # carved small cells are reported
    assert all(ln.split(",")[2] == "2" for ln in in_hole)
