import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import oracle_frame
from terravolt.geometry import Pose2D, TrajectoryArc
from terravolt.swath import (
    CELL, EmptyColumnError, SafetyThresholds, TerrainPatch, UntraversableError, preprocess,
    rasterize, safety_check, swath_extract, trim_and_normalize,
)
from terravolt.terrain import PointCloud, TerrainGenConfig, make_rough, make_ramp, sample_point_cloud

ORIGIN = Pose2D(0.0, 0.0, 0.0)


def plane_cloud(fn, n=4000, seed=0, box=(-0.5, 2.5, -1.0, 1.0)):
    rng = np.random.default_rng(seed)
    x = rng.uniform(box[0], box[1], n)
    y = rng.uniform(box[2], box[3], n)
    return PointCloud(np.column_stack([x, y, fn(x, y)]))


# --- swath_extract --------------------------------------------------------------------


def test_centreline_point_included_and_edge_point_excluded():
    pts = np.array([[1.0, 0.0, 0.0], [1.0, 0.5 + 1e-6, 0.0], [1.0, -0.5 + 1e-9, 0.0]])
    out = swath_extract(PointCloud(pts), TrajectoryArc(ORIGIN, 0.0, 1.375), 1.0)
    np.testing.assert_array_equal(out.points, pts[[0, 2]])


def test_straight_extract_matches_rectangle_test():
    rng = np.random.default_rng(1)
    pts = np.column_stack([rng.uniform(-1, 3, 10), rng.uniform(-1, 1, 10), rng.normal(size=10)])
    pts[0, :2] = (1.0, 0.2)  # at least one interior point
    out = swath_extract(PointCloud(pts), TrajectoryArc(ORIGIN, 0.0, 1.375), 1.0)
    inside = [p for p in pts if 0.0 <= p[0] <= 2.0 and abs(p[1]) <= 0.5]
    np.testing.assert_array_equal(out.points, np.array(inside).reshape(-1, 3))


@settings(max_examples=15, deadline=None)
@given(k=st.floats(-1.14, 1.14), h=st.floats(-3.1, 3.1), seed=st.integers(0, 1000))
def test_curved_extract_matches_nearest_point_oracle(k, h, seed):
    arc = TrajectoryArc(Pose2D(0.3, -0.2, h), k, 1.375)
    rng = np.random.default_rng(seed)
    pts = np.column_stack([rng.uniform(-3, 3, 150), rng.uniform(-3, 3, 150), np.zeros(150)])
    got = {tuple(p) for p in swath_extract(PointCloud(pts), arc, 1.0).points}
    s, lat = oracle_frame(arc, pts[:, 0], pts[:, 1])
    clear = np.minimum.reduce([abs(s), abs(s - 2.0), abs(abs(lat) - 0.5)]) > 1e-6
    expect = (s >= 0.0) & (s <= 2.0) & (abs(lat) <= 0.5)
    for p, e in zip(pts[clear], expect[clear]):
        assert (tuple(p) in got) == e


def test_extract_rejects_non_positive_width():
    with pytest.raises(ValueError):
        swath_extract(PointCloud(np.zeros((0, 3))), TrajectoryArc(ORIGIN, 0.0, 1.0), 0.0)


# --- safety_check ---------------------------------------------------------------------


def test_flat_points_are_safe():
    r = safety_check(plane_cloud(lambda x, y: 0 * x), TrajectoryArc(ORIGIN, 0.0, 1.375))
    assert (r.pitch_deg, r.roll_deg, r.residual, r.traversable) == (0.0, 0.0, 0.0, True)


def test_steep_ramp_is_unsafe():
    r = safety_check(plane_cloud(lambda x, y: x), TrajectoryArc(ORIGIN, 0.0, 1.375))
    assert r.pitch_deg == pytest.approx(45.0)
    assert not r.traversable and "pitch" in r.reason


def test_pitch_and_roll_follow_the_heading():
    # a slope rising along +y is pitch for a rover heading north and roll for one heading east
    cloud = plane_cloud(lambda x, y: 0.1 * y, box=(-2, 2, -2, 2))
    north = safety_check(cloud, TrajectoryArc(Pose2D(0, 0, math.pi / 2), 0.0, 1.0))
    east = safety_check(cloud, TrajectoryArc(ORIGIN, 0.0, 1.0))
    assert north.pitch_deg == pytest.approx(math.degrees(math.atan(0.1)))
    assert north.roll_deg == pytest.approx(0.0, abs=1e-9)
    assert east.roll_deg == pytest.approx(math.degrees(math.atan(0.1)))


def test_single_outlier_residual():
    # 3x3 lattice, the centre raised by 0.3: the fitted plane is z = 0.3/9, so the
    # residual is 0.3 - 0.3/9
    u, v = np.meshgrid([-0.2, 0.0, 0.2], [-0.2, 0.0, 0.2])
    z = np.zeros(9)
    z[4] = 0.3
    pts = np.column_stack([u.ravel() + 1.0, v.ravel(), z])
    r = safety_check(PointCloud(pts), TrajectoryArc(ORIGIN, 0.0, 1.375), SafetyThresholds(residual_max=0.1))
    assert r.residual == pytest.approx(0.3 * 8 / 9, abs=1e-12)
    assert r.pitch_deg == pytest.approx(0.0, abs=1e-9)
    assert not r.traversable and r.reason == "residual"


@pytest.mark.parametrize("pts", [np.zeros((2, 3)), np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0.0]])])
def test_degenerate_points_are_insufficient_data(pts):
    r = safety_check(PointCloud(pts), TrajectoryArc(ORIGIN, 0.0, 1.0))
    assert not r.traversable and r.reason == "insufficient data"


@settings(max_examples=50, deadline=None)
@given(p=st.floats(-30, 30), r=st.floats(-30, 30))
def test_traversable_iff_within_thresholds(p, r):
    cloud = plane_cloud(
        lambda x, y: math.tan(math.radians(p)) * x + math.tan(math.radians(r)) * y, n=200
    )
    t = SafetyThresholds()
    rep = safety_check(cloud, TrajectoryArc(ORIGIN, 0.0, 1.0), t)
    expect = abs(rep.pitch_deg) <= t.pitch_max_deg and abs(rep.roll_deg) <= t.roll_max_deg and rep.residual <= t.residual_max
    assert rep.traversable == expect
    assert rep.pitch_deg == pytest.approx(p, abs=1e-6)


# --- rasterize ------------------------------------------------------------------------


def test_constant_plane_grid():
    grid = rasterize(plane_cloud(lambda x, y: 0 * x + 0.7, n=20000), TrajectoryArc(ORIGIN, 0.0, 1.375))
    assert grid.shape == (32, 16)
    np.testing.assert_allclose(grid, 0.7, atol=1e-15)


def test_gap_is_linearly_interpolated():
    # one point per cell centre, cell (5, 3) left empty between values 0.0 and 0.2
    rows, cols = np.meshgrid(np.arange(32), np.arange(16), indexing="ij")
    z = np.zeros((32, 16))
    z[6, 3] = 0.2
    keep = ~((rows == 5) & (cols == 3))
    s = (rows + 0.5) * CELL
    l = (cols + 0.5) * CELL - 0.5
    pts = np.column_stack([s[keep], l[keep], z[keep]])
    grid = rasterize(PointCloud(pts), TrajectoryArc(ORIGIN, 0.0, 1.375))
    assert grid[5, 3] == pytest.approx(0.1)


def test_end_gaps_extend_nearest_value():
    s = np.array([10.5, 20.5]) * CELL
    pts = []
    for c in range(16):
        l = (c + 0.5) * CELL - 0.5
        pts += [[s[0], l, 1.0], [s[1], l, 2.0]]
    grid = rasterize(PointCloud(np.array(pts)), TrajectoryArc(ORIGIN, 0.0, 1.375))
    assert np.all(grid[:11] == 1.0) and np.all(grid[20:] == 2.0)
    np.testing.assert_allclose(grid[15], 1.5)


def test_empty_column_is_untraversable():
    cloud = PointCloud(np.array([[1.0, 0.0, 0.0]]))
    with pytest.raises(EmptyColumnError) as exc:
        rasterize(cloud, TrajectoryArc(ORIGIN, 0.0, 1.375))
    assert isinstance(exc.value, UntraversableError)
    assert "empty column" in str(exc.value)


@settings(max_examples=25, deadline=None)
@given(k=st.floats(-1.14, 1.14), seed=st.integers(0, 1000))
def test_rasterize_matches_binning_oracle(k, seed):
    arc = TrajectoryArc(Pose2D(0.0, 0.0, 0.4), k, 1.375)
    cloud = plane_cloud(lambda x, y: 0.1 * x - 0.05 * y, n=3000, seed=seed, box=(-2.5, 2.5, -2.5, 2.5))
    sums = np.zeros((32, 16))
    counts = np.zeros((32, 16))
    pts = swath_extract(cloud, arc).points
    s, lat = oracle_frame(arc, pts[:, 0], pts[:, 1])
    for sv, lv, z in zip(s, lat, pts[:, 2]):
        r = min(int(sv // CELL), 31)
        c = min(int((lv + 0.5) // CELL), 15)
        sums[r, c] += z
        counts[r, c] += 1
    grid = rasterize(swath_extract(cloud, arc), arc)
    filled = counts > 0
    np.testing.assert_allclose(grid[filled], sums[filled] / counts[filled], atol=1e-9)


def _plane_errors(a, b, c, k, seed, density):
    arc = TrajectoryArc(ORIGIN, k, 1.375)
    cloud = plane_cloud(
        lambda x, y: a * x + b * y + c, n=int(density * 25), seed=seed, box=(-2.5, 2.5, -2.5, 2.5)
    )
    pts = swath_extract(cloud, arc)
    grid = rasterize(pts, arc)
    rows, cols = np.meshgrid(np.arange(32), np.arange(16), indexing="ij")
    cx, cy = arc.points_at((rows + 0.5) * CELL, (cols + 0.5) * CELL - 0.5)
    err = np.abs(grid - (a * cx + b * cy + c))
    s, lat = arc.frame_coordinates(pts.points[:, 0], pts.points[:, 1])
    filled = np.zeros((32, 16), bool)
    filled[np.minimum(s // CELL, 31).astype(int), np.minimum((lat + 0.5) // CELL, 15).astype(int)] = True
    first = np.argmax(filled, axis=0)
    last = 31 - np.argmax(filled[::-1], axis=0)
    inside = (rows >= first) & (rows <= last)
    return err, inside


planes = dict(
    a=st.floats(-0.3, 0.3), b=st.floats(-0.3, 0.3), c=st.floats(-1, 1),
    k=st.floats(-1.14, 1.14), seed=st.integers(0, 1000),
)


@settings(max_examples=20, deadline=None)
@given(**planes)
def test_plane_rasterization_error_bound_between_filled_cells(a, b, c, k, seed):
    # at 256 pts/m2 a cell expects one point, so columns can start or end with empty
    # runs that are filled by extension; the bound applies inside the filled span
    err, inside = _plane_errors(a, b, c, k, seed, 256)
    assert np.max(err[inside]) <= CELL * math.hypot(a, b) + 1e-12


@settings(max_examples=10, deadline=None)
@given(**planes)
def test_plane_rasterization_error_bound_dense(a, b, c, k, seed):
    err, inside = _plane_errors(a, b, c, k, seed, 4096)
    assert inside.all()
    assert np.max(err) <= CELL * math.hypot(a, b) + 1e-12


# --- trim_and_normalize ---------------------------------------------------------------


def test_constant_grid_gives_zero_patch():
    patch = trim_and_normalize(np.full((32, 16), 3.2))
    assert patch.values.shape == (32, 8)
    assert np.all(patch.values == 0.0)


def test_two_level_bands():
    grid = np.zeros((32, 16))
    grid[:, 12:] = 0.1
    patch = trim_and_normalize(grid)
    np.testing.assert_allclose(patch.values[:, :4], -0.05)
    np.testing.assert_allclose(patch.values[:, 4:], 0.05)


def test_central_columns_are_dropped():
    grid = np.zeros((32, 16))
    grid[:, 4:12] = 99.0
    assert np.all(trim_and_normalize(grid).values == 0.0)


def test_patch_invariants_enforced():
    with pytest.raises(ValueError):
        TerrainPatch(np.zeros((32, 7)))
    with pytest.raises(ValueError):
        TerrainPatch(np.ones((32, 8)))


# --- preprocess -----------------------------------------------------------------------


def cloud_of(dem, seed=0):
    return sample_point_cloud(dem, 400, seed=seed)


def cfg(**kw):
    return TerrainGenConfig(extent_x=5.0, extent_y=5.0, cell_size=0.05, **kw)


def test_flat_cloud_gives_zero_patch():
    patch = preprocess(cloud_of(make_ramp(0, 0, cfg())), TrajectoryArc(Pose2D(1, 2.5, 0), 0.5, 1.375))
    assert np.all(patch.values == 0.0)


def test_steep_ramp_is_rejected_on_pitch():
    with pytest.raises(UntraversableError) as exc:
        preprocess(cloud_of(make_ramp(45, 0, cfg())), TrajectoryArc(Pose2D(1, 2.5, 0), 0.0, 1.375))
    assert exc.value.report.reason == "pitch"


def test_preprocess_is_the_staged_composition():
    dem = make_rough(cfg(roughness_amplitude=0.03, bump_density=0.3, seed=4))
    cloud = cloud_of(dem, 1)
    arc = TrajectoryArc(Pose2D(1.2, 2.4, 0.3), -0.7, 1.375)
    pts = swath_extract(cloud, arc)
    assert safety_check(pts, arc).traversable
    assert preprocess(cloud, arc) == trim_and_normalize(rasterize(pts, arc))


@settings(max_examples=15, deadline=None)
@given(
    seed=st.integers(0, 10 ** 6), dx=st.floats(-20, 20), dy=st.floats(-20, 20),
    rot=st.floats(-math.pi, math.pi), k=st.floats(-1.14, 1.14),
)
def test_rigid_motion_invariance(seed, dx, dy, rot, k):
    dem = make_rough(cfg(roughness_amplitude=0.02, seed=seed % 1000))
    cloud = cloud_of(dem, seed)
    arc = TrajectoryArc(Pose2D(1.5, 2.5, 0.2), k, 1.375)
    c, s = math.cos(rot), math.sin(rot)
    p = cloud.points
    moved = np.column_stack([c * p[:, 0] - s * p[:, 1] + dx, s * p[:, 0] + c * p[:, 1] + dy, p[:, 2]])
    st0 = arc.start
    arc2 = TrajectoryArc(
        Pose2D(c * st0.x - s * st0.y + dx, s * st0.x + c * st0.y + dy, st0.heading + rot), k, 1.375
    )
    a = preprocess(cloud, arc, SafetyThresholds(90, 90, 1.0))
    b = preprocess(PointCloud(moved), arc2, SafetyThresholds(90, 90, 1.0))
    np.testing.assert_allclose(a.values, b.values, atol=1e-6)


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10 ** 6))
def test_mirror_symmetry_reverses_columns(seed):
    dem = make_rough(cfg(roughness_amplitude=0.02, seed=seed % 1000))
    p = cloud_of(dem, seed).points
    arc = TrajectoryArc(Pose2D(1.5, 2.5, 0.0), 0.0, 1.375)
    mirrored = np.column_stack([p[:, 0], 2 * 2.5 - p[:, 1], p[:, 2]])
    wide = SafetyThresholds(90, 90, 1.0)
    a = preprocess(PointCloud(p), arc, wide)
    b = preprocess(PointCloud(mirrored), arc, wide)
    np.testing.assert_allclose(a.values, b.values[:, ::-1], atol=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10 ** 6), k=st.floats(-1.14, 1.14), h=st.floats(-3.14, 3.14))
def test_patch_invariants_hold(seed, k, h):
    dem = make_rough(cfg(roughness_amplitude=0.03, bump_density=0.5, seed=seed % 1000))
    arc = TrajectoryArc(Pose2D(2.5, 2.5, h), k, 1.375)
    try:
        patch = preprocess(cloud_of(dem, seed), arc)
    except UntraversableError:
        return
    assert patch.values.shape == (32, 8)
    assert np.all(np.isfinite(patch.values))
    assert abs(patch.values[0].mean()) <= 1e-9
