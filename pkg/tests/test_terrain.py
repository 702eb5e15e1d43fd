import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from terravolt.terrain import (
    DEM, DEMFormatError, PointCloud, TerrainGenConfig, add_bumps, cap_height, load_dem,
    make_preset, make_ramp, make_rough, make_rough_terrain, place_bumps, sample_point_cloud,
    save_dem,
)


def small_cfg(**kw):
    base = dict(extent_x=4.0, extent_y=4.0, cell_size=0.05)
    base.update(kw)
    return TerrainGenConfig(**base)


# --- DEM type ----------------------------------------------------------------------

def test_dem_rejects_shape_mismatch_and_non_finite():
    with pytest.raises(ValueError):
        DEM(3, 2, 1.0, 0.0, 0.0, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        DEM(2, 2, 1.0, 0.0, 0.0, np.array([[0.0, np.nan], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        DEM(2, 2, 0.0, 0.0, 0.0, np.zeros((2, 2)))


def test_dem_elevations_are_read_only():
    dem = DEM(2, 2, 1.0, 0.0, 0.0, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        dem.elevations[0, 0] = 1.0


def test_bilinear_is_exact_at_nodes():
    rng = np.random.default_rng(3)
    dem = DEM(7, 5, 0.25, -1.0, 2.0, rng.normal(size=(5, 7)))
    xs, ys = dem.node_coordinates()
    np.testing.assert_array_equal(dem.elevation_at(xs, ys), dem.elevations)


def test_bilinear_midpoint_of_a_cell():
    dem = DEM(2, 2, 1.0, 0.0, 0.0, np.array([[0.0, 1.0], [2.0, 3.0]]))
    assert dem.elevation_at(0.5, 0.5) == pytest.approx(1.5)
    # row 0 is the low-y row
    assert dem.elevation_at(1.0, 0.0) == 1.0
    assert dem.elevation_at(0.0, 1.0) == 2.0


# --- generators --------------------------------------------------------------------

def test_flat_ramp_is_zero():
    assert np.all(make_ramp(0.0, 0.0, small_cfg()).elevations == 0.0)


def test_ramp_45_degrees_at_one_metre():
    dem = make_ramp(45.0, 0.0, small_cfg())
    assert dem.elevation_at(1.0, 2.0) == pytest.approx(1.0, abs=1e-12)


def test_ramp_5_degrees_at_two_metres():
    dem = make_ramp(5.0, 0.0, small_cfg())
    assert dem.elevation_at(2.0, 0.0) == pytest.approx(0.17498, abs=1e-5)


def test_ramp_roll_tilts_along_y():
    dem = make_ramp(0.0, 10.0, small_cfg())
    assert dem.elevation_at(3.0, 1.0) == pytest.approx(math.tan(math.radians(10.0)))


@pytest.mark.parametrize("bad", [90.0, -90.0, float("nan"), float("inf")])
def test_ramp_rejects_bad_angles(bad):
    with pytest.raises(ValueError):
        make_ramp(bad, 0.0, small_cfg())


def test_rough_zero_amplitude_is_flat():
    assert np.all(make_rough(small_cfg(roughness_amplitude=0.0)).elevations == 0.0)


def test_rough_is_deterministic():
    a = make_rough(small_cfg(roughness_amplitude=0.05, seed=9))
    b = make_rough(small_cfg(roughness_amplitude=0.05, seed=9))
    assert a == b
    assert a != make_rough(small_cfg(roughness_amplitude=0.05, seed=10))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), amp=st.floats(0.01, 0.2))
def test_rough_rms_within_twenty_percent(seed, amp):
    dem = make_rough(small_cfg(roughness_amplitude=amp, seed=seed))
    rms = math.sqrt(np.mean(dem.elevations ** 2))
    assert 0.8 * amp <= rms <= 1.2 * amp


def test_rough_rms_example_four_metres():
    dem = make_rough(small_cfg(roughness_amplitude=0.05, seed=1))
    assert 0.04 <= math.sqrt(np.mean(dem.elevations ** 2)) <= 0.06


def test_rough_rejects_bad_correlation_length():
    with pytest.raises(ValueError):
        make_rough(small_cfg(roughness_amplitude=0.05, correlation_length=0.0))


def test_bumps_density_zero_is_identity():
    dem = make_ramp(3.0, 1.0, small_cfg())
    assert add_bumps(dem, small_cfg(bump_density=0.0)) is dem


def test_single_bump_raises_centre_by_height():
    flat = make_ramp(0.0, 0.0, small_cfg())
    dem = place_bumps(flat, [(2.0, 2.0)], 0.25, 0.05)
    assert dem.elevation_at(2.0, 2.0) == pytest.approx(0.05, abs=1e-15)
    assert dem.elevation_at(2.3, 2.0) == pytest.approx(0.0, abs=1e-15)


def test_hemisphere_when_height_equals_radius():
    r = np.linspace(0.0, 0.25, 11)
    np.testing.assert_allclose(cap_height(r, 0.25, 0.25), np.sqrt(0.25 ** 2 - r ** 2), atol=1e-15)


def test_overlapping_bumps_take_pointwise_max():
    flat = make_ramp(0.0, 0.0, small_cfg())
    centres = [(1.9, 2.0), (2.15, 2.05)]
    dem = place_bumps(flat, centres, 0.25, 0.05)
    xs, ys = flat.node_coordinates()
    brute = np.zeros_like(xs)
    for cx, cy in centres:
        for j in range(xs.shape[0]):
            for i in range(xs.shape[1]):
                d = math.hypot(xs[j, i] - cx, ys[j, i] - cy)
                if d <= 0.25:
                    rho = (0.25 ** 2 + 0.05 ** 2) / 0.1
                    brute[j, i] = max(brute[j, i], math.sqrt(rho * rho - d * d) - (rho - 0.05))
    np.testing.assert_allclose(dem.elevations, brute, atol=1e-12)


def test_bump_config_validation():
    with pytest.raises(ValueError):
        small_cfg(bump_density=1.0, bump_radius=0.0)
    with pytest.raises(ValueError):
        small_cfg(bump_density=1.0, bump_radius=0.1, bump_height=0.2)
    with pytest.raises(ValueError):
        small_cfg(roughness_amplitude=-1.0)


# --- point clouds ------------------------------------------------------------------

def test_flat_cloud_has_zero_heights():
    cloud = sample_point_cloud(make_ramp(0.0, 0.0, small_cfg()), 256, seed=1)
    assert np.all(cloud.points[:, 2] == 0.0)


def test_cloud_count_near_expectation():
    cloud = sample_point_cloud(make_ramp(0.0, 0.0, small_cfg()), 256, seed=2)
    assert abs(len(cloud) - 4096) <= 0.05 * 4096


def test_cloud_is_deterministic_and_inside_extent():
    dem = make_rough(small_cfg(roughness_amplitude=0.05, seed=4))
    a = sample_point_cloud(dem, 100, seed=5)
    b = sample_point_cloud(dem, 100, seed=5)
    np.testing.assert_array_equal(a.points, b.points)
    assert np.all(dem.contains(a.points[:, 0], a.points[:, 1]))
    np.testing.assert_array_equal(a.points[:, 2], dem.elevation_at(a.points[:, 0], a.points[:, 1]))


def test_cloud_rejects_bad_density():
    with pytest.raises(ValueError):
        sample_point_cloud(make_ramp(0.0, 0.0, small_cfg()), 0.0)


def test_query_disc_matches_brute_force():
    rng = np.random.default_rng(0)
    pts = np.column_stack([rng.uniform(0, 5, 500), rng.uniform(0, 5, 500), rng.normal(size=500)])
    cloud = PointCloud(pts)
    idx = cloud.query_disc(2.0, 3.0, 1.2)
    brute = np.flatnonzero(np.hypot(pts[:, 0] - 2.0, pts[:, 1] - 3.0) <= 1.2)
    np.testing.assert_array_equal(idx, brute)


def test_point_cloud_rejects_bad_shape():
    with pytest.raises(ValueError):
        PointCloud(np.zeros((3, 2)))
    with pytest.raises(ValueError):
        PointCloud(np.array([[0.0, 0.0, np.inf]]))


# --- presets and files -------------------------------------------------------------

@pytest.mark.parametrize("name", ["flat", "ramp", "rough", "bumpy"])
def test_presets_are_deterministic(name):
    assert make_preset(name, seed=3, extent=4.0) == make_preset(name, seed=3, extent=4.0)


def test_unknown_preset():
    with pytest.raises(ValueError, match="unknown preset"):
        make_preset("moon")


def test_rough_terrain_has_relief():
    dem = make_rough_terrain(0, extent=6.0)
    assert 0.03 < np.std(dem.elevations) < 0.3


def test_save_load_round_trip(tmp_path):
    dem = make_rough_terrain(1, extent=3.0)
    path = tmp_path / "t.dem"
    save_dem(dem, path)
    assert load_dem(path) == dem


def test_two_by_two_file(tmp_path):
    path = tmp_path / "g.dem"
    path.write_text("ncols 2\nnrows 2\ncellsize 1.0\nxll 0.0\nyll 0.0\n0 0\n1 1\n")
    dem = load_dem(path)
    assert (dem.n_cols, dem.n_rows, dem.cell_size) == (2, 2, 1.0)
    np.testing.assert_array_equal(dem.elevations, [[0.0, 0.0], [1.0, 1.0]])


def test_file_with_missing_cell_names_the_line(tmp_path):
    path = tmp_path / "bad.dem"
    path.write_text("ncols 2\nnrows 2\ncellsize 1.0\nxll 0.0\nyll 0.0\n0 0\n1\n")
    with pytest.raises(DEMFormatError, match="line 7"):
        load_dem(path)


@pytest.mark.parametrize(
    "text, line",
    [
        ("ncols 2\nnrows 2\ncellsize 1.0\nxll 0.0\n", "line 5"),
        ("ncols two\nnrows 2\ncellsize 1.0\nxll 0.0\nyll 0.0\n0 0\n1 1\n", "line 1"),
        ("ncols 2\nnrows 2\ncellsize 1.0\nxll 0.0\nyll 0.0\n0 x\n1 1\n", "line 6"),
        ("ncols 2\nnrows 2\ncellsize 1.0\nxll 0.0\nyll 0.0\n0 0\n", "line 7"),
    ],
)
def test_malformed_files(tmp_path, text, line):
    path = tmp_path / "bad.dem"
    path.write_text(text)
    with pytest.raises(DEMFormatError, match=line):
        load_dem(path)
