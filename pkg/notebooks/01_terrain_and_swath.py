# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Terrain and swath patches
#
# A rover sees the ground as a point cloud. Before any energy estimate, the
# strip under its footprint along a candidate arc is cut out, checked for
# safety and rasterised into a 32 by 8 matrix of relative heights.

# %%
import numpy as np

from terravolt.geometry import Pose2D, TrajectoryArc
from terravolt.swath import UntraversableError, preprocess, safety_check, swath_extract
from terravolt.terrain import POINT_DENSITY, TerrainGenConfig, make_ramp, make_rough_terrain, sample_point_cloud

# %% [markdown]
# ## A rough test terrain
#
# `make_rough_terrain` layers a broad swell, patchy fine roughness and small
# bumps. The point cloud samples it uniformly at 256 points per square metre.

# %%
dem = make_rough_terrain(seed=3, extent=8.0)
cloud = sample_point_cloud(dem, POINT_DENSITY, seed=0)
z = dem.elevations
print(f"{dem.n_rows}x{dem.n_cols} grid, height range {z.min():.3f} .. {z.max():.3f} m, {len(cloud.points)} points")

# %% [markdown]
# ## One arc, one patch
#
# The arc starts at the rover's rear axle. The window runs 2 m along it and
# 1 m across; the central columns under the chassis are dropped, leaving the
# two wheel bands.

# %%
arc = TrajectoryArc(Pose2D(3.0, 3.0, 0.4), curvature=0.57, length=1.375)
swath = swath_extract(cloud, arc)
report = safety_check(swath, arc)
print(f"{len(swath.points)} points under the swath; pitch {report.pitch_deg:.1f} deg, roll {report.roll_deg:.1f} deg")
patch = preprocess(cloud, arc)
print("patch shape", patch.values.shape, "first-row mean", round(float(patch.values[0].mean()), 12))
print(np.array2string(patch.values[::4] * 100, precision=1, suppress_small=True), "cm (every 4th row)")

# %% [markdown]
# ## Unsafe ground is rejected
#
# A 25 degree ramp exceeds the 20 degree pitch limit, so no patch is made.

# %%
steep = make_ramp(25.0, 0.0, TerrainGenConfig(extent_x=5.0, extent_y=5.0))
try:
    preprocess(sample_point_cloud(steep, POINT_DENSITY, 1), TrajectoryArc(Pose2D(1.0, 2.5, 0.0), 0.0, 1.375))
except UntraversableError as exc:
    print("rejected:", exc.report.reason, f"(pitch {exc.report.pitch_deg:.1f} deg)")
