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
# # Energy-aware planning on a state lattice
#
# A* searches over constant-curvature arcs of 1.375 m. Edge costs are the
# predicted net energy, and the heuristic is the calibrated straight-line
# RampModel.

# %%
from terravolt.estimators import DynSimEstimator, RampModelEstimator, default_ramp_calibration
from terravolt.geometry import Pose2D
from terravolt.pipeline import compare_planners, comparison_table, random_problems, render_table
from terravolt.planner import astar, execute_plan, format_plan
from terravolt.terrain import make_rough_terrain

fitted, heur = default_ramp_calibration()
dem = make_rough_terrain(500)

# %% [markdown]
# ## One problem
#
# The plan is executed on the simulator so predicted and real energy can be
# compared.

# %%
plan = astar(Pose2D(4.0, 4.0, 0.5), Pose2D(6.5, 6.0, 0.0), dem, RampModelEstimator(fitted), heuristic_params=heur)
execute_plan(plan, dem)
print(format_plan(plan))

# %% [markdown]
# ## Comparing estimators
#
# With DynSim as the estimator, predicted and real energy coincide, so it
# gives the best plan the lattice allows.

# %%
problems = random_problems(dem, 3, seed=1, min_distance=2.0, max_distance=3.0)
rows = compare_planners(
    problems, {"RampModel": RampModelEstimator(fitted), "DynSim": DynSimEstimator()}, heuristic_params=heur
)
print(render_table(*comparison_table(rows)))
