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
# # Motor power and traverse energy
#
# Ground-truth labels come from a quasi-static traverse simulator. Wheel
# torques follow from the local slope, rolling resistance and the static load
# split. Each DC motor's electrical power is then integrated into consumed
# and recovered energy.

# %%
from terravolt.estimators import default_ramp_calibration, ramp_traverses
from terravolt.geometry import Pose2D, TrajectoryArc
from terravolt.powertrain import motor_power, net_round_trip, simulate_traverse
from terravolt.terrain import TerrainGenConfig, make_ramp

# %% [markdown]
# ## Motor power
#
# Driving draws more than the mechanical power; regeneration returns less.

# %%
for omega, tau in [(10.0, 1.0), (10.0, -1.0), (10.0, 0.0)]:
    print(f"omega {omega:5.1f} rad/s, tau {tau:5.1f} N m -> {motor_power(omega, tau):8.4f} W")

# %% [markdown]
# ## Flat, uphill and downhill traverses

# %%
cfg = TerrainGenConfig(extent_x=4.0, extent_y=4.0)
arc = TrajectoryArc(Pose2D(0.5, 2.0, 0.0), 0.0, 1.375)
for pitch in (0.0, 10.0, -10.0):
    trace, label = simulate_traverse(make_ramp(pitch, 0.0, cfg), arc)
    print(f"pitch {pitch:6.1f}: e_c {label.e_c:7.2f} J  e_r {label.e_r:6.2f} J  ({len(trace)} samples)")

# %% [markdown]
# Driving an arc and back always costs energy: recovery never pays for the climb.

# %%
print(f"10 deg round trip: {net_round_trip(make_ramp(10.0, 0.0, cfg), TrajectoryArc(Pose2D(1.0, 2.0, 0.0), 0.0, 1.375)):.2f} J")

# %% [markdown]
# ## Inclination-only baseline
#
# The RampModel predicts `(G theta + beta) d`, with separate gains uphill and
# downhill. The constants are fitted to simulated straight ramps. A shrunken
# copy lies below every sample and serves as the planner heuristic.

# %%
fitted, heur = default_ramp_calibration()
print("fitted   ", fitted)
print("heuristic", heur)
for theta, d, lab in ramp_traverses([-15.0, -5.0, 0.0, 5.0, 15.0]):
    truth = lab.e_c - lab.e_r
    print(f"{theta:6.1f} deg  true {truth:8.2f} J  fitted {float(fitted.per_metre(theta)) * d:8.2f} J  "
          f"heuristic {float(heur.per_metre(theta)) * d:8.2f} J")
