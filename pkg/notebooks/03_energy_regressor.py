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
# # Learning energy from terrain patches
#
# A small 1D convolutional network reads a terrain patch row by row and
# predicts consumed and recovered energy. This walkthrough trains it on a
# few hundred simulated traverses, which is far less than the full
# experiment, and compares it with the RampModel and the simulator.

# %%
from terravolt.estimators import default_ramp_calibration
from terravolt.nn.train import TrainConfig, train
from terravolt.pipeline import as_arrays, eval_table, evaluate, generate_dataset, render_table
from terravolt.terrain import make_rough_terrain

# %%
train_terrains = [make_rough_terrain(s, extent=8.0) for s in range(3)]
test_terrains = [make_rough_terrain(50 + s, extent=8.0) for s in range(1)]
train_set = generate_dataset(train_terrains, 600, seed=1)
test_set = generate_dataset(test_terrains, 200, seed=2)
print(len(train_set), "training and", len(test_set), "test records")

# %% [markdown]
# ## Training
#
# Targets are standardised internally. The optimiser is RMSprop.

# %%
x, y = as_arrays(train_set)
weights, history = train(x, y, TrainConfig(epochs=15, batch_size=32, learning_rate=1e-3))
print("train mse", [round(v, 3) for v in history["train_mse"][::3]])
print("val mse  ", [round(v, 3) for v in history["val_mse"][::3]])

# %% [markdown]
# ## Evaluation
#
# DynSim re-runs the simulator on the source terrain, so its row is exact by
# construction.

# %%
fitted, _ = default_ramp_calibration()
rows = evaluate(weights, fitted, test_set, test_terrains)
print(render_table(*eval_table(rows)))
