"""Energy-aware path planning for a four-wheel rover on rough terrain.

Submodules:

terrain     DEM type, procedural terrain, point-cloud sampling, DEM files
swath       swath extraction, safety check and 32x8 terrain patches
powertrain  quasi-static traverse simulator and motor energy model
nn          numpy 1D-conv regressor, training and metrics
estimators  RampModel, Conv1D and DynSim edge-energy estimators
planner     state-lattice A* and plan execution
pipeline    dataset, evaluation and planner-comparison workflows
"""

from .geometry import Pose2D, TrajectoryArc
from .terrain import DEM, PointCloud, load_dem, make_preset, save_dem

__version__ = "0.1.0"

__all__ = ["DEM", "PointCloud", "Pose2D", "TrajectoryArc", "load_dem", "make_preset", "save_dem"]
