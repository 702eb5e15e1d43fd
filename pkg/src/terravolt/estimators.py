"""Energy estimators: the inclination-only RampModel, the learned Conv1D regressor and the simulator.

Every estimator exposes ``estimate_edges(dem, arcs, patches)`` returning one
:class:`EnergyEstimate` per arc, so the planner can batch a whole expansion.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np

from .geometry import Pose2D, TrajectoryArc
from .nn.network import EnergyNetWeights, energynet_forward, predict
from .powertrain import EnergyLabel, RoverParams, simulate_traverse
from .swath import TerrainPatch
from .terrain import TerrainGenConfig, make_ramp


@dataclass(frozen=True)
class RampModelParams:
    g_up: float = 6.13  # J/(m deg)
    g_down: float = 1.18  # J/(m deg)
    beta: float = 1.90  # J/m

    def __post_init__(self):
        if not (self.g_up > 0 and self.g_down > 0 and self.beta > 0):
            raise ValueError(f"RampModel constants must be positive: {self}")

    def per_metre(self, theta_deg):
        """``G(theta) * theta + beta`` with the uphill/downhill gain switch at 0 deg."""
        theta = np.asarray(theta_deg, dtype=float)
        return np.where(theta >= 0.0, self.g_up, self.g_down) * theta + self.beta


REFERENCE_RAMP_PARAMS = RampModelParams()


@dataclass(frozen=True)
class EnergyEstimate:
    e_c: float
    e_r: float

    def __post_init__(self):
        if self.e_c < 0 or self.e_r < 0:
            raise ValueError(f"energy components must be non-negative: {self}")

    @property
    def net(self) -> float:
        return self.e_c - self.e_r


def ramp_model_estimate(
    patch: TerrainPatch, arc_length: float, p: RampModelParams = REFERENCE_RAMP_PARAMS,
    offset: float = 0.0,
) -> EnergyEstimate:
    """Sum ``(G theta_i + beta) d_i`` over consecutive row means spanning ``arc_length``.

    The integration window starts ``offset`` metres into the patch. Pass half
    the wheelbase to follow the body centre of a rover whose reference point
    is the rear axle.
    """
    values = getattr(patch, "values", patch)
    spacing = getattr(patch, "row_spacing", 0.0625)
    h = np.asarray(values, dtype=float).mean(axis=1)
    first = int(round(offset / spacing))
    n = min(int(round(arc_length / spacing)), len(h) - 1 - first)
    theta = np.degrees(np.arctan(np.diff(h[first:first + n + 1]) / spacing))
    e = p.per_metre(theta) * spacing
    return EnergyEstimate(float(np.sum(np.maximum(e, 0.0))), float(np.sum(np.maximum(-e, 0.0))))


def conv1d_estimate(patch: TerrainPatch, w: EnergyNetWeights) -> EnergyEstimate:
    e_c, e_r = energynet_forward(patch, w)
    return EnergyEstimate(max(e_c, 0.0), max(e_r, 0.0))


def dynsim_estimate(dem, arc: TrajectoryArc, rover: RoverParams = RoverParams()) -> EnergyEstimate:
    _, label = simulate_traverse(dem, arc, rover)
    return EnergyEstimate(label.e_c, label.e_r)


class RampModelEstimator:
    name = "RampModel"

    def __init__(self, params: RampModelParams = REFERENCE_RAMP_PARAMS, rover: RoverParams = RoverParams()):
        self.params = params
        self.offset = rover.wheelbase / 2.0

    def estimate_edges(self, dem, arcs, patches):
        return [
            ramp_model_estimate(p, a.length, self.params, self.offset) for a, p in zip(arcs, patches)
        ]


class Conv1DEstimator:
    name = "Conv1D"

    def __init__(self, weights: EnergyNetWeights):
        if weights is None:
            raise ValueError("Conv1D estimator needs trained weights")
        self.weights = weights

    def estimate_edges(self, dem, arcs, patches):
        if not patches:
            return []
        y = predict(self.weights, np.stack([p.values for p in patches]))
        return [EnergyEstimate(max(float(a), 0.0), max(float(b), 0.0)) for a, b in y]


class DynSimEstimator:
    name = "DynSim"

    def __init__(self, rover: RoverParams = RoverParams()):
        self.rover = rover

    def estimate_edges(self, dem, arcs, patches):
        return [dynsim_estimate(dem, a, self.rover) for a in arcs]


# --- fitting and calibration -----------------------------------------------------

def ramp_traverses(pitches_deg, rover: RoverParams = RoverParams(), length: float = 1.375):
    """Straight traverses heading straight up (or down) planar ramps: ``(pitch, distance, label)``."""
    cfg = TerrainGenConfig(extent_x=length + rover.wheelbase + 1.2, extent_y=rover.wheel_track + 0.6)
    out = []
    for pitch in pitches_deg:
        dem = make_ramp(float(pitch), 0.0, cfg)
        arc = TrajectoryArc(Pose2D(0.5, cfg.extent_y / 2.0, 0.0), 0.0, length)
        _, label = simulate_traverse(dem, arc, rover)
        out.append((float(pitch), length, label))
    return out


def fit_ramp_model(ramp_dataset) -> RampModelParams:
    """Least-squares ``(g_up, g_down, beta)`` for net energy ``(G theta + beta) d``."""
    rows = [(float(t), float(d), lab.e_c - lab.e_r) for t, d, lab in ramp_dataset]
    if not rows:
        raise ValueError("degenerate ramp dataset: empty")
    theta = np.array([r[0] for r in rows])
    dist = np.array([r[1] for r in rows])
    net = np.array([r[2] for r in rows])
    if not (np.any(theta > 0) and np.any(theta < 0)):
        raise ValueError("degenerate ramp dataset: needs both uphill and downhill pitches")
    A = np.column_stack([np.maximum(theta, 0.0) * dist, np.minimum(theta, 0.0) * dist, dist])
    coef, _, rank, _ = np.linalg.lstsq(A, net, rcond=None)
    if rank < 3:
        raise ValueError("degenerate ramp dataset: rank deficient")
    return RampModelParams(float(coef[0]), float(coef[1]), float(coef[2]))


def calibrate_heuristic(fitted: RampModelParams, margin: float, ramp_dataset) -> RampModelParams:
    """Shrink the fitted constants to a lower envelope of the sampled true net energies.

    ``beta`` is scaled by ``1 - margin`` (and capped by the flat-ground energy),
    ``g_up`` lowered and ``g_down`` raised until ``(G theta + beta) d`` sits
    below every sample, with the same relative margin on the gains.
    """
    if not 0 <= margin < 1:
        raise ValueError("margin must lie in [0, 1)")
    theta = np.array([float(t) for t, _, _ in ramp_dataset])
    per_m = np.array([(lab.e_c - lab.e_r) / d for _, d, lab in ramp_dataset])
    shrink = 1.0 - margin
    beta = fitted.beta * shrink
    flat = np.abs(theta) < 1e-12
    if flat.any():
        beta = min(beta, shrink * float(per_m[flat].min()))
    g_up, g_down = fitted.g_up, fitted.g_down
    up, down = theta > 0, theta < 0
    if up.any():
        g_up = min(g_up, shrink * float(np.min((per_m[up] - beta) / theta[up])))
    if down.any():
        g_down = max(g_down, float(np.max((beta - per_m[down]) / -theta[down])) / shrink)
    if not (beta > 0 and g_up > 0):
        raise ValueError("calibration collapsed: ramp samples admit no positive lower envelope")
    return RampModelParams(g_up, g_down, beta)


@functools.lru_cache(maxsize=8)
def default_ramp_calibration(rover: RoverParams = RoverParams(), margin: float = 0.05):
    """``(fitted, heuristic)`` constants for ``rover`` from simulated ramps in [-20, 20] deg."""
    samples = ramp_traverses(np.arange(-20.0, 20.0 + 1e-9, 0.5), rover)
    fitted = fit_ramp_model(samples)
    return fitted, calibrate_heuristic(fitted, margin, samples)


def label_to_estimate(label: EnergyLabel) -> EnergyEstimate:
    return EnergyEstimate(label.e_c, label.e_r)
