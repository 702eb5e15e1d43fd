"""DC-motor power model and a quasi-static traverse simulator producing energy labels.

The simulator is deliberately physics-lite: the rover moves along the arc at
constant speed, each wheel follows the terrain profile under it, and wheel
torque balances gravity along the local wheel slope plus rolling resistance
under a static load distribution. No inertia, slip or controller dynamics.

Rover reference point is the rear-axle midpoint. The rover is articulated
(central steering pivot), so the front axle follows the same centreline
``wheelbase`` metres ahead. With the default 0.625 m wheelbase the four
contact tracks of a 1.375 m primitive span exactly the 2 m terrain window.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .geometry import TrajectoryArc
from .terrain import DEM

# wheel order used by every trace: rear-left, rear-right, front-left, front-right
WHEELS = ("RL", "RR", "FL", "FR")


class OutOfBoundsError(ValueError):
    pass


@dataclass(frozen=True)
class MotorParams:
    eta_drive: float = 0.83
    eta_regen: float = 3.33
    r_a: float = 0.5
    k_t: float = 0.05
    g_r: float = 62.0
    dt: float = 1e-3

    def __post_init__(self):
        for name in ("eta_drive", "eta_regen", "r_a", "k_t", "g_r", "dt"):
            if not getattr(self, name) > 0:
                raise ValueError(f"MotorParams.{name} must be positive")


@dataclass(frozen=True)
class RoverParams:
    mass: float = 50.0
    wheel_radius: float = 0.1
    wheel_track: float = 1.0
    wheelbase: float = 0.625
    cog_height: float = 0.2
    rolling_resistance: float = 0.05
    speed: float = 0.2
    gravity: float = 9.81
    motors: MotorParams = field(default_factory=MotorParams)

    def __post_init__(self):
        for name in (
            "mass", "wheel_radius", "wheel_track", "wheelbase", "cog_height",
            "rolling_resistance", "speed", "gravity",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"RoverParams.{name} must be positive")

    @property
    def weight(self) -> float:
        return self.mass * self.gravity

    def wheel_offsets(self):
        """``(along, lateral)`` position of each wheel relative to the reference point."""
        half = self.wheel_track / 2.0
        b = self.wheelbase
        return np.array([[0.0, half], [0.0, -half], [b, half], [b, -half]])


@dataclass(frozen=True, eq=False)
class MotorTrace:
    omega: np.ndarray  # (n, 4) rad/s
    tau: np.ndarray  # (n, 4) N m
    dt: float

    def __len__(self):
        return len(self.omega)

    def to_csv(self, path, motors: MotorParams = MotorParams()) -> None:
        """Debug dump: one row per sample and motor."""
        p = motor_power(self.omega, self.tau, motors)
        with open(os.fspath(path), "w", encoding="ascii", newline="\n") as fh:
            fh.write("t,motor_id,omega,tau,P\n")
            for k in range(len(self.omega)):
                t = k * self.dt
                for m in range(self.omega.shape[1]):
                    fh.write(f"{t!r},{m},{self.omega[k, m]!r},{self.tau[k, m]!r},{p[k, m]!r}\n")


@dataclass(frozen=True)
class EnergyLabel:
    e_c: float
    e_r: float

    def __post_init__(self):
        if self.e_c < 0 or self.e_r < 0:
            raise ValueError(f"energy components must be non-negative: {self}")

    @property
    def net(self) -> float:
        return self.e_c - self.e_r


def motor_power(omega, tau, p: MotorParams = MotorParams()):
    """Electrical power drawn by a motor; negative when power flows back to the bus."""
    omega = np.asarray(omega, dtype=float)
    tau = np.asarray(tau, dtype=float)
    eta = np.where(omega * tau >= 0.0, p.eta_drive, p.eta_regen)
    current = tau / (p.k_t * p.g_r * eta)
    power = omega * tau / eta + current * current * p.r_a
    return float(power) if power.ndim == 0 else power


def energy_from_trace(trace: MotorTrace, p: MotorParams = MotorParams()) -> EnergyLabel:
    if len(trace) == 0:
        raise ValueError("empty motor trace")
    power = np.asarray(motor_power(trace.omega, trace.tau, p))
    pos = power >= 0.0
    e_c = float(np.sum(power[pos]) * trace.dt)
    e_r = float(-np.sum(power[~pos]) * trace.dt) + 0.0  # avoid -0.0
    return EnergyLabel(e_c, e_r)


def wheel_tracks(arc: TrajectoryArc, rover: RoverParams, s):
    """World ``x, y`` of each wheel (columns) for centreline positions ``s`` (rows)."""
    off = rover.wheel_offsets()
    # wheels on one axle share arc positions, so centreline trig runs once per axle
    along, axle = np.unique(off[:, 0], return_inverse=True)
    s = np.asarray(s, dtype=float)[:, None] + along[None, :]
    cx, cy, sn, cs = arc._frame(s)
    lat = off[:, 1]
    return cx[:, axle] - lat * sn[:, axle], cy[:, axle] + lat * cs[:, axle]


def _sample_positions(arc: TrajectoryArc, rover: RoverParams):
    step = rover.speed * rover.motors.dt
    n = int(round(arc.length / step))
    if n < 1:
        raise ValueError("arc shorter than a single time step")
    return step, step * np.arange(n + 1)


def footprint_in_bounds(dem: DEM, arc: TrajectoryArc, rover: RoverParams = RoverParams()) -> bool:
    """Whether every wheel stays on the grid at every simulation sample along ``arc``."""
    _, s = _sample_positions(arc, rover)
    # a wheel sits at arc length s + along plus a normal offset, and arc length bounds the chord
    off = np.abs(rover.wheel_offsets())
    reach = s[-1] + float(off[:, 0].max() + off[:, 1].max())
    sx, sy = arc.start.x, arc.start.y
    if dem.contains(sx - reach, sy - reach) and dem.contains(sx + reach, sy + reach):
        return True
    x, y = wheel_tracks(arc, rover, s)
    return bool(np.all(dem.contains(x, y)))


def simulate_traverse(
    dem: DEM, arc: TrajectoryArc, rover: RoverParams = RoverParams()
) -> tuple[MotorTrace, EnergyLabel]:
    m = rover.motors
    step, s = _sample_positions(arc, rover)
    x, y = wheel_tracks(arc, rover, s)
    if not np.all(dem.contains(x, y)):
        raise OutOfBoundsError("out of bounds")
    z = dem.elevation_at(x, y)  # (n+1, 4)

    lateral = rover.wheel_offsets()[:, 1]
    stretch = 1.0 - arc.curvature * lateral  # wheel path length per unit centreline length
    slope = np.arctan(np.diff(z, axis=0) / (step * stretch))

    zm = 0.5 * (z[1:] + z[:-1])
    pitch_tan = (0.5 * (zm[:, 2] + zm[:, 3] - zm[:, 0] - zm[:, 1])) / rover.wheelbase
    roll_tan = (0.5 * (zm[:, 0] + zm[:, 2] - zm[:, 1] - zm[:, 3])) / rover.wheel_track
    a = np.clip(2.0 * rover.cog_height / rover.wheelbase * pitch_tan, -1.0, 1.0)
    b = np.clip(2.0 * rover.cog_height / rover.wheel_track * roll_tan, -1.0, 1.0)
    quarter = rover.weight / 4.0
    load = quarter * np.column_stack(
        [(1 + a) * (1 - b), (1 + a) * (1 + b), (1 - a) * (1 - b), (1 - a) * (1 + b)]
    )

    tau = rover.wheel_radius * load * (np.sin(slope) + rover.rolling_resistance * np.cos(slope))
    omega = np.broadcast_to(rover.speed * stretch / rover.wheel_radius, tau.shape).copy()
    trace = MotorTrace(omega, tau, m.dt)
    return trace, energy_from_trace(trace, m)


def net_round_trip(dem: DEM, arc: TrajectoryArc, rover: RoverParams = RoverParams()) -> float:
    """Net energy of driving ``arc`` and then driving it back."""
    _, fwd = simulate_traverse(dem, arc, rover)
    _, back = simulate_traverse(dem, arc.reversed(), rover)
    return fwd.net + back.net
