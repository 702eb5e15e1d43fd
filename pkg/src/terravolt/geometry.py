"""Planar poses and constant-curvature arcs.

An arc is parameterised by arc length ``s`` along its centreline and a signed
lateral offset ``l`` (positive to the left of the direction of travel). All
evaluation functions accept ``s`` beyond ``length``: the arc is then simply
extended with the same curvature, which is how the 2 m terrain window ahead of
a 1.375 m primitive is laid out.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MAX_CURVATURE = 1.14
_STRAIGHT_EPS = 1e-12


def wrap_angle(a):
    """Wrap an angle (scalar or array) into ``(-pi, pi]``."""
    w = np.mod(np.asarray(a, dtype=float) + math.pi, 2.0 * math.pi) - math.pi
    w = np.where(w <= -math.pi, w + 2.0 * math.pi, w)
    return float(w) if np.ndim(w) == 0 else w


@dataclass(frozen=True)
class Pose2D:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.heading)):
            raise ValueError(f"non-finite pose {self!r}")
        object.__setattr__(self, "heading", wrap_angle(self.heading))

    def distance_to(self, other: "Pose2D") -> float:
        return math.hypot(other.x - self.x, other.y - self.y)


@dataclass(frozen=True)
class TrajectoryArc:
    """One constant-curvature motion primitive anchored at ``start``."""

    start: Pose2D
    curvature: float
    length: float
    curvature_bound: float = field(default=MAX_CURVATURE, compare=False, repr=False)

    def __post_init__(self):
        if not (math.isfinite(self.length) and self.length > 0.0):
            raise ValueError(f"arc length must be positive, got {self.length}")
        if not math.isfinite(self.curvature) or abs(self.curvature) > self.curvature_bound + 1e-12:
            raise ValueError(
                f"|curvature| {self.curvature} exceeds bound {self.curvature_bound}"
            )

    @property
    def is_straight(self) -> bool:
        return abs(self.curvature) < _STRAIGHT_EPS

    def heading_at(self, s):
        return self.start.heading + self.curvature * np.asarray(s, dtype=float)

    def _frame(self, s):
        """Centreline ``x, y`` and heading ``sin, cos`` at ``s``."""
        s = np.asarray(s, dtype=float)
        x0, y0, h0 = self.start.x, self.start.y, self.start.heading
        if self.is_straight:
            c, sn = math.cos(h0), math.sin(h0)
            return x0 + s * c, y0 + s * sn, np.full_like(s, sn), np.full_like(s, c)
        k = self.curvature
        h = h0 + k * s
        sn, c = np.sin(h), np.cos(h)
        # chord form, free of cancellation for small curvature
        half = h0 + 0.5 * k * s
        chord = 2.0 * np.sin(0.5 * k * s) / k
        return x0 + chord * np.cos(half), y0 + chord * np.sin(half), sn, c

    def centre_at(self, s):
        """Centreline ``(x, y)`` at arc length ``s`` (array friendly)."""
        x, y, _, _ = self._frame(s)
        return x, y

    def points_at(self, s, l):
        """World ``(x, y)`` of the point at arc length ``s`` and lateral offset ``l``."""
        cx, cy, sn, c = self._frame(s)
        l = np.asarray(l, dtype=float)
        return cx - l * sn, cy + l * c

    def pose_at(self, s: float) -> Pose2D:
        x, y = self.centre_at(s)
        return Pose2D(float(x), float(y), float(self.heading_at(s)))

    @property
    def end(self) -> Pose2D:
        return self.pose_at(self.length)

    def reversed(self) -> "TrajectoryArc":
        """The same centreline driven from its end back to its start."""
        e = self.end
        return TrajectoryArc(
            Pose2D(e.x, e.y, e.heading + math.pi), -self.curvature, self.length, self.curvature_bound
        )

    def frame_coordinates(self, x, y):
        """Project world points onto the arc: returns ``(s, l)`` arrays."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        x0, y0, h0 = self.start.x, self.start.y, self.start.heading
        c, sn = math.cos(h0), math.sin(h0)
        dx, dy = x - x0, y - y0
        u, v = dx * c + dy * sn, -dx * sn + dy * c
        if self.is_straight:
            return u, v
        k = self.curvature
        # turning centre at (0, 1/k) in the start frame; both forms stay exact as k -> 0
        dphi = np.arctan2(k * u, 1.0 - k * v)
        lateral = (2.0 * v - k * (u * u + v * v)) / (1.0 + np.hypot(k * u, k * v - 1.0))
        return np.asarray(dphi / k), lateral
