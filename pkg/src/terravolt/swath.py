"""From a point cloud and a trajectory to the 32x8 terrain patch fed to the estimators.

Pipeline: swath extraction -> safety check -> 2D voxel grid laid out in the
arc frame (rows along the path, columns across it) -> keep the two lateral
wheel bands and express heights relative to the first row.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Pose2D, TrajectoryArc  # noqa: F401  (re-exported)
from .terrain import PointCloud

CELL = 0.0625
N_ROWS = 32
N_FULL_COLS = 16
BAND_COLS = 4
SWATH_LENGTH = N_ROWS * CELL  # 2.0 m
SWATH_WIDTH = N_FULL_COLS * CELL  # 1.0 m, the wheel track


@dataclass(frozen=True)
class SafetyThresholds:
    pitch_max_deg: float = 20.0
    roll_max_deg: float = 15.0
    residual_max: float = 0.10


@dataclass(frozen=True)
class SafetyReport:
    pitch_deg: float
    roll_deg: float
    residual: float
    traversable: bool
    reason: str = ""


class UntraversableError(Exception):
    """The trajectory failed the safety check or lacks terrain data."""

    def __init__(self, report: SafetyReport):
        super().__init__(report.reason or "untraversable")
        self.report = report


class EmptyColumnError(UntraversableError):
    pass


@dataclass(frozen=True, eq=False)
class TerrainPatch:
    values: np.ndarray
    row_spacing: float = CELL
    band_width_cells: int = BAND_COLS

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.shape != (N_ROWS, 2 * BAND_COLS):
            raise ValueError(f"patch must be {N_ROWS}x{2 * BAND_COLS}, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("patch values must be finite")
        if abs(v[0].mean()) > 1e-9:
            raise ValueError("patch row 0 must have zero mean (relative elevations)")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        return isinstance(other, TerrainPatch) and np.array_equal(self.values, other.values)


def _window_mask(s, l, width, length):
    return (s >= 0.0) & (s <= length) & (np.abs(l) <= width / 2.0)


def swath_extract(
    cloud: PointCloud, arc: TrajectoryArc, swath_width: float = SWATH_WIDTH,
    swath_length: float = SWATH_LENGTH,
) -> PointCloud:
    """Points under the rover footprint along ``arc`` (extended to ``swath_length``)."""
    if not swath_width > 0:
        raise ValueError("swath_width must be positive")
    cx, cy = arc.centre_at(swath_length / 2.0)
    # every window point is within half the length (chord <= arc) plus half the width
    idx = cloud.query_disc(float(cx), float(cy), swath_length / 2.0 + swath_width / 2.0 + 1e-9)
    pts = cloud.points[idx]
    s, l = arc.frame_coordinates(pts[:, 0], pts[:, 1])
    return PointCloud(pts[_window_mask(s, l, swath_width, swath_length)])


def safety_check(
    points: PointCloud, arc: TrajectoryArc, thresholds: SafetyThresholds = SafetyThresholds()
) -> SafetyReport:
    """Least-squares plane in the start-pose frame; pitch along, roll across the heading."""
    p = points.points
    if len(p) < 3:
        return SafetyReport(math.nan, math.nan, math.nan, False, "insufficient data")
    h = arc.start.heading
    dx, dy = p[:, 0] - arc.start.x, p[:, 1] - arc.start.y
    u = dx * math.cos(h) + dy * math.sin(h)
    v = -dx * math.sin(h) + dy * math.cos(h)
    A = np.column_stack([np.ones_like(u), u, v])
    coef, _, rank, _ = np.linalg.lstsq(A, p[:, 2], rcond=None)
    if rank < 3:
        return SafetyReport(math.nan, math.nan, math.nan, False, "insufficient data")
    residual = float(np.max(np.abs(p[:, 2] - A @ coef)))
    pitch = math.degrees(math.atan(coef[1]))
    roll = math.degrees(math.atan(coef[2]))
    reasons = []
    if abs(pitch) > thresholds.pitch_max_deg:
        reasons.append("pitch")
    if abs(roll) > thresholds.roll_max_deg:
        reasons.append("roll")
    if residual > thresholds.residual_max:
        reasons.append("residual")
    return SafetyReport(pitch, roll, residual, not reasons, ",".join(reasons))


def rasterize(points: PointCloud, arc: TrajectoryArc) -> np.ndarray:
    """32x16 grid of mean heights; empty cells filled by linear interpolation along each column."""
    p = points.points
    s, l = arc.frame_coordinates(p[:, 0], p[:, 1])
    keep = _window_mask(s, l, SWATH_WIDTH, SWATH_LENGTH)
    s, l, z = s[keep], l[keep], p[keep, 2]
    row = np.clip(np.floor(s / CELL).astype(np.intp), 0, N_ROWS - 1)
    col = np.clip(np.floor((l + SWATH_WIDTH / 2.0) / CELL).astype(np.intp), 0, N_FULL_COLS - 1)
    flat = row * N_FULL_COLS + col
    n_cells = N_ROWS * N_FULL_COLS
    count = np.bincount(flat, minlength=n_cells).reshape(N_ROWS, N_FULL_COLS)
    total = np.bincount(flat, weights=z, minlength=n_cells).reshape(N_ROWS, N_FULL_COLS)
    grid = np.empty((N_ROWS, N_FULL_COLS))
    rows = np.arange(N_ROWS, dtype=float)
    for c in range(N_FULL_COLS):
        filled = count[:, c] > 0
        if not filled.any():
            raise EmptyColumnError(
                SafetyReport(math.nan, math.nan, math.nan, False, f"empty column {c}")
            )
        vals = total[filled, c] / count[filled, c]
        grid[:, c] = np.interp(rows, rows[filled], vals)
        grid[filled, c] = vals
    return grid


def trim_and_normalize(grid: np.ndarray) -> TerrainPatch:
    """Keep the outer 4 columns per side and subtract the mean of the first row."""
    grid = np.asarray(grid, dtype=float)
    if grid.shape != (N_ROWS, N_FULL_COLS):
        raise ValueError(f"grid must be {N_ROWS}x{N_FULL_COLS}, got {grid.shape}")
    bands = np.concatenate([grid[:, :BAND_COLS], grid[:, N_FULL_COLS - BAND_COLS:]], axis=1)
    return TerrainPatch(bands - bands[0].mean())


def preprocess(
    cloud: PointCloud, arc: TrajectoryArc, thresholds: SafetyThresholds = SafetyThresholds()
) -> TerrainPatch:
    """Full pipeline. Raises :class:`UntraversableError` when the arc is rejected."""
    pts = swath_extract(cloud, arc)
    report = safety_check(pts, arc, thresholds)
    if not report.traversable:
        raise UntraversableError(report)
    return trim_and_normalize(rasterize(pts, arc))
