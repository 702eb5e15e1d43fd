"""Terrain: elevation grids, synthetic generators, point-cloud sampling and DEM I/O.

Grid convention: ``elevations[r, c]`` is the height of node
``(origin_x + c * cell_size, origin_y + r * cell_size)``. Row 0 is therefore the
southern (lowest ``y``) row, and the first body line of a DEM file is row 0.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.ndimage import gaussian_filter
from scipy.spatial import cKDTree

POINT_DENSITY = 256.0  # pts/m^2 assumed from on-board perception


class DEMFormatError(ValueError):
    """Raised for malformed DEM text files; the message names the offending line."""


@dataclass(frozen=True, eq=False)
class DEM:
    n_cols: int
    n_rows: int
    cell_size: float
    origin_x: float
    origin_y: float
    elevations: np.ndarray

    def __post_init__(self):
        z = np.array(self.elevations, dtype=np.float64)
        if z.size != self.n_cols * self.n_rows:
            raise ValueError(
                f"{self.n_rows}x{self.n_cols} grid needs {self.n_rows * self.n_cols} values, got {z.size}"
            )
        if self.n_cols < 2 or self.n_rows < 2:
            raise ValueError("a DEM needs at least 2x2 nodes")
        if not self.cell_size > 0:
            raise ValueError(f"cell_size must be positive, got {self.cell_size}")
        if not np.all(np.isfinite(z)):
            raise ValueError("DEM elevations must be finite")
        z = z.reshape(self.n_rows, self.n_cols)
        z.flags.writeable = False
        object.__setattr__(self, "elevations", z)

    def __eq__(self, other):
        if not isinstance(other, DEM):
            return NotImplemented
        return (
            (self.n_cols, self.n_rows, self.cell_size, self.origin_x, self.origin_y)
            == (other.n_cols, other.n_rows, other.cell_size, other.origin_x, other.origin_y)
            and np.array_equal(self.elevations, other.elevations)
        )

    @property
    def x_max(self) -> float:
        return self.origin_x + (self.n_cols - 1) * self.cell_size

    @property
    def y_max(self) -> float:
        return self.origin_y + (self.n_rows - 1) * self.cell_size

    @property
    def area(self) -> float:
        return (self.x_max - self.origin_x) * (self.y_max - self.origin_y)

    def node_coordinates(self):
        xs = self.origin_x + self.cell_size * np.arange(self.n_cols)
        ys = self.origin_y + self.cell_size * np.arange(self.n_rows)
        return np.meshgrid(xs, ys)

    def contains(self, x, y, margin: float = 0.0):
        x = np.asarray(x)
        y = np.asarray(y)
        return (
            (x >= self.origin_x + margin)
            & (x <= self.x_max - margin)
            & (y >= self.origin_y + margin)
            & (y <= self.y_max - margin)
        )

    def elevation_at(self, x, y):
        """Bilinear interpolation; exact at grid nodes. Points outside are clamped."""
        fx = (np.asarray(x, dtype=float) - self.origin_x) / self.cell_size
        fy = (np.asarray(y, dtype=float) - self.origin_y) / self.cell_size
        fx = np.clip(fx, 0.0, self.n_cols - 1)
        fy = np.clip(fy, 0.0, self.n_rows - 1)
        i = np.minimum(np.floor(fx).astype(np.intp), self.n_cols - 2)
        j = np.minimum(np.floor(fy).astype(np.intp), self.n_rows - 2)
        tx = fx - i
        ty = fy - j
        z = self.elevations.ravel()
        k = j * self.n_cols + i
        z00 = z[k]
        z01 = z[k + 1]
        z10 = z[k + self.n_cols]
        z11 = z[k + self.n_cols + 1]
        return (1.0 - ty) * ((1.0 - tx) * z00 + tx * z01) + ty * ((1.0 - tx) * z10 + tx * z11)

    def with_elevations(self, z) -> "DEM":
        return replace(self, elevations=np.asarray(z, dtype=np.float64))


@dataclass(eq=False)
class PointCloud:
    """Unordered ``(N, 3)`` array of points. A 2D KD-tree over ``(x, y)`` is built on demand."""

    points: np.ndarray
    _tree: cKDTree | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.size == 0:
            p = p.reshape(0, 3)
        if p.ndim != 2 or p.shape[1] != 3:
            raise ValueError(f"points must have shape (N, 3), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("point coordinates must be finite")
        p.flags.writeable = False
        self.points = p

    def __len__(self):
        return len(self.points)

    def query_disc(self, x: float, y: float, radius: float) -> np.ndarray:
        """Indices of points within ``radius`` of ``(x, y)`` in the horizontal plane, sorted."""
        if self._tree is None:
            self._tree = cKDTree(self.points[:, :2])
        idx = self._tree.query_ball_point([x, y], radius)
        return np.sort(np.asarray(idx, dtype=np.intp))

    def subset(self, idx) -> "PointCloud":
        return PointCloud(self.points[idx])


@dataclass(frozen=True)
class TerrainGenConfig:
    seed: int = 0
    extent_x: float = 10.0
    extent_y: float = 10.0
    cell_size: float = 0.05
    roughness_amplitude: float = 0.0
    correlation_length: float = 0.2
    bump_density: float = 0.0
    bump_radius: float = 0.25
    bump_height: float = 0.05
    pitch_deg: float = 0.0
    roll_deg: float = 0.0

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if not (self.extent_x > 0 and self.extent_y > 0):
            raise ValueError("extents must be positive")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")
        if self.roughness_amplitude < 0:
            raise ValueError("roughness_amplitude must be >= 0")
        if self.bump_density < 0:
            raise ValueError("bump_density must be >= 0")
        if self.bump_density > 0:
            if not self.bump_radius > 0:
                raise ValueError("bump_radius must be positive when bumps are requested")
            if not 0 <= self.bump_height <= self.bump_radius:
                raise ValueError("bump_height must lie in [0, bump_radius] for a spherical cap")

    def grid_shape(self) -> tuple[int, int]:
        return (
            int(round(self.extent_y / self.cell_size)) + 1,
            int(round(self.extent_x / self.cell_size)) + 1,
        )


def _empty_dem(cfg: TerrainGenConfig, z=None) -> DEM:
    n_rows, n_cols = cfg.grid_shape()
    if z is None:
        z = np.zeros((n_rows, n_cols))
    return DEM(n_cols, n_rows, cfg.cell_size, 0.0, 0.0, z)


def make_ramp(pitch_deg: float, roll_deg: float, cfg: TerrainGenConfig = TerrainGenConfig()) -> DEM:
    """Planar ramp ``z = x tan(pitch) + y tan(roll)`` relative to the grid origin."""
    if not (math.isfinite(pitch_deg) and math.isfinite(roll_deg)):
        raise ValueError("ramp angles must be finite")
    if abs(pitch_deg) >= 90 or abs(roll_deg) >= 90:
        raise ValueError("ramp angles must lie strictly within (-90, 90) degrees")
    dem = _empty_dem(cfg)
    xs, ys = dem.node_coordinates()
    z = (xs - dem.origin_x) * math.tan(math.radians(pitch_deg)) + (ys - dem.origin_y) * math.tan(
        math.radians(roll_deg)
    )
    return dem.with_elevations(z)


def make_rough(cfg: TerrainGenConfig) -> DEM:
    """Gaussian-filtered white noise rescaled to an RMS of ``roughness_amplitude``."""
    if not cfg.correlation_length > 0:
        raise ValueError("correlation_length must be positive")
    rng = np.random.default_rng(cfg.seed)
    shape = cfg.grid_shape()
    if cfg.roughness_amplitude == 0:
        return _empty_dem(cfg)
    noise = rng.standard_normal(shape)
    z = gaussian_filter(noise, sigma=cfg.correlation_length / cfg.cell_size, mode="wrap")
    z -= z.mean()
    z *= cfg.roughness_amplitude / math.sqrt(np.mean(z * z))
    return _empty_dem(cfg, z)


def cap_height(r, radius: float, height: float):
    """Height of a spherical cap of base ``radius`` and apex ``height`` at radial distance ``r``."""
    r = np.asarray(r, dtype=float)
    if height <= 0:
        return np.zeros_like(r)
    rho = (radius * radius + height * height) / (2.0 * height)
    inside = r <= radius
    z = np.sqrt(np.maximum(rho * rho - r * r, 0.0)) - (rho - height)
    return np.where(inside, np.maximum(z, 0.0), 0.0)


def place_bumps(dem: DEM, centres, radius: float, height: float) -> DEM:
    """Add caps at explicit ``(x, y)`` centres; overlapping caps combine by pointwise max."""
    centres = np.asarray(centres, dtype=float).reshape(-1, 2)
    if len(centres) == 0:
        return dem
    xs, ys = dem.node_coordinates()
    caps = np.zeros_like(xs)
    reach = int(math.ceil(radius / dem.cell_size)) + 1
    for cx, cy in centres:
        ci = int(round((cx - dem.origin_x) / dem.cell_size))
        cj = int(round((cy - dem.origin_y) / dem.cell_size))
        i0, i1 = max(ci - reach, 0), min(ci + reach + 1, dem.n_cols)
        j0, j1 = max(cj - reach, 0), min(cj + reach + 1, dem.n_rows)
        if i0 >= i1 or j0 >= j1:
            continue
        r = np.hypot(xs[j0:j1, i0:i1] - cx, ys[j0:j1, i0:i1] - cy)
        np.maximum(caps[j0:j1, i0:i1], cap_height(r, radius, height), out=caps[j0:j1, i0:i1])
    return dem.with_elevations(dem.elevations + caps)


def add_bumps(dem: DEM, cfg: TerrainGenConfig) -> DEM:
    """Scatter caps with a Poisson count of ``bump_density * area`` at uniform positions."""
    if cfg.bump_density == 0:
        return dem
    rng = np.random.default_rng([cfg.seed, 0xB0])
    n = rng.poisson(cfg.bump_density * dem.area)
    cx = rng.uniform(dem.origin_x, dem.x_max, n)
    cy = rng.uniform(dem.origin_y, dem.y_max, n)
    return place_bumps(dem, np.column_stack([cx, cy]), cfg.bump_radius, cfg.bump_height)


def sample_point_cloud(dem: DEM, density: float = POINT_DENSITY, seed: int = 0) -> PointCloud:
    """Uniformly scattered points with heights bilinearly interpolated from ``dem``."""
    if not density > 0:
        raise ValueError("density must be positive")
    if dem.area <= 0:
        raise ValueError("cannot sample an empty DEM")
    rng = np.random.default_rng([seed, 0x9C])
    n = rng.poisson(density * dem.area)
    x = rng.uniform(dem.origin_x, dem.x_max, n)
    y = rng.uniform(dem.origin_y, dem.y_max, n)
    return PointCloud(np.column_stack([x, y, dem.elevation_at(x, y)]))


# --- presets -----------------------------------------------------------------

PRESETS = ("flat", "ramp", "rough", "bumpy")


def make_rough_terrain(seed: int, extent: float = 12.0, cell_size: float = 0.05) -> DEM:
    """Unstructured test terrain: gentle undulation, patchy fine roughness and scattered bumps.

    Fine roughness is modulated by a slowly varying mask so that smooth and
    rough regions coexist, which is what makes detours energetically meaningful.
    """
    base = dict(extent_x=extent, extent_y=extent, cell_size=cell_size)
    ss = np.random.SeedSequence(seed).generate_state(4)
    swell = make_rough(
        TerrainGenConfig(seed=int(ss[0]), roughness_amplitude=0.10, correlation_length=1.2, **base)
    )
    fine = make_rough(
        TerrainGenConfig(seed=int(ss[1]), roughness_amplitude=0.02, correlation_length=0.12, **base)
    )
    mask = make_rough(
        TerrainGenConfig(seed=int(ss[2]), roughness_amplitude=1.0, correlation_length=1.5, **base)
    )
    weight = np.clip(1.0 + 1.2 * mask.elevations, 0.0, 2.2)
    dem = swell.with_elevations(swell.elevations + weight * fine.elevations)
    bumps = TerrainGenConfig(
        seed=int(ss[3]), bump_density=0.12, bump_radius=0.25, bump_height=0.05, **base
    )
    return add_bumps(dem, bumps)


def make_preset(
    name: str,
    seed: int = 0,
    extent: float = 12.0,
    cell_size: float = 0.05,
    pitch_deg: float = 5.0,
    roll_deg: float = 0.0,
) -> DEM:
    cfg = TerrainGenConfig(seed=seed, extent_x=extent, extent_y=extent, cell_size=cell_size)
    if name == "flat":
        return _empty_dem(cfg)
    if name == "ramp":
        return make_ramp(pitch_deg, roll_deg, cfg)
    if name == "rough":
        return make_rough_terrain(seed, extent, cell_size)
    if name == "bumpy":
        flat = _empty_dem(cfg)
        return add_bumps(flat, replace(cfg, bump_density=0.3, bump_radius=0.25, bump_height=0.06))
    raise ValueError(f"unknown preset {name!r}; expected one of {PRESETS}")


# --- DEM text format -----------------------------------------------------------

_HEADER = ("ncols", "nrows", "cellsize", "xll", "yll")


def save_dem(dem: DEM, path) -> None:
    """Write ``dem`` as a header plus row-major body using shortest round-trip decimals."""
    lines = [
        f"ncols {dem.n_cols}",
        f"nrows {dem.n_rows}",
        f"cellsize {dem.cell_size!r}",
        f"xll {dem.origin_x!r}",
        f"yll {dem.origin_y!r}",
    ]
    for row in dem.elevations:
        lines.append(" ".join(repr(float(v)) for v in row))
    with open(os.fspath(path), "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_dem(path) -> DEM:
    with open(os.fspath(path), encoding="ascii") as fh:
        lines = fh.read().splitlines()
    values: dict[str, str] = {}
    for k, key in enumerate(_HEADER):
        if k >= len(lines):
            raise DEMFormatError(f"line {k + 1}: missing header field {key!r}")
        parts = lines[k].split()
        if len(parts) != 2 or parts[0].lower() != key:
            raise DEMFormatError(f"line {k + 1}: expected '{key} <value>', got {lines[k]!r}")
        values[key] = parts[1]
    try:
        n_cols = int(values["ncols"])
        n_rows = int(values["nrows"])
    except ValueError as exc:
        raise DEMFormatError(f"line 1-2: grid dimensions must be integers ({exc})") from None
    floats = {}
    for k, key in enumerate(_HEADER[2:], start=3):
        try:
            floats[key] = float(values[key])
        except ValueError:
            raise DEMFormatError(f"line {k}: {key} is not a number: {values[key]!r}") from None
    if n_cols < 2 or n_rows < 2:
        raise DEMFormatError("line 1-2: a DEM needs at least 2x2 nodes")
    if not floats["cellsize"] > 0:
        raise DEMFormatError("line 3: cellsize must be positive")
    body = [ln for ln in enumerate(lines[5:], start=6) if ln[1].strip()]
    if len(body) != n_rows:
        raise DEMFormatError(
            f"line {6 + len(body) if len(body) < n_rows else body[n_rows][0]}: "
            f"header declares {n_rows} rows, body has {len(body)}"
        )
    z = np.empty((n_rows, n_cols))
    for r, (lineno, text) in enumerate(body):
        parts = text.split()
        if len(parts) != n_cols:
            raise DEMFormatError(f"line {lineno}: expected {n_cols} values, got {len(parts)}")
        for c, tok in enumerate(parts):
            try:
                v = float(tok)
            except ValueError:
                raise DEMFormatError(f"line {lineno}: non-numeric cell {tok!r}") from None
            if not math.isfinite(v):
                raise DEMFormatError(f"line {lineno}: non-finite cell {tok!r}")
            z[r, c] = v
    return DEM(n_cols, n_rows, floats["cellsize"], floats["xll"], floats["yll"], z)
