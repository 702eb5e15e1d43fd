"""End-to-end workflows: dataset generation and files, evaluation tables, planner comparison.

Parallel work is split into tasks whose seeds are spawned from the master seed
by task index, and results are gathered in task order, so outputs do not
depend on the number of worker processes.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import logging
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .estimators import (
    Conv1DEstimator, DynSimEstimator, RampModelEstimator, RampModelParams,
    ramp_model_estimate,
)
from .geometry import Pose2D, TrajectoryArc
from .nn.metrics import Metrics, metrics
from .nn.network import EnergyNetWeights, predict
from .planner import EdgeModel, LatticeConfig, NoPathError, astar, curvatures, execute_plan
from .powertrain import EnergyLabel, RoverParams, footprint_in_bounds, simulate_traverse
from .swath import N_ROWS, SafetyThresholds, TerrainPatch, UntraversableError, preprocess
from .terrain import DEM, POINT_DENSITY, TerrainGenConfig, make_ramp, sample_point_cloud

log = logging.getLogger(__name__)

DATASET_MAGIC = "terravolt-dataset v1"
PATCH_SIZE = 256
CHUNK = 250
MIN_ACCEPTANCE = 0.01
MIN_ATTEMPTS = 200


class DatasetError(ValueError):
    """Malformed dataset file or a generation run that cannot make progress."""


@dataclass(frozen=True)
class DatasetRecord:
    patch: TerrainPatch
    label: EnergyLabel
    terrain_id: int
    curvature: float
    start: Pose2D | None  # None for records read from the short four-field layout
    length: float = 1.375

    @property
    def arc(self) -> TrajectoryArc:
        if self.start is None:
            raise ValueError("record carries no start pose")
        return TrajectoryArc(self.start, self.curvature, self.length)


# --- dataset files -----------------------------------------------------------------

def format_record(r: DatasetRecord) -> str:
    vals = [repr(float(v)) for v in r.patch.values.ravel()]
    vals += [repr(r.label.e_c), repr(r.label.e_r), str(r.terrain_id), repr(r.curvature)]
    if r.start is not None:
        vals += [repr(r.start.x), repr(r.start.y), repr(r.start.heading), repr(r.length)]
    return " ".join(vals)


def write_dataset(records, path) -> None:
    records = list(records)
    with open(os.fspath(path), "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"{DATASET_MAGIC} n={len(records)}\n")
        for r in records:
            fh.write(format_record(r) + "\n")


def read_dataset(path) -> list[DatasetRecord]:
    with open(os.fspath(path), encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetError("line 1: empty dataset file")
    head = lines[0].split()
    if len(head) != 3 or " ".join(head[:2]) != DATASET_MAGIC or not head[2].startswith("n="):
        raise DatasetError(f"line 1: expected '{DATASET_MAGIC} n=<count>', got {lines[0]!r}")
    try:
        n = int(head[2][2:])
    except ValueError:
        raise DatasetError(f"line 1: bad record count {head[2]!r}") from None
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != n:
        raise DatasetError(f"header declares {n} records, file holds {len(body)}")
    out = []
    for lineno, ln in enumerate(body, start=2):
        tok = ln.split()
        if len(tok) not in (PATCH_SIZE + 4, PATCH_SIZE + 8):
            raise DatasetError(f"line {lineno}: expected {PATCH_SIZE + 8} fields, got {len(tok)}")
        try:
            v = np.array([float(t) for t in tok[:PATCH_SIZE]]).reshape(N_ROWS, -1)
            e_c, e_r = float(tok[PATCH_SIZE]), float(tok[PATCH_SIZE + 1])
            tid, kappa = int(tok[PATCH_SIZE + 2]), float(tok[PATCH_SIZE + 3])
            if len(tok) == PATCH_SIZE + 8:
                x, y, h, length = (float(t) for t in tok[PATCH_SIZE + 4:])
                start = Pose2D(x, y, h)
            else:
                start, length = None, 1.375
            out.append(DatasetRecord(TerrainPatch(v), EnergyLabel(e_c, e_r), tid, kappa, start, length))
        except ValueError as exc:
            raise DatasetError(f"line {lineno}: {exc}") from None
    return out


def as_arrays(records) -> tuple[np.ndarray, np.ndarray]:
    """Stack records into ``(N, 32, 8)`` patches and ``(N, 2)`` ``(e_c, e_r)`` targets."""
    x = np.stack([r.patch.values for r in records])
    y = np.array([[r.label.e_c, r.label.e_r] for r in records])
    return x, y


# --- generation --------------------------------------------------------------------

def _task_sizes(n: int, chunk: int = CHUNK) -> list[int]:
    return [min(chunk, n - i) for i in range(0, n, chunk)]


def _generate_chunk(args):
    terrains, clouds_seed, n, seed_seq, rover, thresholds, lattice = args
    clouds = [
        sample_point_cloud(dem, POINT_DENSITY, seed)
        for dem, seed in zip(terrains, clouds_seed)
    ]
    kappas = curvatures(lattice)
    bound = max(abs(lattice.curvature_min), abs(lattice.curvature_max))
    rng = np.random.default_rng(seed_seq)
    out, attempts = [], 0
    while len(out) < n:
        tid = int(rng.integers(len(terrains)))
        dem = terrains[tid]
        for _ in range(1000):
            pose = Pose2D(
                float(rng.uniform(dem.origin_x, dem.x_max)),
                float(rng.uniform(dem.origin_y, dem.y_max)),
                float(rng.uniform(-math.pi, math.pi)),
            )
            kappa = float(kappas[rng.integers(len(kappas))])
            arc = TrajectoryArc(pose, kappa, lattice.primitive_length, bound)
            if footprint_in_bounds(dem, arc, rover):
                break
        else:
            raise DatasetError(f"terrain {tid} is too small to hold a single traverse")
        attempts += 1
        try:
            patch = preprocess(clouds[tid], arc, thresholds)
        except UntraversableError:
            patch = None
        if patch is not None:
            _, label = simulate_traverse(dem, arc, rover)
            out.append(DatasetRecord(patch, label, tid, kappa, pose, arc.length))
        if attempts >= MIN_ATTEMPTS and len(out) < MIN_ACCEPTANCE * attempts:
            raise DatasetError(
                f"terrain too hostile: {len(out)} of {attempts} traverses passed the safety check"
            )
    return out


def generate_dataset(
    terrains, n_samples: int, rover: RoverParams = RoverParams(),
    thresholds: SafetyThresholds = SafetyThresholds(), seed: int = 0, threads: int = 1,
    lattice: LatticeConfig = LatticeConfig(),
) -> list[DatasetRecord]:
    """Random start pose and primitive, prune unsafe swaths, label the rest by simulation.

    Records come back in task order, so the result is the same for any ``threads``.
    Raises :class:`DatasetError` when fewer than 1 % of attempts pass.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    terrains = list(terrains)
    if not terrains:
        raise ValueError("at least one terrain is required")
    root = np.random.SeedSequence(seed)
    cloud_ss, task_ss = root.spawn(2)
    cloud_seeds = [int(s.generate_state(1)[0]) for s in cloud_ss.spawn(len(terrains))]
    sizes = _task_sizes(n_samples)
    tasks = [
        (terrains, cloud_seeds, n, ss, rover, thresholds, lattice)
        for n, ss in zip(sizes, task_ss.spawn(len(sizes)))
    ]
    return [r for chunk in _map(_generate_chunk, tasks, threads) for r in chunk]


def _map(fn, tasks, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, tasks))


def ramp_dataset(
    n_samples: int, seed: int = 0, pitch_range=(-20.0, 20.0), roll_range=(-15.0, 15.0),
    rover: RoverParams = RoverParams(), thresholds: SafetyThresholds = SafetyThresholds(),
    lattice: LatticeConfig = LatticeConfig(),
) -> tuple[list[DatasetRecord], list[DEM]]:
    """Traverses over perfectly planar ramps with random pitch, roll and primitive.

    Each record gets its own ramp (terrain id = record index) and starts facing
    the ramp's x axis, so pitch and roll are the rover-frame inclinations at the
    start pose. Returns ``(records, terrains)``.
    """
    if n_samples <= 0:
        raise ValueError("n_samples must be positive")
    extent = 5.0
    cfg = TerrainGenConfig(extent_x=extent, extent_y=extent, cell_size=0.1)
    kappas = curvatures(lattice)
    bound = max(abs(lattice.curvature_min), abs(lattice.curvature_max))
    ss = np.random.SeedSequence(seed)
    rng = np.random.default_rng(ss)
    start = Pose2D(1.5, extent / 2.0, 0.0)
    records, terrains = [], []
    attempts = 0
    while len(records) < n_samples:
        attempts += 1
        if attempts >= MIN_ATTEMPTS and len(records) < MIN_ACCEPTANCE * attempts:
            raise DatasetError("ramp ranges leave nothing traversable")
        pitch = float(rng.uniform(*pitch_range))
        roll = float(rng.uniform(*roll_range))
        kappa = float(kappas[rng.integers(len(kappas))])
        dem = make_ramp(pitch, roll, cfg)
        cloud = sample_point_cloud(dem, POINT_DENSITY, int(rng.integers(2**32)))
        arc = TrajectoryArc(start, kappa, lattice.primitive_length, bound)
        try:
            patch = preprocess(cloud, arc, thresholds)
        except UntraversableError:
            continue
        _, label = simulate_traverse(dem, arc, rover)
        records.append(DatasetRecord(patch, label, len(terrains), kappa, start, arc.length))
        terrains.append(dem)
    return records, terrains


def split_dataset(records, validation_fraction: float, seed: int = 0):
    """Seeded random partition into ``(train, validation)``; order is preserved within each part."""
    records = list(records)
    if not records:
        raise ValueError("cannot split an empty dataset")
    if not 0 < validation_fraction < 1:
        raise ValueError("validation_fraction must lie in (0, 1)")
    n_val = int(round(len(records) * validation_fraction))
    val = set(np.random.default_rng(seed).permutation(len(records))[:n_val].tolist())
    train = [r for i, r in enumerate(records) if i not in val]
    valid = [r for i, r in enumerate(records) if i in val]
    return train, valid


# --- evaluation --------------------------------------------------------------------

COMPONENTS = ("consumption", "recovery", "total")


@dataclass(frozen=True)
class EvalRow:
    estimator: str
    component: str
    metrics: Metrics


def dataset_predictions(records, weights: EnergyNetWeights | None = None,
                        ramp_params: RampModelParams | None = None, terrains=None,
                        rover: RoverParams = RoverParams()) -> dict[str, np.ndarray]:
    """``(N, 2)`` ``(e_c, e_r)`` predictions per estimator, keyed by estimator name.

    DynSim needs the source ``terrains`` (indexed by record terrain id) and the
    start pose stored in each record.
    """
    records = list(records)
    out = {}
    if ramp_params is not None:
        out[RampModelEstimator.name] = np.array([
            [e.e_c, e.e_r]
            for e in (ramp_model_estimate(r.patch, r.length, ramp_params, rover.wheelbase / 2.0) for r in records)
        ])
    if weights is not None:
        x, _ = as_arrays(records)
        out[Conv1DEstimator.name] = np.maximum(predict(weights, x), 0.0)
    if terrains is not None:
        rows = []
        for r in records:
            _, lab = simulate_traverse(terrains[r.terrain_id], r.arc, rover)
            rows.append([lab.e_c, lab.e_r])
        out[DynSimEstimator.name] = np.array(rows)
    return out


def evaluate(weights, ramp_params, records, terrains=None, rover: RoverParams = RoverParams()):
    """Metrics per estimator for consumption, recovery and total (net) energy."""
    records = list(records)
    if not records:
        raise ValueError("cannot evaluate on an empty dataset")
    _, y = as_arrays(records)
    truth = {"consumption": y[:, 0], "recovery": y[:, 1], "total": y[:, 0] - y[:, 1]}
    rows = []
    for name, p in dataset_predictions(records, weights, ramp_params, terrains, rover).items():
        pred = {"consumption": p[:, 0], "recovery": p[:, 1], "total": p[:, 0] - p[:, 1]}
        for comp in COMPONENTS:
            rows.append(EvalRow(name, comp, metrics(pred[comp], truth[comp])))
    return rows


def eval_table(rows) -> tuple[list[str], list[list[str]]]:
    header = ["estimator", "component", "mae", "mse", "r2"]
    body = [
        [r.estimator, r.component, f"{r.metrics.mae:.6g}", f"{r.metrics.mse:.6g}", f"{r.metrics.r2:.6f}"]
        for r in rows
    ]
    return header, body


def render_table(header, body, as_csv: bool = False) -> str:
    """Human-aligned text (right-aligned numbers) or CSV."""
    if as_csv:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        w.writerows(body)
        return buf.getvalue()
    widths = [max(len(str(row[i])) for row in [header, *body]) for i in range(len(header))]
    lines = []
    for row in [header, *body]:
        cells = [str(c).ljust(w) if i == 0 else str(c).rjust(w) for i, (c, w) in enumerate(zip(row, widths))]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


# --- planner comparison ------------------------------------------------------------

@dataclass
class ComparisonRow:
    estimator: str
    nodes_expanded: int
    avg_node_time: float
    total_time: float
    mse: float
    mae: float
    r2: float
    predicted_total: float
    real_total: float
    problems: int = 0
    no_path: tuple = ()
    edge_predicted: list = field(default_factory=list, repr=False)
    edge_real: list = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class Problem:
    dem: DEM
    start: Pose2D
    goal: Pose2D
    cloud_seed: int = 0


def _solve(args):
    """All estimators on one problem; returns per-estimator plans or ``None`` for NoPath."""
    problem, estimators, rover, cfg, thresholds, heuristic_params = args
    cloud = sample_point_cloud(problem.dem, POINT_DENSITY, problem.cloud_seed)
    out = {}
    for name, est in estimators.items():
        try:
            plan = astar(
                problem.start, problem.goal, problem.dem, est, cfg, thresholds,
                heuristic_params, cloud, rover,
            )
        except NoPathError as exc:
            log.info("%s: %s", name, exc)
            out[name] = None
            continue
        execute_plan(plan, problem.dem, rover)
        out[name] = plan
    return out


def compare_planners(
    problems, estimators: dict, rover: RoverParams = RoverParams(),
    cfg: LatticeConfig = LatticeConfig(), thresholds: SafetyThresholds = SafetyThresholds(),
    heuristic_params: RampModelParams | None = None, threads: int = 1,
) -> list[ComparisonRow]:
    """Plan every problem with every estimator and score the plans on the simulator.

    Problems on which any estimator finds no path are left out of every total;
    their indices are listed in ``ComparisonRow.no_path`` of the failing estimator.
    """
    problems = list(problems)
    if not problems:
        raise ValueError("at least one problem is required")
    tasks = [(p, estimators, rover, cfg, thresholds, heuristic_params) for p in problems]
    results = _map(_solve, tasks, threads)
    ok = [i for i, res in enumerate(results) if all(v is not None for v in res.values())]
    rows = []
    for name in estimators:
        failed = tuple(i for i, res in enumerate(results) if res[name] is None)
        plans = [results[i][name] for i in ok]
        pred_e = [e.net for p in plans for e in p.edge_predictions]
        real_e = [e for p in plans for e in p.edge_real]
        nodes = sum(p.nodes_expanded for p in plans)
        total_time = sum(p.wall_time for p in plans)
        if pred_e:
            m = metrics(pred_e, real_e)
        else:
            m = Metrics(math.nan, math.nan, math.nan)
        rows.append(ComparisonRow(
            name, nodes, total_time / nodes if nodes else math.nan, total_time,
            m.mse, m.mae, m.r2,
            float(sum(p.predicted_energy for p in plans)), float(sum(p.real_energy for p in plans)),
            len(plans), failed, pred_e, real_e,
        ))
    return rows


def comparison_table(rows, include_timing: bool = False):
    header = [
        "estimator", "problems", "nodes", "avg_node_time_s", "total_time_s",
        "mse", "mae", "r2", "predicted_total_J", "real_total_J", "no_path",
    ]

    def t(v):
        return f"{v:.6g}" if include_timing else "nan"

    body = [
        [
            r.estimator, str(r.problems), str(r.nodes_expanded), t(r.avg_node_time), t(r.total_time),
            f"{r.mse:.6g}", f"{r.mae:.6g}", f"{r.r2:.6f}", f"{r.predicted_total:.6f}",
            f"{r.real_total:.6f}", ";".join(map(str, r.no_path)) or "-",
        ]
        for r in rows
    ]
    return header, body


def random_problems(
    dem: DEM, n: int, seed: int = 0, min_distance: float = 3.0, max_distance: float = 5.0,
    rover: RoverParams = RoverParams(), cfg: LatticeConfig = LatticeConfig(),
    thresholds: SafetyThresholds = SafetyThresholds(), estimator=None,
) -> list[Problem]:
    """Start/goal pairs with the start traversable and the goal on the grid.

    A start counts as traversable when at least one primitive leaving it passes
    the bounds and safety checks. Goals keep one metre away from the grid edge.
    """
    rng = np.random.default_rng(seed)
    edges = EdgeModel(dem, estimator or RampModelEstimator(), cfg, thresholds, rover=rover, cloud_seed=seed)
    margin = 1.0
    out = []
    for _ in range(1000 * n):
        if len(out) == n:
            break
        start = Pose2D(
            float(rng.uniform(dem.origin_x + margin, dem.x_max - margin)),
            float(rng.uniform(dem.origin_y + margin, dem.y_max - margin)),
            float(rng.uniform(-math.pi, math.pi)),
        )
        d = float(rng.uniform(min_distance, max_distance))
        bearing = float(rng.uniform(-math.pi, math.pi))
        gx, gy = start.x + d * math.cos(bearing), start.y + d * math.sin(bearing)
        if not dem.contains(gx, gy, margin):
            continue
        if not edges.successors(start):
            continue
        out.append(Problem(dem, start, Pose2D(gx, gy, 0.0), seed))
    if len(out) < n:
        raise ValueError(f"could only place {len(out)} of {n} problems on this terrain")
    return out

