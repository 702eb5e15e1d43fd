"""State-lattice A* over constant-curvature primitives with pluggable edge-energy estimators.

Node priority is cost-so-far plus the straight-line energy heuristic. Lattice
states are deduplicated on a quantised key (x, y, heading sector) while the
stored poses stay continuous, so returned arc chains are exactly continuous.
"""

from __future__ import annotations

import heapq
import itertools
import math
import os
import time
from dataclasses import dataclass, field, fields

import numpy as np

from .estimators import EnergyEstimate, RampModelParams
from .geometry import MAX_CURVATURE, Pose2D, TrajectoryArc
from .powertrain import RoverParams, footprint_in_bounds, simulate_traverse
from .swath import SafetyThresholds, UntraversableError, preprocess
from .terrain import DEM, POINT_DENSITY, PointCloud, sample_point_cloud


@dataclass(frozen=True)
class LatticeConfig:
    primitive_length: float = 1.375
    curvature_min: float = -MAX_CURVATURE
    curvature_max: float = MAX_CURVATURE
    primitive_count: int = 9
    position_quantum: float = 0.1
    heading_sectors: int = 24
    goal_radius: float = 0.7
    max_expansions: int = 20000

    def __post_init__(self):
        if self.primitive_count < 1 or self.primitive_count % 2 == 0:
            raise ValueError("primitive_count must be odd so the straight primitive is included")
        if not (self.position_quantum > 0 and self.heading_sectors > 0 and self.goal_radius > 0):
            raise ValueError("lattice quanta must be positive")
        if not self.primitive_length > 0:
            raise ValueError("primitive_length must be positive")


@dataclass
class PlanResult:
    arcs: list
    predicted_energy: float
    real_energy: float | None = None
    nodes_expanded: int = 0
    wall_time: float = 0.0
    edge_predictions: list = field(default_factory=list)
    edge_real: list | None = None
    dequeued_priorities: list = field(default_factory=list, repr=False)


class NoPathError(RuntimeError):
    def __init__(self, reason: str, nodes_expanded: int, wall_time: float):
        super().__init__(f"no path: {reason} after {nodes_expanded} expansions")
        self.reason = reason
        self.nodes_expanded = nodes_expanded
        self.wall_time = wall_time


def curvatures(cfg: LatticeConfig = LatticeConfig()) -> np.ndarray:
    k = np.linspace(cfg.curvature_min, cfg.curvature_max, cfg.primitive_count)
    if cfg.curvature_min == -cfg.curvature_max:
        k = 0.5 * (k - k[::-1])  # exact mirror pairs
    k[cfg.primitive_count // 2] = 0.0
    return k


def primitives(cfg: LatticeConfig = LatticeConfig()) -> list[TrajectoryArc]:
    """Primitive templates anchored at the origin facing +x."""
    bound = max(abs(cfg.curvature_min), abs(cfg.curvature_max))
    return [
        TrajectoryArc(Pose2D(0.0, 0.0, 0.0), float(k), cfg.primitive_length, bound)
        for k in curvatures(cfg)
    ]


def heuristic(n: Pose2D, goal: Pose2D, dem: DEM, p: RampModelParams) -> float:
    """Straight-line energy ``(G theta + beta) d`` from ``n`` to ``goal``."""
    d = n.distance_to(goal)
    if d == 0.0:
        return 0.0
    dz = float(dem.elevation_at(goal.x, goal.y)) - float(dem.elevation_at(n.x, n.y))
    theta = math.degrees(math.atan(dz / d))
    return float(p.per_metre(theta)) * d


class _GoalHeuristic:
    """Heuristic to the goal *region*: the distance term stops at the goal radius."""

    def __init__(self, goal: Pose2D, dem: DEM, p: RampModelParams | None, radius: float):
        self.goal, self.p, self.radius = goal, p, radius
        self.z_goal = float(dem.elevation_at(goal.x, goal.y))
        self.dem = dem

    def __call__(self, pose: Pose2D) -> float:
        if self.p is None:
            return 0.0
        d = pose.distance_to(self.goal)
        remaining = d - self.radius
        if remaining <= 0.0:
            return 0.0
        dz = self.z_goal - float(self.dem.elevation_at(pose.x, pose.y))
        theta = math.degrees(math.atan(dz / d))
        return float(self.p.per_metre(theta)) * remaining


class EdgeModel:
    """Successor generator: primitive placement, pruning and estimator-backed edge costs.

    Results are memoised per exact ``(pose, curvature)`` so that several searches
    over the same problem see an identical graph.
    """

    def __init__(
        self, dem: DEM, estimator, cfg: LatticeConfig = LatticeConfig(),
        thresholds: SafetyThresholds = SafetyThresholds(), cloud: PointCloud | None = None,
        rover: RoverParams = RoverParams(), cloud_seed: int = 0,
    ):
        self.dem = dem
        self.estimator = estimator
        self.cfg = cfg
        self.thresholds = thresholds
        self.cloud = cloud if cloud is not None else sample_point_cloud(dem, POINT_DENSITY, cloud_seed)
        self.rover = rover
        self.curvatures = curvatures(cfg)
        self.bound = max(abs(cfg.curvature_min), abs(cfg.curvature_max))
        self._cache: dict = {}
        self.evaluations = 0

    def in_bounds(self, arc: TrajectoryArc) -> bool:
        # the wheel tracks trace both edges of the swath window, so this covers it too
        return footprint_in_bounds(self.dem, arc, self.rover)

    def successors(self, pose: Pose2D):
        """List of ``(arc, EnergyEstimate)`` for every feasible primitive from ``pose``."""
        key = (pose.x, pose.y, pose.heading)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        arcs, patches = [], []
        for k in self.curvatures:
            arc = TrajectoryArc(pose, float(k), self.cfg.primitive_length, self.bound)
            if not self.in_bounds(arc):
                continue
            try:
                patch = preprocess(self.cloud, arc, self.thresholds)
            except UntraversableError:
                continue
            arcs.append(arc)
            patches.append(patch)
        estimates = self.estimator.estimate_edges(self.dem, arcs, patches) if arcs else []
        self.evaluations += len(arcs)
        out = list(zip(arcs, estimates))
        self._cache[key] = out
        return out

    def state_key(self, pose: Pose2D):
        q = self.cfg.position_quantum
        sector = 2.0 * math.pi / self.cfg.heading_sectors
        return (
            int(math.floor(pose.x / q + 0.5)),
            int(math.floor(pose.y / q + 0.5)),
            int(math.floor(pose.heading / sector + 0.5)) % self.cfg.heading_sectors,
        )


def _geometry(cfg: LatticeConfig) -> tuple:
    return tuple(getattr(cfg, f.name) for f in fields(cfg) if f.name not in _SEARCH_FIELDS)


_SEARCH_FIELDS = ("goal_radius", "max_expansions")


@dataclass
class _Node:
    pose: Pose2D
    g: float
    parent: "_Node | None" = None
    arc: TrajectoryArc | None = None
    estimate: EnergyEstimate | None = None


def astar(
    start: Pose2D, goal: Pose2D, dem: DEM, estimator, cfg: LatticeConfig | None = None,
    thresholds: SafetyThresholds = SafetyThresholds(), heuristic_params: RampModelParams | None = None,
    cloud: PointCloud | None = None, rover: RoverParams = RoverParams(), edges: EdgeModel | None = None,
) -> PlanResult:
    """Minimum predicted-energy arc chain from ``start`` to within ``goal_radius`` of ``goal``.

    ``heuristic_params=None`` runs with the zero heuristic (uniform-cost search).
    Equal priorities are resolved first-in-first-out. With a shared ``edges`` model,
    ``cfg`` may change only the search fields ``goal_radius`` and ``max_expansions``.
    Raises :class:`NoPathError`.
    """
    t0 = time.perf_counter()
    if edges is None:
        cfg = cfg if cfg is not None else LatticeConfig()
        edges = EdgeModel(dem, estimator, cfg, thresholds, cloud, rover)
    elif cfg is None:
        cfg = edges.cfg
    elif _geometry(cfg) != _geometry(edges.cfg):
        raise ValueError("cfg lattice geometry differs from the shared edge model")
    h = _GoalHeuristic(goal, dem, heuristic_params, cfg.goal_radius)
    tie = itertools.count()
    root = _Node(start, 0.0)
    open_heap = [(h(start), next(tie), root)]
    best_g = {edges.state_key(start): 0.0}
    closed = set()
    expanded = 0
    priorities = []
    while open_heap:
        prio, _, node = heapq.heappop(open_heap)
        key = edges.state_key(node.pose)
        if key in closed or node.g > best_g[key]:
            continue
        closed.add(key)
        expanded += 1
        priorities.append(prio)
        if node.pose.distance_to(goal) <= cfg.goal_radius:
            return _reconstruct(node, expanded, time.perf_counter() - t0, priorities)
        if expanded >= cfg.max_expansions:
            raise NoPathError("expansion limit", expanded, time.perf_counter() - t0)
        for arc, est in edges.successors(node.pose):
            child_pose = arc.end
            ckey = edges.state_key(child_pose)
            if ckey in closed:
                continue
            g = node.g + est.net
            if g < best_g.get(ckey, math.inf):
                best_g[ckey] = g
                child = _Node(child_pose, g, node, arc, est)
                heapq.heappush(open_heap, (g + h(child_pose), next(tie), child))
    raise NoPathError("open list exhausted", expanded, time.perf_counter() - t0)


def _reconstruct(node: _Node, expanded: int, wall: float, priorities) -> PlanResult:
    arcs, ests = [], []
    g = node.g
    while node.parent is not None:
        arcs.append(node.arc)
        ests.append(node.estimate)
        node = node.parent
    arcs.reverse()
    ests.reverse()
    return PlanResult(arcs, g, None, expanded, wall, ests, None, priorities)


def execute_plan(plan: PlanResult, dem: DEM, rover: RoverParams = RoverParams()) -> float:
    """Re-simulate every arc; fills ``real_energy`` and per-edge ``edge_real`` (net joules)."""
    real = []
    for arc in plan.arcs:
        _, label = simulate_traverse(dem, arc, rover)
        real.append(label.net)
    plan.edge_real = real
    plan.real_energy = float(sum(real))
    return plan.real_energy


def format_plan(plan: PlanResult, include_timing: bool = False) -> str:
    """Plan records: one ``arc`` line per primitive, then a ``total`` summary line.

    The time field is ``nan`` unless ``include_timing`` is set, so that plan files
    are reproducible byte for byte.
    """
    lines = []
    for i, (arc, est) in enumerate(zip(plan.arcs, plan.edge_predictions)):
        s = arc.start
        lines.append(
            f"arc {i} x {s.x!r} y {s.y!r} heading {s.heading!r} curvature {arc.curvature!r} "
            f"length {arc.length!r} pred_net {est.net!r}"
        )
    real = "nan" if plan.real_energy is None else repr(plan.real_energy)
    t = repr(plan.wall_time) if include_timing else "nan"
    lines.append(f"total pred {plan.predicted_energy!r} real {real} nodes {plan.nodes_expanded} time {t}")
    return "\n".join(lines) + "\n"


def write_plan(plan: PlanResult, path, include_timing: bool = False) -> None:
    with open(os.fspath(path), "w", encoding="ascii", newline="\n") as fh:
        fh.write(format_plan(plan, include_timing))


def parse_plan(text: str) -> dict:
    """Inverse of :func:`format_plan` (arcs as dicts plus the summary fields)."""
    arcs, summary = [], None
    for lineno, line in enumerate(text.splitlines(), start=1):
        tok = line.split()
        if not tok:
            continue
        if tok[0] == "arc":
            fields = dict(zip(tok[2::2], tok[3::2]))
            arcs.append({k: float(v) for k, v in fields.items()})
        elif tok[0] == "total":
            f = dict(zip(tok[1::2], tok[2::2]))
            summary = {
                "pred": float(f["pred"]), "real": float(f["real"]),
                "nodes": int(f["nodes"]), "time": float(f["time"]),
            }
        else:
            raise ValueError(f"line {lineno}: unknown record {tok[0]!r}")
    if summary is None:
        raise ValueError("plan has no summary line")
    return {"arcs": arcs, **summary}
