"""``terravolt`` command line: terrain, dataset, train, eval, plan and compare workflows.

Exit codes: 0 success, 1 usage error, 2 data error (bad input files, no path).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from dataclasses import replace

from .config import Config, ConfigError, load_config
from .estimators import Conv1DEstimator, DynSimEstimator, RampModelEstimator
from .geometry import Pose2D
from .nn.network import load_weights, save_weights
from .nn.train import train
from .pipeline import (
    DatasetError, as_arrays, compare_planners, comparison_table, eval_table, evaluate,
    generate_dataset, random_problems, read_dataset, render_table, write_dataset,
)
from .planner import NoPathError, astar, execute_plan, format_plan
from .powertrain import OutOfBoundsError
from .terrain import PRESETS, DEMFormatError, load_dem, make_preset, save_dem

log = logging.getLogger("terravolt")

ESTIMATORS = ("rampmodel", "conv1d", "dynsim")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _pose(text: str, need_heading: bool) -> Pose2D:
    parts = text.split(",")
    if len(parts) not in ((3,) if need_heading else (2, 3)):
        raise argparse.ArgumentTypeError(f"expected x,y{',heading' if need_heading else '[,heading]'}")
    try:
        vals = [float(p) for p in parts] + [0.0]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number in {text!r}") from None
    return Pose2D(vals[0], vals[1], vals[2])


def _start(text):
    return _pose(text, True)


def _goal(text):
    return _pose(text, False)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=0, help="master random seed (default 0)")
    g.add_argument("--config", help="flat key = value parameter file")
    g.add_argument("--out", help="output path (default: standard output where applicable)")
    g.add_argument("--threads", type=int, default=1, help="worker processes for parallel workflows")
    g.add_argument("--csv", action="store_true", help="emit tables as CSV")
    g.add_argument("--timing", action="store_true", help="include wall-clock times in outputs")
    g.add_argument("-v", "--verbose", action="store_true", help="progress logging on stderr")

    p = _Parser(prog="terravolt", description="Energy-aware rough-terrain planning toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("terrain", parents=[common], help="generate a DEM")
    s.add_argument("--preset", choices=PRESETS, required=True)
    s.add_argument("--extent", type=float, default=12.0, help="side length in metres")
    s.add_argument("--cell", type=float, default=0.05, help="grid spacing in metres")
    s.add_argument("--pitch", type=float, default=5.0, help="ramp pitch in degrees")
    s.add_argument("--roll", type=float, default=0.0, help="ramp roll in degrees")

    s = sub.add_parser("dataset", parents=[common], help="simulate labelled traverses")
    s.add_argument("--dem", action="append", required=True, help="terrain file (repeatable)")
    s.add_argument("--samples", type=int, default=10000)

    s = sub.add_parser("train", parents=[common], help="fit the Conv1D regressor")
    s.add_argument("--data", required=True)
    s.add_argument("--limit", type=int, help="use only the first N records")
    s.add_argument("--epochs", type=int)
    s.add_argument("--batch-size", type=int)
    s.add_argument("--lr", type=float)

    s = sub.add_parser("eval", parents=[common], help="energy estimation metrics on a dataset")
    s.add_argument("--data", required=True)
    s.add_argument("--weights", help="Conv1D weights; omit to skip Conv1D")
    s.add_argument("--dem", action="append", help="source terrains, enables the DynSim row")

    s = sub.add_parser("plan", parents=[common], help="plan one start-goal problem")
    s.add_argument("--dem", required=True)
    s.add_argument("--estimator", choices=ESTIMATORS, default="rampmodel")
    s.add_argument("--weights", help="required for --estimator conv1d")
    s.add_argument("--start", type=_start, required=True, metavar="X,Y,HEADING")
    s.add_argument("--goal", type=_goal, required=True, metavar="X,Y")

    s = sub.add_parser("compare", parents=[common], help="compare planners on random problems")
    s.add_argument("--dem", required=True)
    s.add_argument("--problems", type=int, default=20)
    s.add_argument("--weights", help="Conv1D weights; omit to compare RampModel and DynSim only")
    s.add_argument("--min-distance", type=float, default=3.0)
    s.add_argument("--max-distance", type=float, default=5.0)
    return p


def _write(args, text: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _need_out(args):
    if not args.out:
        raise UsageError(f"terravolt {args.command}: --out is required")


def _estimator(name: str, args, cfg: Config):
    if name == "rampmodel":
        return RampModelEstimator(cfg.ramp_params(), cfg.rover)
    if name == "dynsim":
        return DynSimEstimator(cfg.rover)
    if not args.weights:
        raise UsageError("--estimator conv1d needs --weights")
    return Conv1DEstimator(load_weights(args.weights))


def _cmd_terrain(args, cfg):
    _need_out(args)
    dem = make_preset(args.preset, args.seed, args.extent, args.cell, args.pitch, args.roll)
    save_dem(dem, args.out)


def _cmd_dataset(args, cfg):
    _need_out(args)
    terrains = [load_dem(p) for p in args.dem]
    recs = generate_dataset(
        terrains, args.samples, cfg.rover, cfg.safety, args.seed, args.threads, cfg.lattice
    )
    write_dataset(recs, args.out)


def _cmd_train(args, cfg):
    _need_out(args)
    recs = read_dataset(args.data)
    if args.limit is not None:
        recs = recs[: args.limit]
    over = {"seed": args.seed}
    if args.epochs is not None:
        over["epochs"] = args.epochs
    if args.batch_size is not None:
        over["batch_size"] = args.batch_size
    if args.lr is not None:
        over["learning_rate"] = args.lr
    x, y = as_arrays(recs)
    w, hist = train(x, y, replace(cfg.train, **over))
    log.info("final train mse %.5f val mse %.5f", hist["train_mse"][-1], hist["val_mse"][-1])
    save_weights(w, args.out)


def _cmd_eval(args, cfg):
    recs = read_dataset(args.data)
    weights = load_weights(args.weights) if args.weights else None
    terrains = [load_dem(p) for p in args.dem] if args.dem else None
    rows = evaluate(weights, cfg.ramp_params(), recs, terrains, cfg.rover)
    _write(args, render_table(*eval_table(rows), as_csv=args.csv))


def _cmd_plan(args, cfg):
    dem = load_dem(args.dem)
    est = _estimator(args.estimator, args, cfg)
    plan = astar(
        args.start, args.goal, dem, est, cfg.lattice, cfg.safety, cfg.heuristic_params(),
        rover=cfg.rover,
    )
    execute_plan(plan, dem, cfg.rover)
    log.info("planned %d arcs, %d expansions in %.2f s", len(plan.arcs), plan.nodes_expanded, plan.wall_time)
    _write(args, format_plan(plan, include_timing=args.timing))


def _cmd_compare(args, cfg):
    dem = load_dem(args.dem)
    problems = random_problems(
        dem, args.problems, args.seed, args.min_distance, args.max_distance,
        cfg.rover, cfg.lattice, cfg.safety,
    )
    ests = {"RampModel": RampModelEstimator(cfg.ramp_params(), cfg.rover)}
    if args.weights:
        ests["Conv1D"] = Conv1DEstimator(load_weights(args.weights))
    ests["DynSim"] = DynSimEstimator(cfg.rover)
    rows = compare_planners(
        problems, ests, cfg.rover, cfg.lattice, cfg.safety, cfg.heuristic_params(), args.threads
    )
    _write(args, render_table(*comparison_table(rows, args.timing), as_csv=args.csv))


_COMMANDS = {
    "terrain": _cmd_terrain, "dataset": _cmd_dataset, "train": _cmd_train,
    "eval": _cmd_eval, "plan": _cmd_plan, "compare": _cmd_compare,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
    except UsageError as exc:
        sys.stderr.write(str(exc).rstrip("\n") + "\n")
        return 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
    )
    t0 = time.perf_counter()
    try:
        cfg = load_config(args.config) if args.config else Config()
        _COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        sys.stderr.write(f"terravolt {args.command}: {exc}\n")
        return 1
    except (ConfigError, DEMFormatError, DatasetError, NoPathError, OutOfBoundsError, ValueError, OSError) as exc:
        sys.stderr.write(f"terravolt {args.command}: {exc}\n")
        return 2
    log.info("%s finished in %.2f s", args.command, time.perf_counter() - t0)
    return 0


if __name__ == "__main__":
    sys.exit(main())
