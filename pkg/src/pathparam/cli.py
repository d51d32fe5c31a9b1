"""Command-line interface: parameterize paths, generate data, inspect runs.

Exit codes: 0 success, 2 input error, 3 infeasible problem, 4 violated
internal invariant or unexpected failure.  Errors print one line to
standard error as ``error: <category>: <detail>``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Sequence

from .errors import (
    DegeneratePathError,
    FormatError,
    InfeasibleTargetError,
    PathParamError,
    SearchContradictionError,
    StallError,
)
from .io import (
    FLOAT_FMT,
    LimitsConfig,
    RunConfig,
    _write_atomic,
    default_limits,
    gen_random_1d,
    gen_random_walk,
    load_limits,
    load_path,
    load_trajectory,
    plot_series,
    run_metrics,
    sample_table,
    save_metrics,
    save_path,
    save_trajectory,
)
from .multipath import MultiPath, iterate, path_deviation_points
from .path1d import time_optimal_traversal, waypoint_acc_ranges

_RAISABLE = {cls.__name__: cls for cls in
             (InfeasibleTargetError, StallError, SearchContradictionError,
              DegeneratePathError)}


def _limits_for(args, mp: MultiPath) -> LimitsConfig:
    config = load_limits(args.limits) if args.limits else default_limits()
    if getattr(args, "jerk_factor", None) is not None:
        config = config.with_jerk_factor(args.jerk_factor)
    if config.dims != mp.dims:
        raise ValueError(f"limits cover {config.dims} dimensions but the "
                         f"path has {mp.dims}")
    return config


def _moving_path(mp: MultiPath, dim: int):
    if not 0 <= dim < mp.dims:
        raise ValueError(f"dimension {dim} out of range for a "
                         f"{mp.dims}-dimensional path")
    path = mp.paths[dim]
    if path is None:
        raise DegeneratePathError(f"dimension {dim} never moves")
    return path


def _reraise_failed_run(error: str) -> None:
    name, _, detail = error.partition(": ")
    raise _RAISABLE.get(name, PathParamError)(detail or error)


# -------------------------------------------------------------------------
# Subcommands
# -------------------------------------------------------------------------

def _cmd_parameterize(args) -> int:
    mp = load_path(args.path)
    config = _limits_for(args, mp)
    run = RunConfig(dt=args.dt, du=args.du, n_iters=args.iters)
    outcome = iterate(mp, config.kinematic_limits(), run.dt, run.du,
                      run.n_iters)
    best = outcome.best
    if best.error is not None:
        _reraise_failed_run(best.error)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    table = sample_table(best.trajectories, run.dt)
    save_trajectory(out / "trajectory.csv", table)
    metrics = run_metrics(mp, outcome, table.position)
    save_metrics(out / "metrics.json", metrics)
    lines = ["iteration,duration_s,deviation_mean_rad,deviation_max_rad,"
             "error"]
    for entry in metrics["per_iteration"]:
        cells = [str(entry["iteration"])]
        for key in ("duration_s", "deviation_mean_rad", "deviation_max_rad"):
            value = entry[key]
            cells.append("" if value is None else FLOAT_FMT % value)
        cells.append(entry["error"] or "")
        lines.append(",".join(cells))
    _write_atomic(out / "iterations.csv", "\n".join(lines) + "\n")
    print(json.dumps({"out": str(out),
                      "duration_s": metrics["duration_s"],
                      "deviation_mean_rad": metrics["deviation_mean_rad"],
                      "best_iteration": metrics["best_iteration"]},
                     sort_keys=True))
    return 0


def _cmd_traverse_1d(args) -> int:
    mp = load_path(args.path)
    config = _limits_for(args, mp)
    path = _moving_path(mp, args.dim)
    limits = config.kinematic_limits()[args.dim]
    traj = time_optimal_traversal(waypoint_acc_ranges(path, limits), limits)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_trajectory(out / "trajectory.csv", sample_table([traj], args.dt))
    save_metrics(out / "metrics.json", {"duration_s": traj.total_duration})
    print(json.dumps({"out": str(out), "duration_s": traj.total_duration},
                     sort_keys=True))
    return 0


def _cmd_feasible_acc(args) -> int:
    mp = load_path(args.path)
    config = _limits_for(args, mp)
    path = _moving_path(mp, args.dim)
    limits = config.kinematic_limits()[args.dim]
    ranged = waypoint_acc_ranges(path, limits)
    print("waypoint,position,kind,a_min,a_max,a_in_max,a_out_max")
    for k, wp in enumerate(ranged.waypoints):
        r = wp.acc_range
        print(",".join([str(k), FLOAT_FMT % wp.position, wp.kind,
                        FLOAT_FMT % r.a_min, FLOAT_FMT % r.a_max,
                        FLOAT_FMT % r.a_in_max, FLOAT_FMT % r.a_out_max]))
    return 0


def _cmd_gen_dataset(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for k in range(args.count):
        seed = args.seed + k
        if args.kind == "random-1d":
            samples = gen_random_1d(seed, n_waypoints=args.waypoints)
        else:
            samples = gen_random_walk(seed, dims=args.dims,
                                      duration=args.duration,
                                      accel_scale=args.accel_scale)
        file = out / f"path_{k:03d}.json"
        save_path(file, samples)
        written.append(file.name)
    print(json.dumps({"out": str(out), "kind": args.kind,
                      "count": len(written)}, sort_keys=True))
    return 0


def _cmd_evaluate(args) -> int:
    mp = load_path(args.path)
    table = load_trajectory(args.trajectory)
    if table.dims != mp.dims:
        raise ValueError(f"trajectory has {table.dims} dimensions but the "
                         f"path has {mp.dims}")
    stats = path_deviation_points(mp, table.position)
    print(json.dumps({"deviation_mean_rad": stats.mean,
                      "deviation_max_rad": stats.max,
                      "duration_s": float(table.t[-1])},
                     indent=2, sort_keys=True))
    return 0


def _cmd_plot_data(args) -> int:
    table = load_trajectory(args.trajectory)
    _write_atomic(args.out, json.dumps(plot_series(table)) + "\n")
    print(json.dumps({"out": args.out, "samples": len(table.t)},
                     sort_keys=True))
    return 0


# -------------------------------------------------------------------------
# Parser and entry point
# -------------------------------------------------------------------------

def _add_limits_flags(sub, jerk_factor: bool = True) -> None:
    sub.add_argument("--limits", help="JSON limits file; built-in 7-joint "
                                      "limits when omitted")
    if jerk_factor:
        sub.add_argument("--jerk-factor", type=float, default=None,
                         help="override the jerk limit factor")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pathparam",
        description="Jerk-limited time parameterization of joint-space "
                    "paths.")
    commands = parser.add_subparsers(dest="command", required=True)
    defaults = RunConfig()

    sub = commands.add_parser(
        "parameterize", help="run the full iterative parameterization")
    sub.add_argument("--path", required=True, help="JSON path file")
    _add_limits_flags(sub)
    sub.add_argument("--dt", type=float, default=defaults.dt,
                     help="control period in seconds")
    sub.add_argument("--du", type=float, default=defaults.du,
                     help="tracking band half-width in rad")
    sub.add_argument("--iters", type=int, default=defaults.n_iters,
                     help="number of refinement iterations")
    sub.add_argument("--out", required=True, help="output directory")
    sub.set_defaults(handler=_cmd_parameterize)

    sub = commands.add_parser(
        "traverse-1d", help="time-optimal traversal of one dimension")
    sub.add_argument("--path", required=True)
    sub.add_argument("--dim", type=int, required=True)
    _add_limits_flags(sub)
    sub.add_argument("--dt", type=float, default=defaults.dt)
    sub.add_argument("--out", required=True)
    sub.set_defaults(handler=_cmd_traverse_1d)

    sub = commands.add_parser(
        "feasible-acc", help="print per-waypoint acceleration ranges")
    sub.add_argument("--path", required=True)
    sub.add_argument("--dim", type=int, required=True)
    _add_limits_flags(sub)
    sub.set_defaults(handler=_cmd_feasible_acc)

    sub = commands.add_parser(
        "gen-dataset", help="generate random path files")
    sub.add_argument("--kind", required=True,
                     choices=("random-1d", "random-walk"))
    sub.add_argument("--seed", type=int, default=0)
    sub.add_argument("--count", type=int, default=1)
    sub.add_argument("--out", required=True)
    sub.add_argument("--waypoints", type=int, default=None,
                     help="random-1d: waypoint count (random 3-6 when "
                          "omitted)")
    sub.add_argument("--dims", type=int, default=7,
                     help="random-walk: number of dimensions")
    sub.add_argument("--duration", type=float, default=8.0,
                     help="random-walk: walk duration in seconds")
    sub.add_argument("--accel-scale", type=float, default=0.2,
                     help="random-walk: acceleration draw as a fraction "
                          "of the limit")
    sub.set_defaults(handler=_cmd_gen_dataset)

    sub = commands.add_parser(
        "evaluate", help="recompute deviation metrics for a trajectory")
    sub.add_argument("--path", required=True)
    sub.add_argument("--trajectory", required=True)
    sub.set_defaults(handler=_cmd_evaluate)

    sub = commands.add_parser(
        "plot-data", help="emit per-quantity time series as JSON")
    sub.add_argument("--trajectory", required=True)
    sub.add_argument("--out", required=True)
    sub.set_defaults(handler=_cmd_plot_data)
    return parser


def _fail(category: str, code: int, exc: BaseException) -> int:
    print(f"error: {category}: {exc}", file=sys.stderr)
    return code


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except (InfeasibleTargetError, StallError) as exc:
        return _fail("infeasible", 3, exc)
    except SearchContradictionError as exc:
        return _fail("internal", 4, exc)
    except (FormatError, DegeneratePathError, ValueError) as exc:
        return _fail("input", 2, exc)
    except PathParamError as exc:
        return _fail("internal", 4, exc)
    except Exception as exc:  # noqa: BLE001 - the CLI must not crash raw
        return _fail("internal", 4, exc)


if __name__ == "__main__":
    sys.exit(main())
