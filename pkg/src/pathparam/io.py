"""File formats, dataset generators, and run configuration.

Paths travel as JSON polylines, trajectories as fixed-step CSV tables,
metrics as JSON summaries.  Every writer is atomic (temp file plus rename)
and every format round-trips through its loader.
"""

from __future__ import annotations

import contextlib
import json
import math
import os
import tempfile
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import FormatError
from .kinematics import KinematicLimits, Trajectory1D
from .multipath import (
    DEFAULT_DT,
    DEFAULT_DU,
    DEFAULT_ITERS,
    MultiPath,
    TrackingOutcome,
    build_multipath,
    path_deviation_points,
)

# Symmetric magnitude limits of a 7-joint arm, one entry per joint.
DEFAULT_V_MAX = (1.71, 1.71, 1.74, 2.27, 2.44, 3.14, 3.14)   # rad/s
DEFAULT_A_MAX = (15.0, 7.5, 10.0, 12.5, 15.0, 20.0, 20.0)    # rad/s^2
DEFAULT_J_MAX = (300.0, 150.0, 200.0, 250.0, 300.0, 400.0, 400.0)  # rad/s^3

POSITION_BOUND = 2.9     # rad, default joint excursion for generated data
WALK_ACCEL_DT = 0.5      # s, how often the random walk redraws accelerations
WALK_SAMPLE_DT = 0.01    # s, fine sampling grid of generated walk paths
FLOAT_FMT = "%.12g"      # trajectory CSV cell format


# -------------------------------------------------------------------------
# Configuration
# -------------------------------------------------------------------------

@dataclass(frozen=True)
class LimitsConfig:
    """Symmetric per-dimension magnitude limits plus a global jerk scale.

    ``jerk_limit_factor`` multiplies every jerk magnitude when the config
    is turned into kinematic limits; velocity and acceleration are never
    scaled.
    """

    v_max: tuple[float, ...]
    a_max: tuple[float, ...]
    j_max: tuple[float, ...]
    jerk_limit_factor: float = 1.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "v_max", tuple(float(v) for v in self.v_max))
        object.__setattr__(self, "a_max", tuple(float(a) for a in self.a_max))
        object.__setattr__(self, "j_max", tuple(float(j) for j in self.j_max))
        if not self.v_max:
            raise ValueError("limits need at least one dimension")
        if len({len(self.v_max), len(self.a_max), len(self.j_max)}) != 1:
            raise ValueError("v_max, a_max and j_max must have equal length")
        for name in ("v_max", "a_max", "j_max"):
            for value in getattr(self, name):
                if not (math.isfinite(value) and value > 0.0):
                    raise ValueError(f"{name} entries must be positive, "
                                     f"got {value}")
        factor = float(self.jerk_limit_factor)
        if not (math.isfinite(factor) and factor > 0.0):
            raise ValueError(f"jerk_limit_factor must be positive, "
                             f"got {factor}")
        object.__setattr__(self, "jerk_limit_factor", factor)

    @property
    def dims(self) -> int:
        return len(self.v_max)

    def with_jerk_factor(self, factor: float) -> LimitsConfig:
        return replace(self, jerk_limit_factor=float(factor))

    def kinematic_limits(self) -> tuple[KinematicLimits, ...]:
        """Per-dimension limits with the jerk factor applied."""
        return tuple(
            KinematicLimits.symmetric(v, a, j * self.jerk_limit_factor)
            for v, a, j in zip(self.v_max, self.a_max, self.j_max))


@dataclass(frozen=True)
class RunConfig:
    """Knobs of a full parameterization run."""

    dt: float = DEFAULT_DT       # control period, s
    du: float = DEFAULT_DU       # reference band half-width, rad
    n_iters: int = DEFAULT_ITERS
    seed: int = 0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.dt) and self.dt > 0.0):
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not (math.isfinite(self.du) and self.du > 0.0):
            raise ValueError(f"du must be positive, got {self.du}")
        if self.n_iters < 1:
            raise ValueError(f"n_iters must be at least 1, got {self.n_iters}")


def default_limits() -> LimitsConfig:
    """Limits of a typical 7-joint robot arm."""
    return LimitsConfig(DEFAULT_V_MAX, DEFAULT_A_MAX, DEFAULT_J_MAX)


# -------------------------------------------------------------------------
# Atomic writing
# -------------------------------------------------------------------------

def _write_atomic(file: str | os.PathLike[str], text: str) -> None:
    """Write ``text`` to ``file`` through a temp file in the same directory."""
    target = Path(file)
    fd, tmp = tempfile.mkstemp(dir=target.parent or ".",
                               prefix=target.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


# -------------------------------------------------------------------------
# Path files
# -------------------------------------------------------------------------

def _load_json(file: str | os.PathLike[str]) -> dict:
    path = Path(file)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise FormatError(
            f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from exc
    if not isinstance(doc, dict):
        raise FormatError(f"{path}: expected a JSON object at the top level")
    return doc


def load_path(file: str | os.PathLike[str]) -> MultiPath:
    """Read a JSON path file and build the joint-progress tables."""
    path = Path(file)
    doc = _load_json(path)
    dims = doc.get("dimensions")
    if not isinstance(dims, int) or dims < 1:
        raise FormatError(
            f"{path}: field 'dimensions' must be a positive integer, "
            f"got {dims!r}")
    rows = doc.get("waypoints")
    if not isinstance(rows, list):
        raise FormatError(f"{path}: field 'waypoints' must be a list")
    if len(rows) < 2:
        raise FormatError(f"{path}: field 'waypoints' needs at least two "
                          f"entries, got {len(rows)}")
    for k, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dims:
            raise FormatError(
                f"{path}: waypoint {k} must be a list of {dims} values")
        for value in row:
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise FormatError(
                    f"{path}: waypoint {k} contains a non-finite value "
                    f"({value!r})")
    return build_multipath(rows)


def save_path(file: str | os.PathLike[str],
              samples: Sequence[Sequence[float]] | np.ndarray) -> None:
    """Write joint-space samples as a JSON path file."""
    pts = np.asarray(samples, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    doc = {"dimensions": int(pts.shape[1]),
           "waypoints": [[float(v) for v in row] for row in pts]}
    _write_atomic(file, json.dumps(doc) + "\n")


# -------------------------------------------------------------------------
# Limits files
# -------------------------------------------------------------------------

def load_limits(file: str | os.PathLike[str]) -> LimitsConfig:
    """Read a JSON limits file mirroring :class:`LimitsConfig`."""
    path = Path(file)
    doc = _load_json(path)
    fields = {}
    for name in ("v_max", "a_max", "j_max"):
        values = doc.get(name)
        if not isinstance(values, list) or not values:
            raise FormatError(
                f"{path}: field '{name}' must be a non-empty list")
        fields[name] = values
    factor = doc.get("jerk_limit_factor", 1.0)
    try:
        return LimitsConfig(fields["v_max"], fields["a_max"],
                            fields["j_max"], factor)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{path}: {exc}") from exc


def save_limits(file: str | os.PathLike[str], config: LimitsConfig) -> None:
    doc = {"v_max": list(config.v_max),
           "a_max": list(config.a_max),
           "j_max": list(config.j_max),
           "jerk_limit_factor": config.jerk_limit_factor}
    _write_atomic(file, json.dumps(doc, indent=2, sort_keys=True) + "\n")


# -------------------------------------------------------------------------
# Trajectory tables
# -------------------------------------------------------------------------

@dataclass(frozen=True)
class TrajectoryTable:
    """A sampled multi-dimension trajectory, one row per time step."""

    t: np.ndarray            # (n,)
    position: np.ndarray     # (n, D)
    velocity: np.ndarray     # (n, D)
    acceleration: np.ndarray  # (n, D)
    jerk: np.ndarray         # (n, D)

    @property
    def dims(self) -> int:
        return self.position.shape[1]


def sample_table(trajectories: Sequence[Trajectory1D],
                 dt: float) -> TrajectoryTable:
    """Sample per-dimension trajectories on a common fixed-step grid.

    Rows sit at multiples of ``dt``; a final row at the exact end time is
    appended when the grid misses it.
    """
    if not trajectories:
        raise ValueError("at least one trajectory required")
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    total = max(traj.total_duration for traj in trajectories)
    n = int(math.floor(total / dt + 1e-9)) + 1
    times = [k * dt for k in range(n)]
    if total - times[-1] > 1e-9:
        times.append(total)
    dims = len(trajectories)
    shape = (len(times), dims)
    pos = np.empty(shape)
    vel = np.empty(shape)
    acc = np.empty(shape)
    jrk = np.empty(shape)
    for i, traj in enumerate(trajectories):
        for k, t in enumerate(times):
            state = traj.sample(t)
            pos[k, i] = state.position
            vel[k, i] = state.velocity
            acc[k, i] = state.acceleration
            jrk[k, i] = traj.jerk_at(t)
    return TrajectoryTable(np.asarray(times), pos, vel, acc, jrk)


def save_trajectory(file: str | os.PathLike[str],
                    table: TrajectoryTable) -> None:
    """Write a trajectory table as CSV with 12 significant digits."""
    dims = table.dims
    header = ",".join(
        ["t"] + [f"{q}_{i}" for q in "pvaj" for i in range(dims)])
    lines = [header]
    columns = (table.position, table.velocity, table.acceleration, table.jerk)
    for k in range(len(table.t)):
        cells = [FLOAT_FMT % table.t[k]]
        for col in columns:
            cells.extend(FLOAT_FMT % col[k, i] for i in range(dims))
        lines.append(",".join(cells))
    _write_atomic(file, "\n".join(lines) + "\n")


def load_trajectory(file: str | os.PathLike[str]) -> TrajectoryTable:
    """Read a trajectory CSV back into arrays."""
    path = Path(file)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if not lines:
        raise FormatError(f"{path}: empty file")
    names = lines[0].split(",")
    if len(names) < 5 or (len(names) - 1) % 4 != 0:
        raise FormatError(f"{path}:1: malformed header {lines[0]!r}")
    dims = (len(names) - 1) // 4
    expected = ["t"] + [f"{q}_{i}" for q in "pvaj" for i in range(dims)]
    if names != expected:
        raise FormatError(f"{path}:1: unexpected header {lines[0]!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(names):
            raise FormatError(f"{path}:{lineno}: expected {len(names)} "
                              f"columns, got {len(cells)}")
        try:
            rows.append([float(cell) for cell in cells])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
    if not rows:
        raise FormatError(f"{path}: no data rows")
    data = np.asarray(rows)
    slices = [data[:, 1 + q * dims:1 + (q + 1) * dims] for q in range(4)]
    return TrajectoryTable(data[:, 0], *slices)


def plot_series(table: TrajectoryTable) -> dict:
    """Per-quantity time series keyed by trajectory column name."""
    out: dict[str, list[float]] = {"t": table.t.tolist()}
    for prefix, arr in (("p", table.position), ("v", table.velocity),
                        ("a", table.acceleration), ("j", table.jerk)):
        for i in range(table.dims):
            out[f"{prefix}_{i}"] = arr[:, i].tolist()
    return out


# -------------------------------------------------------------------------
# Metrics files
# -------------------------------------------------------------------------

def _finite_or_none(value: float) -> float | None:
    return float(value) if math.isfinite(value) else None


def run_metrics(mp: MultiPath, outcome: TrackingOutcome,
                positions: np.ndarray) -> dict:
    """Summary of a tracking run, keyed for the metrics file.

    The headline deviation is recomputed from the sampled positions so a
    consumer holding only the path and trajectory files can reproduce it.
    """
    dev = path_deviation_points(mp, positions)
    per = []
    for k, result in enumerate(outcome.iterations):
        per.append({
            "iteration": k,
            "duration_s": _finite_or_none(result.duration),
            "deviation_mean_rad": _finite_or_none(result.deviation_mean),
            "deviation_max_rad": _finite_or_none(result.deviation_max),
            "error": result.error,
        })
    return {
        "duration_s": outcome.best.duration,
        "deviation_mean_rad": dev.mean,
        "deviation_max_rad": dev.max,
        "best_iteration": outcome.best_index,
        "per_iteration": per,
    }


def save_metrics(file: str | os.PathLike[str], metrics: dict) -> None:
    _write_atomic(file, json.dumps(metrics, indent=2, sort_keys=True) + "\n")


def load_metrics(file: str | os.PathLike[str]) -> dict:
    return _load_json(file)


# -------------------------------------------------------------------------
# Dataset generators
# -------------------------------------------------------------------------

def gen_random_1d(seed: int, n_waypoints: int | None = None,
                  position_range: tuple[float, float] = (-POSITION_BOUND,
                                                         POSITION_BOUND)
                  ) -> list[float]:
    """Uniform random waypoints for one dimension, deterministic per seed.

    Candidates closer than 0.1 percent of the range to their predecessor
    count as duplicates and are redrawn.
    """
    rng = np.random.default_rng(seed)
    if n_waypoints is None:
        n_waypoints = int(rng.integers(3, 7))
    if n_waypoints < 2:
        raise ValueError(f"n_waypoints must be at least 2, got {n_waypoints}")
    lo, hi = position_range
    if not hi > lo:
        raise ValueError(f"empty position range {position_range}")
    gap = 1e-3 * (hi - lo)
    points = [float(rng.uniform(lo, hi))]
    while len(points) < n_waypoints:
        candidate = float(rng.uniform(lo, hi))
        if abs(candidate - points[-1]) > gap:
            points.append(candidate)
    return points


def gen_random_walk(seed: int, dims: int = 7, duration: float = 8.0,
                    accel_scale: float = 0.2, *,
                    limits: LimitsConfig | None = None,
                    position_bound: float = POSITION_BOUND,
                    accel_dt: float = WALK_ACCEL_DT,
                    sample_dt: float = WALK_SAMPLE_DT) -> np.ndarray:
    """Random-acceleration joint walk sampled on a fine grid.

    Each dimension integrates a piecewise-constant acceleration redrawn
    every ``accel_dt`` seconds as a uniform fraction of ``accel_scale``
    times the acceleration limit.  Velocity is clipped to the velocity
    limit and position to ``position_bound``; a clipped position resets
    that dimension's velocity.  Deterministic per seed.
    """
    if dims < 1:
        raise ValueError(f"dims must be at least 1, got {dims}")
    if duration <= 0.0 or sample_dt <= 0.0 or accel_dt <= 0.0:
        raise ValueError("duration, accel_dt and sample_dt must be positive")
    if limits is None:
        limits = default_limits()
    v_cap = np.resize(np.asarray(limits.v_max, dtype=float), dims)
    a_cap = np.resize(np.asarray(limits.a_max, dtype=float), dims)
    redraw_every = max(1, round(accel_dt / sample_dt))
    n_steps = max(1, round(duration / sample_dt))
    rng = np.random.default_rng(seed)
    q = np.zeros(dims)
    v = np.zeros(dims)
    a = np.zeros(dims)
    out = [q.copy()]
    for k in range(n_steps):
        if k % redraw_every == 0:
            a = rng.uniform(-1.0, 1.0, dims) * a_cap * accel_scale
        v = np.clip(v + a * sample_dt, -v_cap, v_cap)
        q = q + v * sample_dt
        hit = np.abs(q) > position_bound
        if hit.any():
            q[hit] = np.sign(q[hit]) * position_bound
            v[hit] = 0.0
        out.append(q.copy())
    return np.asarray(out)
