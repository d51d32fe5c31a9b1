"""Multi-dimensional path model and iterative shared-progress tracking.

A joint-space path visits samples in ``D`` dimensions.  Its own arc length
``u`` (cumulative Euclidean length) serves as the common progress
coordinate: each dimension's travelled length ``s_i`` maps monotonically to
``u``, so any dimension's motion can be expressed as progress along the
joint path.  The slowest dimension's optimal traversal seeds a reference
profile ``u_ref(t)``; every dimension then tracks that reference through
its step-bracket mapping, regions where a dimension cannot keep up are
found, and the reference is locally slowed until the tracking fits.  The
iteration with the lowest mean deviation from the reference path wins.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegeneratePathError, PathParamError, StallError
from .kinematics import (
    JerkSegment,
    KinematicLimits,
    KinematicState,
    Trajectory1D,
)
from .otg import _plan_raw
from .path1d import (
    EPS_POS,
    Path1D,
    _pieces_valid,
    decompose,
    p_of_s,
    time_optimal_traversal,
    waypoint_acc_ranges,
)
from .traversal import (
    DEFAULT_DT,
    EPS_PROGRESS,
    EPS_SETTLE_A,
    EPS_SETTLE_P,
    EPS_V,
    N_STALL,
    _clamped_s,
    _step_slices,
    start_state,
)

DEFAULT_DU = 0.01        # half-width of the reference tracking band, rad
BLEND_MARGIN = 10        # steps added around a violation before an update
DEFAULT_ITERS = 20
MIN_DEVIATION_SAMPLES = 4000


# -------------------------------------------------------------------------
# Path model
# -------------------------------------------------------------------------

@dataclass(frozen=True)
class MultiPath:
    """A sampled joint-space path with per-dimension progress tables.

    ``samples`` holds the collapsed waypoint vectors, ``u_grid`` their
    cumulative Euclidean arc length, and ``s_tables[:, i]`` dimension i's
    cumulative total variation on the same grid.  A dimension without any
    usable motion keeps ``None`` in ``paths``.
    """

    samples: np.ndarray
    u_grid: np.ndarray
    paths: tuple[Path1D | None, ...]
    s_tables: np.ndarray

    @property
    def dims(self) -> int:
        return self.samples.shape[1]

    @property
    def u_total(self) -> float:
        return float(self.u_grid[-1])

    def total_s(self, i: int) -> float:
        return float(self.s_tables[-1, i])


def build_multipath(samples: Sequence[Sequence[float]] | Sequence[float]
                    ) -> MultiPath:
    """Collapse duplicate samples and build the joint-progress tables."""
    pts = np.asarray(samples, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[1] < 1:
        raise ValueError("samples must form an (n, D) array with D >= 1")
    if pts.shape[0] < 2:
        raise DegeneratePathError("a path needs at least two samples")
    if not np.isfinite(pts).all():
        raise ValueError("path samples must be finite")
    keep = [0]
    for k in range(1, len(pts)):
        if float(np.max(np.abs(pts[k] - pts[keep[-1]]))) > EPS_POS:
            keep.append(k)
    pts = pts[keep]
    if len(pts) < 2:
        raise DegeneratePathError("all samples coincide")
    diffs = np.diff(pts, axis=0)
    u_grid = np.concatenate(([0.0], np.cumsum(np.linalg.norm(diffs, axis=1))))
    s_tables = np.concatenate(
        (np.zeros((1, pts.shape[1])), np.cumsum(np.abs(diffs), axis=0)))
    paths: list[Path1D | None] = []
    for i in range(pts.shape[1]):
        if s_tables[-1, i] <= EPS_POS:
            paths.append(None)
            continue
        try:
            paths.append(decompose(pts[:, i].tolist()))
        except DegeneratePathError:
            paths.append(None)
    return MultiPath(pts, u_grid, tuple(paths), s_tables)


def u_of_s(mp: MultiPath, i: int, s: float) -> float:
    """Joint progress at dimension i's travelled length ``s``.

    Where the dimension rests, the earliest matching ``u`` is returned, so
    a stationary stretch never holds the joint progress back.
    """
    col = mp.s_tables[:, i]
    total = float(col[-1])
    if not -EPS_POS <= s <= total + EPS_POS:
        raise ValueError(f"s {s} outside [0, {total}] for dimension {i}")
    s = min(max(s, 0.0), total)
    k = int(np.searchsorted(col, s, side="left"))
    if k >= len(col):
        k = len(col) - 1
    if col[k] == s or k == 0:
        return float(mp.u_grid[k])
    frac = (s - col[k - 1]) / (col[k] - col[k - 1])
    return float(mp.u_grid[k - 1]
                 + frac * (mp.u_grid[k] - mp.u_grid[k - 1]))


def s_of_u(mp: MultiPath, i: int, u: float) -> float:
    """Dimension i's travelled length at joint progress ``u``."""
    if not -EPS_POS <= u <= mp.u_total + EPS_POS:
        raise ValueError(f"u {u} outside [0, {mp.u_total}]")
    u = min(max(u, 0.0), mp.u_total)
    return float(np.interp(u, mp.u_grid, mp.s_tables[:, i]))


def _point_at_u(mp: MultiPath, u: float) -> np.ndarray:
    """Joint-space point of the sampled polyline at progress ``u``."""
    k = int(np.searchsorted(mp.u_grid, u, side="right"))
    if k <= 0:
        return mp.samples[0].copy()
    if k >= len(mp.u_grid):
        return mp.samples[-1].copy()
    span = mp.u_grid[k] - mp.u_grid[k - 1]
    frac = (u - mp.u_grid[k - 1]) / span
    return mp.samples[k - 1] + frac * (mp.samples[k] - mp.samples[k - 1])


# -------------------------------------------------------------------------
# Reference profile
# -------------------------------------------------------------------------

@dataclass(frozen=True)
class ReferenceProfile:
    """Joint progress over a fixed time grid, with a tracking band."""

    dt: float
    u: np.ndarray      # non-decreasing samples at t = k * dt
    du: float          # half-width of the band each dimension should hold

    @property
    def duration(self) -> float:
        return self.dt * (len(self.u) - 1)

    def value(self, t: float) -> float:
        """Linear interpolation, clamped to the profile's ends."""
        x = t / self.dt
        k = int(math.floor(x))
        if k < 0:
            return float(self.u[0])
        if k >= len(self.u) - 1:
            return float(self.u[-1])
        frac = x - k
        return float(self.u[k] + frac * (self.u[k + 1] - self.u[k]))


def _hold_tail(u: np.ndarray, u_total: float, dt: float) -> np.ndarray:
    """Extend a profile that ends early at the rate it last moved."""
    if u[-1] >= u_total - 1e-12:
        out = u.copy()
        out[-1] = u_total
        return out
    increments = np.diff(u)
    moving = increments[increments > 1e-12]
    rate = float(moving[-1]) if len(moving) else u_total - float(u[-1])
    n_extra = max(1, math.ceil((u_total - float(u[-1])) / rate))
    tail = np.minimum(float(u[-1]) + rate * np.arange(1, n_extra + 1),
                      u_total)
    tail[-1] = u_total
    return np.concatenate((u, tail))


def _section_arrival_times(path: Path1D, traj: Trajectory1D) -> list[float]:
    """Times where the stitched trajectory consumes interior waypoints."""
    times: list[float] = []
    t = 0.0
    k = 1
    for seg in traj.segments:
        t += seg.duration
        if (k < len(path.waypoints) - 1
                and abs(seg.end.position - path.waypoints[k].position) <= 1e-9
                and abs(seg.end.velocity) <= 1e-9):
            times.append(t)
            k += 1
    return times


def _progress_samples(path: Path1D, traj: Trajectory1D,
                      dt: float) -> np.ndarray:
    """Travelled length of a section-ordered trajectory on the dt grid."""
    arrivals = _section_arrival_times(path, traj)
    total_t = traj.total_duration
    n = max(1, math.ceil(total_t / dt - 1e-9))
    out = np.empty(n + 1)
    for k in range(n + 1):
        t = min(k * dt, total_t)
        sec = min(bisect_right(arrivals, t), len(path.sections) - 1)
        state = traj.sample(t)
        out[k] = _clamped_s(path, state.position, sec)
    np.maximum.accumulate(out, out=out)
    return out


def _limits_per_dim(limits: KinematicLimits | Sequence[KinematicLimits],
                    dims: int) -> tuple[KinematicLimits, ...]:
    """Broadcast a single limit set or check a per-dimension sequence."""
    if isinstance(limits, KinematicLimits):
        return (limits,) * dims
    seq = tuple(limits)
    if len(seq) != dims:
        raise ValueError(
            f"got {len(seq)} limit sets for a {dims}-dimensional path")
    return seq


def initial_reference(mp: MultiPath,
                      limits: KinematicLimits | Sequence[KinematicLimits],
                      dt: float = DEFAULT_DT, du: float = DEFAULT_DU
                      ) -> tuple[ReferenceProfile, int]:
    """Seed the reference from the slowest dimension's optimal traversal."""
    per_dim = _limits_per_dim(limits, mp.dims)
    optimal: list[Trajectory1D | None] = []
    durations = []
    for i in range(mp.dims):
        path = mp.paths[i]
        if path is None:
            optimal.append(None)
            durations.append(0.0)
            continue
        traj = time_optimal_traversal(waypoint_acc_ranges(path, per_dim[i]),
                                      per_dim[i])
        optimal.append(traj)
        durations.append(traj.total_duration)
    slowest = int(np.argmax(durations))
    traj = optimal[slowest]
    if traj is None:
        raise DegeneratePathError("no dimension moves")
    s_grid = _progress_samples(mp.paths[slowest], traj, dt)
    scale = mp.total_s(slowest) / max(float(s_grid[-1]), EPS_POS)
    u = np.array([u_of_s(mp, slowest, min(s * scale, mp.total_s(slowest)))
                  for s in s_grid])
    np.maximum.accumulate(u, out=u)
    return ReferenceProfile(dt, _hold_tail(u, mp.u_total, dt), du), slowest


# -------------------------------------------------------------------------
# Tracking one dimension against the reference
# -------------------------------------------------------------------------

@dataclass(frozen=True)
class ViolationRegion:
    """A stretch of time a dimension spent outside the reference band."""

    t_start: float
    t_end: float
    kind: str                # "undershoot" or "overshoot"
    deviation: float = 0.0   # integrated |p - p_ref|, rad * s


def _band_regions(u_trace: np.ndarray,
                  ref: ReferenceProfile) -> list[ViolationRegion]:
    """Maximal runs of samples outside the reference band."""
    regions: list[ViolationRegion] = []
    kind: str | None = None
    start = 0
    for k, u in enumerate(u_trace):
        r = ref.value(k * ref.dt)
        if u < r - ref.du - 1e-9:
            here = "undershoot"
        elif u > r + ref.du + 1e-9:
            here = "overshoot"
        else:
            here = None
        if here != kind:
            if kind is not None:
                regions.append(ViolationRegion(start * ref.dt,
                                               (k - 1) * ref.dt, kind))
            kind = here
            start = k
    if kind is not None:
        regions.append(ViolationRegion(start * ref.dt,
                                       (len(u_trace) - 1) * ref.dt, kind))
    return regions


def _u_of_s_clamped(mp: MultiPath, i: int, s: float) -> float:
    return u_of_s(mp, i, min(max(s, 0.0), mp.total_s(i)))


def track_dimension(mp: MultiPath, i: int, ref: ReferenceProfile,
                    limits: KinematicLimits
                    ) -> tuple[Trajectory1D, np.ndarray,
                               list[ViolationRegion]]:
    """Traverse dimension ``i`` steering its progress after ``u_ref``.

    Each step reads the achievable progress bracket, maps it to joint
    progress, and picks the mapping factor whose step lands on the
    reference, clamped into the bracket.  A bracket entirely below the
    band forces full speed; entirely above forces the slowest step.  The
    returned regions are the stretches the realized progress spent
    outside the band.
    """
    path = mp.paths[i]
    rest = KinematicState(float(mp.samples[0, i]), 0.0, 0.0)
    if path is None:
        return (Trajectory1D.from_segments(rest, [(0.0, 0.0)]),
                np.array([mp.u_total]), [])
    if any(wp.acc_range is None for wp in path.waypoints):
        path = waypoint_acc_ranges(path, limits)
    ts = start_state(path)
    end_position = path.waypoints[-1].position
    last_section = len(path.sections) - 1
    pieces: list[tuple[float, float]] = []
    u_trace = [0.0]
    stall_steps = 0

    def choose(bounds) -> float:
        u_goal = ref.value(ts.t + ref.dt)
        u_lo = _u_of_s_clamped(mp, i, bounds.s_lower_dt)
        u_hi = _u_of_s_clamped(mp, i, bounds.s_upper_dt)
        if u_hi < u_goal - ref.du:
            return 1.0
        if u_lo > u_goal + ref.du:
            return 0.0
        width = bounds.s_upper_dt - bounds.s_lower_dt
        if width <= 1e-15:
            return 1.0
        target_s = s_of_u(mp, i, min(max(u_goal, u_lo), u_hi))
        return (target_s - bounds.s_lower_dt) / width

    while True:
        new_ts, _, chain = _step_slices(ts, choose, ref.dt, path, limits)
        if (chain.settled_at is not None
                and chain.section_index == last_section
                and abs(chain.position - end_position) <= EPS_SETTLE_P
                and abs(chain.velocity) <= EPS_V):
            moving = chain.pieces
            if chain.settled_at < ref.dt - 1e-9:
                moving = moving[:-1]
            pieces.extend(moving)
            ts = new_ts
            u_trace.append(_u_of_s_clamped(mp, i, ts.s))
            break
        pieces.extend(chain.pieces)
        progress = new_ts.s - ts.s
        ts = new_ts
        u_trace.append(_u_of_s_clamped(mp, i, ts.s))
        if (ts.section_index == last_section
                and abs(ts.state.position - end_position) <= EPS_SETTLE_P
                and abs(ts.state.velocity) <= EPS_V
                and abs(ts.state.acceleration) <= EPS_SETTLE_A):
            break
        if progress < EPS_PROGRESS:
            stall_steps += 1
            if stall_steps >= N_STALL:
                raise StallError(f"dimension {i} stopped tracking the "
                                 f"reference at s = {ts.s:.6f}")
        else:
            stall_steps = 0
    final = ts.state
    if (final.position != end_position or final.velocity != 0.0
            or final.acceleration != 0.0):
        closing = _plan_raw(final.position, final.velocity,
                            final.acceleration, end_position, 0.0, limits)
        if _pieces_valid(final.position, final.velocity, final.acceleration,
                         closing, limits, path.sections[-1].direction):
            pieces.extend(closing)
    trace = np.array(u_trace)
    np.maximum.accumulate(trace, out=trace)
    return (Trajectory1D.from_segments(rest, pieces), trace,
            _band_regions(trace, ref))


def violation_position_deviation(mp: MultiPath, i: int,
                                 u_trace: np.ndarray,
                                 ref: ReferenceProfile) -> list[float]:
    """Integrated position deviation of each out-of-band region, rad * s.

    The realized and reference coordinates are both read at matching
    joint progress, and their absolute difference is integrated by the
    trapezoidal rule over the region's time grid.
    """
    path = mp.paths[i]
    regions = _band_regions(u_trace, ref)
    if path is None or not regions:
        return [0.0] * len(regions)

    def coord(u: float) -> float:
        return p_of_s(path, min(s_of_u(mp, i, u), path.total_s))

    out = []
    for region in regions:
        k0 = int(round(region.t_start / ref.dt))
        k1 = int(round(region.t_end / ref.dt))
        gaps = np.array([abs(coord(float(u_trace[k]))
                             - coord(ref.value(k * ref.dt)))
                         for k in range(k0, k1 + 1)])
        out.append(float(np.trapezoid(gaps, dx=ref.dt)) if len(gaps) > 1
                   else 0.0)
    return out


def update_reference(ref: ReferenceProfile, worst: ViolationRegion | None,
                     achieved_u: np.ndarray) -> ReferenceProfile:
    """Slow (or advance) the reference over the worst region.

    Within the region, widened by a blend margin, the reference is
    replaced by the offending dimension's achieved progress shifted to
    join continuously; after it, the old reference resumes from the
    point where it first reaches the region's exit value, so the
    timeline stretches exactly as much as the region needs.
    """
    if worst is None:
        return ref
    n = len(ref.u)
    a = max(0, int(round(worst.t_start / ref.dt)) - BLEND_MARGIN)
    b = min(n - 1, int(round(worst.t_end / ref.dt)) + BLEND_MARGIN)
    if b <= a:
        return ref
    u_total = float(ref.u[-1])

    def ach(k: int) -> float:
        return float(achieved_u[min(k, len(achieved_u) - 1)])

    core = np.array([ach(k) for k in range(a, b + 1)])
    core += float(ref.u[a]) - core[0]
    np.maximum.accumulate(core, out=core)
    core = np.minimum(core, u_total)
    exit_value = float(core[-1])
    j = int(np.searchsorted(ref.u, exit_value, side="left"))
    if j <= 0:
        t_join = 0.0
    elif j >= n:
        t_join = ref.duration
    else:
        spread = float(ref.u[j] - ref.u[j - 1])
        frac = (exit_value - float(ref.u[j - 1])) / spread
        t_join = ref.dt * (j - 1 + frac)
    tail = []
    t = t_join + ref.dt
    while t < ref.duration - 1e-9:
        tail.append(ref.value(t))
        t += ref.dt
    tail.append(u_total)
    u = np.concatenate((ref.u[:a], core, np.array(tail)))
    np.maximum.accumulate(u, out=u)
    return ReferenceProfile(ref.dt, u, ref.du)


# -------------------------------------------------------------------------
# The iteration loop and deviation metrics
# -------------------------------------------------------------------------

@dataclass(frozen=True)
class IterationResult:
    """One full tracking pass of every dimension against a reference."""

    trajectories: tuple[Trajectory1D, ...]
    u_traces: tuple[np.ndarray, ...]
    violations: tuple[tuple[ViolationRegion, ...], ...]
    deviation_mean: float
    deviation_max: float
    duration: float
    error: str | None = None


@dataclass(frozen=True)
class TrackingOutcome:
    iterations: tuple[IterationResult, ...]
    best_index: int

    @property
    def best(self) -> IterationResult:
        return self.iterations[self.best_index]


def _pad_to(traj: Trajectory1D, duration: float) -> Trajectory1D:
    pad = duration - traj.total_duration
    if pad <= 1e-12:
        return traj
    hold = JerkSegment(traj.segments[-1].end, 0.0, pad)
    return Trajectory1D(traj.segments + (hold,), duration)


def _deviation_stats(mp: MultiPath, ref: ReferenceProfile,
                     u_traces: Sequence[np.ndarray]) -> tuple[float, float]:
    """Mean and max joint-space distance from the reference position."""
    n = max(len(trace) for trace in u_traces)
    gaps = np.zeros(n)
    for i in range(mp.dims):
        path = mp.paths[i]
        if path is None:
            continue
        trace = u_traces[i]

        def coord(u: float) -> float:
            return p_of_s(path, min(s_of_u(mp, i, u), path.total_s))

        for k in range(n):
            u_here = float(trace[min(k, len(trace) - 1)])
            gap = coord(u_here) - coord(ref.value(k * ref.dt))
            gaps[k] += gap * gap
    gaps = np.sqrt(gaps)
    return float(gaps.mean()), float(gaps.max())


def iterate(mp: MultiPath, limits: KinematicLimits | Sequence[KinematicLimits],
            dt: float = DEFAULT_DT, du: float = DEFAULT_DU,
            n_iters: int = DEFAULT_ITERS) -> TrackingOutcome:
    """Run the full tracking scheme and pick the best iteration.

    The first pass replays the slowest dimension's optimal traversal as
    its own track; every later pass tracks all dimensions against the
    current reference, then slows the reference over the region with the
    largest integrated position deviation.  Once no region remains the
    outcome repeats, so remaining passes are replicated without rework.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be at least 1")
    per_dim = _limits_per_dim(limits, mp.dims)
    ref, slowest = initial_reference(mp, per_dim, dt, du)
    iterations: list[IterationResult] = []
    for it in range(n_iters):
        trajectories: list[Trajectory1D] = []
        u_traces: list[np.ndarray] = []
        violations: list[tuple[ViolationRegion, ...]] = []
        try:
            for i in range(mp.dims):
                if it == 0 and i == slowest:
                    traj = time_optimal_traversal(
                        waypoint_acc_ranges(mp.paths[i], per_dim[i]),
                        per_dim[i])
                    trajectories.append(traj)
                    u_traces.append(ref.u.copy())
                    violations.append(())
                    continue
                traj, trace, regions = track_dimension(mp, i, ref, per_dim[i])
                deviations = violation_position_deviation(mp, i, trace, ref)
                regions = [ViolationRegion(r.t_start, r.t_end, r.kind, d)
                           for r, d in zip(regions, deviations)]
                trajectories.append(traj)
                u_traces.append(trace)
                violations.append(tuple(regions))
        except PathParamError as exc:
            iterations.append(IterationResult(
                (), (), (), math.inf, math.inf, 0.0,
                f"{type(exc).__name__}: {exc}"))
            break
        duration = max(traj.total_duration for traj in trajectories)
        trajectories = [_pad_to(traj, duration) for traj in trajectories]
        mean_dev, max_dev = _deviation_stats(mp, ref, u_traces)
        iterations.append(IterationResult(
            tuple(trajectories), tuple(u_traces), tuple(violations),
            mean_dev, max_dev, duration))
        worst: tuple[float, int, ViolationRegion] | None = None
        for i, regions in enumerate(violations):
            for region in regions:
                if worst is None or region.deviation > worst[0]:
                    worst = (region.deviation, i, region)
        if worst is None or worst[0] <= 1e-12:
            while len(iterations) < n_iters:
                iterations.append(iterations[-1])
            break
        new_ref = update_reference(ref, worst[2], u_traces[worst[1]])
        if len(new_ref.u) == len(ref.u) and np.array_equal(new_ref.u, ref.u):
            # The reference reached a fixed point, so every further pass
            # would reproduce this one exactly; replicate instead.
            while len(iterations) < n_iters:
                iterations.append(iterations[-1])
            break
        ref = new_ref
    scores = [it.deviation_mean for it in iterations]
    return TrackingOutcome(tuple(iterations), int(np.argmin(scores)))


@dataclass(frozen=True)
class DeviationStats:
    mean: float
    max: float


def path_deviation_points(mp: MultiPath,
                          points: Sequence[Sequence[float]]) -> DeviationStats:
    """Deviation of sampled joint positions from the reference polyline.

    The samples' own cumulative arc length is computed and every sample is
    compared against the polyline point at the same arc length, so the
    metric is insensitive to timing and only measures geometric departure.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != mp.dims:
        raise ValueError(f"points must form an (n, {mp.dims}) array")
    if pts.shape[0] < 2:
        raise ValueError("at least two samples required")
    steps = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    u_gen = np.concatenate(([0.0], np.cumsum(steps)))
    np.clip(u_gen, 0.0, mp.u_total, out=u_gen)
    gaps = np.array([float(np.linalg.norm(pts[k] - _point_at_u(mp, u_gen[k])))
                     for k in range(len(pts))])
    return DeviationStats(float(gaps.mean()), float(gaps.max()))


def path_deviation(mp: MultiPath,
                   trajectories: Sequence[Trajectory1D]) -> DeviationStats:
    """Distance between the traced joint curve and the reference polyline.

    The joint trajectory is densely sampled and handed to
    :func:`path_deviation_points`.
    """
    if len(trajectories) != mp.dims:
        raise ValueError("one trajectory per path dimension required")
    total_t = max(traj.total_duration for traj in trajectories)
    n = max(MIN_DEVIATION_SAMPLES, math.ceil(total_t / DEFAULT_DT)) + 1
    times = np.linspace(0.0, total_t, n)
    points = np.empty((n, mp.dims))
    for i, traj in enumerate(trajectories):
        points[:, i] = [traj.sample(t).position for t in times]
    return path_deviation_points(mp, points)
