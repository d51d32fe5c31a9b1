"""One-dimensional constant-jerk kinematics.

States, limits, piecewise-constant-jerk trajectories, closed-form integration
and extrema, and validation against limits.  Everything here is immutable and
pure; the planning layers build on these primitives.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Iterable, Literal

# Default tolerances used across the package.
EPS_TIME = 1e-9        # seconds; times closer than this are the same instant
EPS_LIMIT = 1e-8       # limit-violation tolerance in each quantity's units
EPS_CONTINUITY = 1e-9  # max state mismatch between adjacent segments
EPS_DURATION = 1e-12   # max mismatch between summed and stored durations

RequiredDirection = Literal["nonneg", "nonpos", "any"]


def _require_finite(name: str, value: float) -> None:
    if not math.isfinite(value):
        raise ValueError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True, slots=True)
class KinematicState:
    """Position, velocity and acceleration of one dimension at one instant."""

    position: float
    velocity: float
    acceleration: float

    def __post_init__(self) -> None:
        _require_finite("position", self.position)
        _require_finite("velocity", self.velocity)
        _require_finite("acceleration", self.acceleration)


@dataclass(frozen=True, slots=True)
class KinematicLimits:
    """Symmetric or asymmetric bounds on velocity, acceleration and jerk.

    Each (min, max) pair must strictly straddle zero so that rest is always
    an interior point of the feasible set.
    """

    v_min: float
    v_max: float
    a_min: float
    a_max: float
    j_min: float
    j_max: float

    def __post_init__(self) -> None:
        for name in ("v_min", "v_max", "a_min", "a_max", "j_min", "j_max"):
            _require_finite(name, getattr(self, name))
        for lo, hi in ((self.v_min, self.v_max),
                       (self.a_min, self.a_max),
                       (self.j_min, self.j_max)):
            if not (lo < 0.0 < hi):
                raise ValueError(
                    f"limit pair ({lo}, {hi}) must strictly straddle zero")

    @classmethod
    def symmetric(cls, v: float, a: float, j: float) -> KinematicLimits:
        """Build limits of the form [-v, v], [-a, a], [-j, j]."""
        return cls(-v, v, -a, a, -j, j)

    def scaled_jerk(self, factor: float) -> KinematicLimits:
        """Return a copy with both jerk bounds multiplied by ``factor``."""
        if factor <= 0.0:
            raise ValueError(f"jerk factor must be positive, got {factor}")
        return KinematicLimits(self.v_min, self.v_max, self.a_min, self.a_max,
                               self.j_min * factor, self.j_max * factor)


def integrate_segment(state: KinematicState, jerk: float,
                      dt: float) -> KinematicState:
    """Advance ``state`` by ``dt`` seconds under constant ``jerk``.

    Closed form; no numeric integration anywhere in the package.
    """
    if dt < 0.0:
        raise ValueError(f"dt must be non-negative, got {dt}")
    _require_finite("jerk", jerk)
    _require_finite("dt", dt)
    p, v, a = state.position, state.velocity, state.acceleration
    return KinematicState(
        p + v * dt + 0.5 * a * dt * dt + jerk * dt * dt * dt / 6.0,
        v + a * dt + 0.5 * jerk * dt * dt,
        a + jerk * dt,
    )


@dataclass(frozen=True, slots=True)
class JerkSegment:
    """A constant-jerk piece of a trajectory, anchored at its start state."""

    start: KinematicState
    jerk: float
    duration: float

    def __post_init__(self) -> None:
        _require_finite("jerk", self.jerk)
        if not (self.duration >= 0.0 and math.isfinite(self.duration)):
            raise ValueError(f"duration must be >= 0, got {self.duration}")

    def state_at(self, tau: float) -> KinematicState:
        """State ``tau`` seconds into the segment, 0 <= tau <= duration."""
        return integrate_segment(self.start, self.jerk, tau)

    @property
    def end(self) -> KinematicState:
        return self.state_at(self.duration)

    def velocity_range(self) -> tuple[float, float]:
        """Exact (min, max) of velocity over the segment.

        Velocity is quadratic in time, so the extrema sit at the endpoints or
        at the interior instant where acceleration crosses zero.
        """
        v0 = self.start.velocity
        v1 = self.end.velocity
        lo, hi = (v0, v1) if v0 <= v1 else (v1, v0)
        if self.jerk != 0.0:
            t_star = -self.start.acceleration / self.jerk
            if 0.0 < t_star < self.duration:
                v_star = self.state_at(t_star).velocity
                lo = min(lo, v_star)
                hi = max(hi, v_star)
        return lo, hi

    def acceleration_range(self) -> tuple[float, float]:
        """Exact (min, max) of acceleration over the segment (affine)."""
        a0 = self.start.acceleration
        a1 = a0 + self.jerk * self.duration
        return (a0, a1) if a0 <= a1 else (a1, a0)


@dataclass(frozen=True, slots=True)
class TrajectoryExtrema:
    velocity_min: float
    velocity_max: float
    acceleration_min: float
    acceleration_max: float


@dataclass(frozen=True)
class Trajectory1D:
    """An ordered chain of constant-jerk segments for one dimension.

    Construction verifies state continuity between adjacent segments (within
    ``EPS_CONTINUITY``) and that ``total_duration`` equals the sum of segment
    durations (within ``EPS_DURATION``).  Prefer :meth:`from_segments`, which
    chains end states exactly.
    """

    segments: tuple[JerkSegment, ...]
    total_duration: float
    _offsets: tuple[float, ...] = field(repr=False, compare=False, default=())

    def __post_init__(self) -> None:
        if not self.segments:
            raise ValueError("a trajectory needs at least one segment")
        total = 0.0
        offsets = []
        prev_end: KinematicState | None = None
        for seg in self.segments:
            if prev_end is not None:
                gap = max(abs(prev_end.position - seg.start.position),
                          abs(prev_end.velocity - seg.start.velocity),
                          abs(prev_end.acceleration - seg.start.acceleration))
                if gap > EPS_CONTINUITY:
                    raise ValueError(
                        f"segment boundary discontinuity of {gap:g}")
            offsets.append(total)
            total += seg.duration
            prev_end = seg.end
        if abs(total - self.total_duration) > EPS_DURATION:
            raise ValueError(
                f"total_duration {self.total_duration!r} does not match "
                f"summed durations {total!r}")
        object.__setattr__(self, "_offsets", tuple(offsets))

    @classmethod
    def from_segments(cls, start: KinematicState,
                      pieces: Iterable[tuple[float, float]]) -> Trajectory1D:
        """Chain ``(jerk, duration)`` pieces exactly from ``start``.

        Zero-duration pieces are dropped; an empty chain yields a single
        zero-duration segment holding ``start``.
        """
        segments = []
        state = start
        total = 0.0
        for jerk, dt in pieces:
            if dt <= 0.0:
                continue
            seg = JerkSegment(state, jerk, dt)
            segments.append(seg)
            state = seg.end
            total += dt
        if not segments:
            segments.append(JerkSegment(start, 0.0, 0.0))
        return cls(tuple(segments), total)

    @property
    def start_state(self) -> KinematicState:
        return self.segments[0].start

    @property
    def final_state(self) -> KinematicState:
        return self.segments[-1].end

    def sample(self, t: float) -> KinematicState:
        """State at time ``t``; times past the end hold the final state."""
        if t < -EPS_TIME:
            raise ValueError(f"sample time must be >= 0, got {t}")
        if t >= self.total_duration:
            return self.final_state
        t = max(t, 0.0)
        idx = bisect.bisect_right(self._offsets, t) - 1
        seg = self.segments[idx]
        return seg.state_at(min(t - self._offsets[idx], seg.duration))

    def jerk_at(self, t: float) -> float:
        """Jerk of the segment active at ``t``; zero past the end.

        At an internal boundary the segment starting there wins, matching
        the right-continuous convention of piecewise-constant jerk.
        """
        if t < -EPS_TIME:
            raise ValueError(f"sample time must be >= 0, got {t}")
        if t >= self.total_duration:
            return 0.0
        idx = bisect.bisect_right(self._offsets, max(t, 0.0)) - 1
        return self.segments[idx].jerk

    def extrema(self) -> TrajectoryExtrema:
        """Exact velocity and acceleration ranges over the whole trajectory."""
        v_lo = math.inf
        v_hi = -math.inf
        a_lo = math.inf
        a_hi = -math.inf
        for seg in self.segments:
            lo, hi = seg.velocity_range()
            v_lo = min(v_lo, lo)
            v_hi = max(v_hi, hi)
            lo, hi = seg.acceleration_range()
            a_lo = min(a_lo, lo)
            a_hi = max(a_hi, hi)
        return TrajectoryExtrema(v_lo, v_hi, a_lo, a_hi)


@dataclass(frozen=True, slots=True)
class ValidityReport:
    """Outcome of checking a trajectory against limits and a direction."""

    valid: bool
    violated_quantity: Literal["velocity", "acceleration",
                               "jerk", "direction"] | None
    worst_margin: float


def validate(traj: Trajectory1D, limits: KinematicLimits,
             required_direction: RequiredDirection = "any",
             tol: float = EPS_LIMIT) -> ValidityReport:
    """Check limits and, optionally, a velocity sign over a whole trajectory.

    All checks use the closed-form per-segment extrema, so the verdict does
    not depend on any sampling rate.  Quantities are checked in a fixed order
    (velocity, acceleration, jerk, direction) and the first violation beyond
    ``tol`` is reported; ``worst_margin`` is the largest excess over all
    quantities either way (negative means comfortably inside).
    """
    ext = traj.extrema()
    j_lo = min(seg.jerk for seg in traj.segments)
    j_hi = max(seg.jerk for seg in traj.segments)
    excesses: list[tuple[str, float]] = [
        ("velocity", max(limits.v_min - ext.velocity_min,
                         ext.velocity_max - limits.v_max)),
        ("acceleration", max(limits.a_min - ext.acceleration_min,
                             ext.acceleration_max - limits.a_max)),
        ("jerk", max(limits.j_min - j_lo, j_hi - limits.j_max)),
    ]
    if required_direction == "nonneg":
        excesses.append(("direction", -ext.velocity_min))
    elif required_direction == "nonpos":
        excesses.append(("direction", ext.velocity_max))
    worst = max(excess for _, excess in excesses)
    for quantity, excess in excesses:
        if excess > tol:
            return ValidityReport(False, quantity, excess)  # type: ignore[arg-type]
    return ValidityReport(True, None, worst)
