"""Fixed-step traversal of a one-dimensional path with bounded progress.

Each control step of length dt computes two trajectories from the current
state: the lower trajectory (braking, or the gentlest arrival the state
still allows) and the upper trajectory (time-optimal continuation toward
the next waypoint at its strongest feasible target acceleration).  Sampling
both at dt brackets the reachable path progress, and a mapping factor
m in [0, 1] selects the achieved progress inside that bracket:

    s_desired = s_lower + m * (s_upper - s_lower)

With m = 1 every step follows the optimal continuation; with m = 0 the
motion only ever brakes; intermediate values interpolate, which is what a
multi-dimensional coordinator modulates to keep dimensions synchronized.

The interpolating slice is found directly rather than by searching a
trajectory family: a constant-jerk slice over the horizon has a closed-form
jerk for any desired displacement, and when its terminal acceleration
would clip, a jerk-then-hold slice (extreme jerk for a solvable time, then
zero) reshapes it.  Both are validated against limits and direction; the
rare leftovers fall back to a bisection over waypoint target accelerations
and finally to the nearest bracket endpoint, which only matters where the
bracket is too narrow to distinguish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from .errors import InfeasibleTargetError, SearchContradictionError, StallError
from .kinematics import (
    EPS_LIMIT,
    EPS_TIME,
    KinematicLimits,
    KinematicState,
    Trajectory1D,
)
from .otg import Piece, _displacement, _plan_raw, _transition
from .path1d import (
    Path1D,
    _back_off_target,
    _pieces_valid,
    _plan_arrival,
    min_target_acc,
    p_of_s,
    waypoint_acc_ranges,
)

DEFAULT_DT = 0.0025       # control period, s
EPS_S = 1e-6              # progress match tolerance, rad
EPS_V = 1e-5              # waypoint / settle velocity tolerance, rad/s
EPS_SETTLE_P = 1e-6       # settle position tolerance, rad
EPS_SETTLE_A = 1e-3       # settle acceleration tolerance, rad/s^2
EPS_PROGRESS = 1e-9       # minimum progress counted against the stall guard
EPS_ARRIVE = 1e-6         # absorb truncated arrivals this close, rad
N_STALL = 10_000          # steps without progress before aborting
MAX_CHAIN_LINKS = 64      # plan legs a single horizon may cross
SLICE_BISECT_ITERS = 25


@dataclass(frozen=True, slots=True)
class TraversalState:
    """Where a traversal currently is: time, kinematic state, and the
    section index plus travelled path length locating it on the path."""

    t: float
    state: KinematicState
    section_index: int
    s: float


@dataclass(frozen=True, slots=True)
class StepBounds:
    """Reachable progress bracket for one control step."""

    s_lower_dt: float
    s_upper_dt: float
    lower_state: KinematicState
    upper_state: KinematicState


def start_state(path: Path1D) -> TraversalState:
    """Traversal state at rest on the first waypoint."""
    p0 = path.waypoints[0].position
    return TraversalState(0.0, KinematicState(p0, 0.0, 0.0), 0, 0.0)


def _integrate(p: float, v: float, a: float,
               pieces: list[Piece]) -> tuple[float, float, float]:
    for jerk, dt in pieces:
        p += dt * (v + dt * (0.5 * a + dt * jerk / 6.0))
        v += dt * (a + 0.5 * jerk * dt)
        a += jerk * dt
    return p, v, a


def _clamped_s(path: Path1D, position: float, sec: int) -> float:
    """Travelled length of a position bookkept to section ``sec``; plan
    residuals may put it a hair outside, so clamp instead of raising."""
    section = path.sections[sec]
    s = section.start_s + section.direction * (position - section.p_from)
    return min(max(s, section.start_s), section.end_s)


# -------------------------------------------------------------------------
# Plan legs
# -------------------------------------------------------------------------

def _upper_leg(p: float, v: float, a: float, sec: int, path: Path1D,
               limits: KinematicLimits) -> tuple[list[Piece], float | None]:
    """Time-optimal continuation toward the end of section ``sec``.

    Targets the waypoint's strongest feasible acceleration, backing the
    target off when the live state is too hot for the full value and
    braking only as a last resort.  Returns the jerk pieces and the target
    acceleration when they arrive at the waypoint (None for a brake).
    """
    section = path.sections[sec]
    waypoint = path.waypoints[sec + 1]
    a_target = waypoint.acc_range.a_max
    pieces = _plan_arrival(p, v, a, waypoint.position, a_target, limits,
                           section.direction)
    if pieces is not None:
        return pieces, a_target
    try:
        a_target = _back_off_target(KinematicState(p, v, a), waypoint,
                                    section, limits)
    except SearchContradictionError:
        a_target = None
    if a_target is not None:
        pieces = _plan_arrival(p, v, a, waypoint.position, a_target, limits,
                               section.direction)
        if pieces is not None:
            return pieces, a_target
    return _transition(v, a, 0.0, 0.0, limits.a_min, limits.a_max,
                       limits.j_min, limits.j_max), None


def _lower_leg(p: float, v: float, a: float, sec: int, path: Path1D,
               limits: KinematicLimits) -> tuple[list[Piece], float | None]:
    """Gentlest continuation: brake if the stop stays inside the section,
    otherwise the weakest feasible arrival at the waypoint."""
    section = path.sections[sec]
    waypoint = path.waypoints[sec + 1]
    brake = _transition(v, a, 0.0, 0.0, limits.a_min, limits.a_max,
                        limits.j_min, limits.j_max)
    if not brake:
        return [], None
    if _pieces_valid(p, v, a, brake, limits, section.direction, EPS_LIMIT):
        end, _, _ = _integrate(p, v, a, brake)
        lo = min(section.p_from, section.p_to) - 1e-9
        hi = max(section.p_from, section.p_to) + 1e-9
        if lo <= end <= hi:
            return brake, None
    a_target = min_target_acc(KinematicState(p, v, a), section,
                              waypoint, limits)
    pieces = _plan_arrival(p, v, a, waypoint.position, a_target, limits,
                           section.direction)
    if pieces is None:
        pieces = _plan_raw(p, v, a, waypoint.position, a_target, limits)
    return pieces, a_target


# -------------------------------------------------------------------------
# Horizon chains
# -------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class _Chain:
    pieces: list[Piece]
    position: float
    velocity: float
    acceleration: float
    section_index: int
    s: float
    settled_at: float | None  # time within the horizon when motion ended
    duration: float  # horizon, or slightly more when an arrival absorbs


def _extend(ts: TraversalState, path: Path1D, limits: KinematicLimits,
            horizon: float,
            leg: Callable[..., tuple[list[Piece], float | None]]) -> _Chain:
    """Chain plan legs from ``ts`` until ``horizon`` is covered.

    A leg arriving at a waypoint snaps the replanning state to the exact
    waypoint boundary state and advances the section; a leg ending at rest
    mid-path, or arrival at the final waypoint, holds for the remaining
    time.  The last leg is truncated at the horizon, except when the
    truncation point would sit within a hair of the leg's waypoint: cut
    there, the state is committed to an arrival that no fresh plan can
    reproduce, so the chain runs slightly long and lands on the arrival
    state itself.
    """
    p, v, a = ts.state.position, ts.state.velocity, ts.state.acceleration
    sec = ts.section_index
    last = len(path.sections) - 1
    out: list[Piece] = []
    remaining = horizon
    duration = horizon
    settled = None
    for _ in range(MAX_CHAIN_LINKS):
        if remaining <= EPS_TIME:
            remaining = max(remaining, 0.0)
            break
        pieces, a_target = leg(p, v, a, sec, path, limits)
        total = sum(dt for _, dt in pieces)
        if total <= EPS_TIME:
            settled = horizon - remaining
            out.append((0.0, remaining))
            remaining = 0.0
            break
        if total <= remaining + EPS_TIME:
            out.extend(pieces)
            remaining = max(remaining - total, 0.0)
            if a_target is None:
                p, v, a = _integrate(p, v, a, pieces)
            else:
                p, v, a = path.waypoints[sec + 1].position, 0.0, a_target
                if sec == last:
                    settled = horizon - remaining
                    if remaining > EPS_TIME:
                        out.append((0.0, remaining))
                    remaining = 0.0
                    break
                sec += 1
            continue
        clipped: list[Piece] = []
        left = remaining
        for jerk, dt in pieces:
            if dt >= left:
                clipped.append((jerk, left))
                left = 0.0
                break
            clipped.append((jerk, dt))
            left -= dt
        ep, ev, ea = _integrate(p, v, a, clipped)
        overshoot = total - remaining
        if (a_target is not None and overshoot <= horizon
                and abs(path.waypoints[sec + 1].position - ep) <= EPS_ARRIVE):
            out.extend(pieces)
            duration = horizon + overshoot
            p, v, a = path.waypoints[sec + 1].position, 0.0, a_target
            if sec == last:
                settled = duration
            else:
                sec += 1
        else:
            out.extend(clipped)
            p, v, a = ep, ev, ea
        remaining = 0.0
        break
    else:
        raise StallError("horizon crossed too many plan legs")
    return _Chain(out, p, v, a, sec, _clamped_s(path, p, sec), settled,
                  duration)


# -------------------------------------------------------------------------
# Interpolating slices
# -------------------------------------------------------------------------

def _slice_jerk_hold(extra: float, h: float,
                     jerk: float) -> list[Piece] | None:
    """Extreme jerk for tau, then zero: displacement beyond coasting is
    jerk * tau * g(tau) with g(tau) = h^2/2 - h*tau/2 + tau^2/6, strictly
    increasing in tau; solved by bisection on [0, h]."""
    target = extra / jerk
    if target < 0.0:
        return None

    def gain(tau: float) -> float:
        return tau * (0.5 * h * h - 0.5 * h * tau + tau * tau / 6.0)

    if target > gain(h):
        return None
    lo, hi = 0.0, h
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if gain(mid) < target:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    return [(jerk, tau), (0.0, h - tau)]


def _slice_on_section(p: float, v: float, a: float, pieces: list[Piece],
                      path: Path1D, sec: int,
                      limits: KinematicLimits) -> bool:
    """Limits, direction, containment, and recoverability of a slice."""
    section = path.sections[sec]
    if not _pieces_valid(p, v, a, pieces, limits, section.direction,
                         EPS_LIMIT):
        return False
    end, ev, ea = _integrate(p, v, a, pieces)
    lo = min(section.p_from, section.p_to) - 1e-9
    hi = max(section.p_from, section.p_to) + 1e-9
    if not lo <= end <= hi:
        return False
    # The slice must not commit the motion past the waypoint.  States on a
    # planned trajectory always keep a feasible continuation, but a slice
    # matches position only, and near a waypoint its endpoint can carry
    # more speed than any recoverable state at that position.  Accept the
    # endpoint when it can still stop inside the section, or failing that
    # when some waypoint arrival remains feasible.
    brake = _transition(ev, ea, 0.0, 0.0, limits.a_min, limits.a_max,
                        limits.j_min, limits.j_max)
    if _pieces_valid(end, ev, ea, brake, limits, section.direction,
                     EPS_LIMIT):
        stop = end + _displacement(ev, ea, brake)
        if lo <= stop <= hi:
            return True
    try:
        min_target_acc(KinematicState(end, ev, ea), section,
                       path.waypoints[sec + 1], limits)
    except (InfeasibleTargetError, ValueError):
        return False
    return True


def _slice_in_section(ts: TraversalState, path: Path1D,
                      limits: KinematicLimits, h: float,
                      s_desired: float) -> _Chain | None:
    """Slice staying on the current section whose displacement at the
    horizon matches ``s_desired`` exactly."""
    p, v, a = ts.state.position, ts.state.velocity, ts.state.acceleration
    p_desired = p_of_s(path, s_desired)
    extra = p_desired - (p + v * h + 0.5 * a * h * h)
    pieces: list[Piece] | None = [(6.0 * extra / (h * h * h), h)]
    jerk = pieces[0][0]
    if not limits.j_min - EPS_LIMIT <= jerk <= limits.j_max + EPS_LIMIT:
        pieces = None
    elif not _slice_on_section(p, v, a, pieces, path, ts.section_index,
                               limits):
        pieces = None
    if pieces is None:
        extreme = limits.j_max if extra > 0.0 else limits.j_min
        pieces = _slice_jerk_hold(extra, h, extreme)
        if pieces is not None and not _slice_on_section(
                p, v, a, pieces, path, ts.section_index, limits):
            pieces = None
    if pieces is None:
        return None
    ep, ev, ea = _integrate(p, v, a, pieces)
    return _Chain(pieces, ep, ev, ea, ts.section_index,
                  _clamped_s(path, ep, ts.section_index), None, h)


def _slice_target_bisect(ts: TraversalState, path: Path1D,
                         limits: KinematicLimits, h: float,
                         s_desired: float) -> _Chain | None:
    """Corner-case net: bisect the waypoint target acceleration magnitude
    and take the plan whose progress at the horizon is closest."""
    section = path.sections[ts.section_index]
    waypoint = path.waypoints[ts.section_index + 1]
    state = ts.state
    try:
        weakest = min_target_acc(state, section, waypoint, limits)
    except (InfeasibleTargetError, ValueError):
        return None
    strongest = waypoint.acc_range.a_max
    sign = 1.0 if strongest >= 0.0 else -1.0
    lo_mag, hi_mag = abs(weakest), abs(strongest)
    if hi_mag < lo_mag:
        return None

    def probe(mag: float) -> _Chain | None:
        pieces = _plan_raw(state.position, state.velocity,
                           state.acceleration, waypoint.position,
                           sign * mag, limits)
        if not _pieces_valid(state.position, state.velocity,
                             state.acceleration, pieces, limits,
                             section.direction, EPS_LIMIT):
            return None

        def fixed_leg(p, v, a, sec, pth, lm, _pieces=pieces, _mag=mag,
                      _start=ts.section_index):
            if sec == _start and p == state.position:
                return _pieces, sign * _mag
            return _upper_leg(p, v, a, sec, pth, lm)

        return _extend(ts, path, limits, h, fixed_leg)

    best: _Chain | None = None
    best_err = math.inf
    for _ in range(SLICE_BISECT_ITERS):
        mid = 0.5 * (lo_mag + hi_mag)
        chain = probe(mid)
        if chain is not None:
            err = chain.s - s_desired
            if abs(err) < best_err:
                best, best_err = chain, abs(err)
            if abs(err) <= 0.1 * EPS_S:
                break
        if hi_mag - lo_mag <= 1e-12:
            break
        if chain is None or chain.s - s_desired < 0.0:
            lo_mag = mid
        else:
            hi_mag = mid
    return best


# -------------------------------------------------------------------------
# Public operations
# -------------------------------------------------------------------------

def upper_trajectory(ts: TraversalState, path: Path1D,
                     limits: KinematicLimits) -> Trajectory1D:
    """Optimal continuation from ``ts`` to the end of its section."""
    pieces, _ = _upper_leg(ts.state.position, ts.state.velocity,
                           ts.state.acceleration, ts.section_index,
                           path, limits)
    return Trajectory1D.from_segments(ts.state, pieces)


def lower_trajectory(ts: TraversalState, path: Path1D,
                     limits: KinematicLimits) -> Trajectory1D:
    """Gentlest continuation from ``ts``: a brake that stays on the
    section, or the weakest feasible waypoint arrival."""
    pieces, _ = _lower_leg(ts.state.position, ts.state.velocity,
                           ts.state.acceleration, ts.section_index,
                           path, limits)
    return Trajectory1D.from_segments(ts.state, pieces)


def _chain_to_ts(ts: TraversalState, chain: _Chain) -> TraversalState:
    return TraversalState(ts.t + chain.duration,
                          KinematicState(chain.position, chain.velocity,
                                         chain.acceleration),
                          chain.section_index, chain.s)


def _step_slices(ts: TraversalState,
                 m: float | Callable[[StepBounds], float], dt: float,
                 path: Path1D, limits: KinematicLimits
                 ) -> tuple[TraversalState, StepBounds, _Chain]:
    if not callable(m) and not 0.0 <= m <= 1.0:
        raise ValueError(f"mapping factor {m} outside [0, 1]")
    if not dt > 0.0:
        raise ValueError("step length must be positive")
    if path.waypoints[ts.section_index + 1].acc_range is None:
        raise ValueError("path has no acceleration ranges; run "
                         "waypoint_acc_ranges first")
    upper = _extend(ts, path, limits, dt, _upper_leg)
    lower = _extend(ts, path, limits, dt, _lower_leg)
    bounds = StepBounds(
        lower.s, upper.s,
        KinematicState(lower.position, lower.velocity, lower.acceleration),
        KinematicState(upper.position, upper.velocity, upper.acceleration))
    if callable(m):
        m = min(1.0, max(0.0, float(m(bounds))))

    s_desired = lower.s + m * (upper.s - lower.s)
    d_lower = s_desired - lower.s
    d_upper = upper.s - s_desired
    chosen: _Chain | None = None
    if m >= 1.0:
        chosen = upper
    elif m <= 0.0:
        chosen = lower
    elif min(d_lower, d_upper) <= 0.1 * EPS_S:
        chosen = upper if d_upper <= d_lower else lower
    if chosen is not None:
        return _chain_to_ts(ts, chosen), bounds, chosen

    if s_desired < path.sections[ts.section_index].end_s - EPS_S:
        chosen = _slice_in_section(ts, path, limits, dt, s_desired)
    if chosen is None:
        chosen = _slice_target_bisect(ts, path, limits, dt, s_desired)
    if chosen is None or abs(chosen.s - s_desired) > EPS_S:
        # Nearest bracket endpoint: the response is flat here, and a flat
        # response only occurs when the bracket itself is narrow.
        fallback = upper if d_upper <= d_lower else lower
        if chosen is None or (abs(fallback.s - s_desired)
                              < abs(chosen.s - s_desired)):
            chosen = fallback
    return _chain_to_ts(ts, chosen), bounds, chosen


def step(ts: TraversalState, m: float, dt: float, path: Path1D,
         limits: KinematicLimits) -> tuple[TraversalState, StepBounds]:
    """Advance one control period, steering progress with ``m``.

    Computes the step's progress bracket, then advances along a slice
    whose progress at ``dt`` matches the mapped value inside it.  The
    section index advances when the slice consumes a waypoint, with the
    state snapped to the exact waypoint boundary state at that instant.
    """
    new_ts, bounds, _ = _step_slices(ts, m, dt, path, limits)
    return new_ts, bounds


def run_with_mapping(path: Path1D, limits: KinematicLimits,
                     m_schedule: Callable[[float], float] | float,
                     dt: float = DEFAULT_DT) -> Trajectory1D:
    """Traverse the whole path, steering each step by ``m_schedule(t)``.

    ``m_schedule`` may also be a plain number for a constant factor.
    Returns the stitched trajectory from rest at the first waypoint to
    rest at the last.  Raises StallError when progress stops for
    ``N_STALL`` consecutive steps before the end is reached, which is the
    guaranteed outcome of m = 0 from rest.
    """
    if callable(m_schedule):
        schedule = m_schedule
    else:
        m_const = float(m_schedule)
        schedule = lambda _t: m_const
    if any(wp.acc_range is None for wp in path.waypoints):
        path = waypoint_acc_ranges(path, limits)
    ts = start_state(path)
    end_position = path.waypoints[-1].position
    last_section = len(path.sections) - 1
    pieces: list[Piece] = []
    stall_steps = 0
    while True:
        m = float(schedule(ts.t))
        if not math.isfinite(m):
            raise ValueError(f"mapping schedule returned {m}")
        m = min(1.0, max(0.0, m))
        new_ts, _, chain = _step_slices(ts, m, dt, path, limits)
        if (chain.settled_at is not None
                and chain.section_index == last_section
                and abs(chain.position - end_position) <= EPS_SETTLE_P
                and abs(chain.velocity) <= EPS_V):
            moving = chain.pieces
            if chain.settled_at < dt - EPS_TIME:
                moving = moving[:-1]  # drop the hold padding
            pieces.extend(moving)
            ts = new_ts
            break
        pieces.extend(chain.pieces)
        progress = new_ts.s - ts.s
        ts = new_ts
        if (ts.section_index == last_section
                and abs(ts.state.position - end_position) <= EPS_SETTLE_P
                and abs(ts.state.velocity) <= EPS_V
                and abs(ts.state.acceleration) <= EPS_SETTLE_A):
            break
        if progress < EPS_PROGRESS:
            stall_steps += 1
            if stall_steps >= N_STALL:
                raise StallError(
                    f"no progress over {N_STALL} steps at s = {ts.s:.6f}")
        else:
            stall_steps = 0
    final = ts.state
    if (final.position != end_position or final.velocity != 0.0
            or final.acceleration != 0.0):
        # Creep endings settle within tolerances rather than exactly; a
        # final micro-plan closes the residual so the stitched trajectory
        # ends at the rest state proper.  Skipped if it would reverse.
        closing = _plan_raw(final.position, final.velocity,
                            final.acceleration, end_position, 0.0, limits)
        if _pieces_valid(final.position, final.velocity, final.acceleration,
                         closing, limits, path.sections[-1].direction,
                         EPS_LIMIT):
            pieces.extend(closing)
    start = KinematicState(path.waypoints[0].position, 0.0, 0.0)
    return Trajectory1D.from_segments(start, pieces)
