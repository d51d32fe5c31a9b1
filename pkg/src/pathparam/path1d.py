"""One-dimensional path analysis.

Decomposes a sampled joint path into monotone sections between direction
reversals, searches the largest feasible accelerations at each reversal
waypoint, and chains time-optimal section traversals.

A path is parameterized by its cumulative travelled length ``s`` (total
variation of position), which is strictly increasing along the traversal
even though the position itself reverses at waypoints.
"""

from __future__ import annotations

import bisect as _bisect
import math
from dataclasses import dataclass, replace
from typing import Literal, Sequence

from .errors import DegeneratePathError, InfeasibleTargetError, SearchContradictionError
from .kinematics import EPS_LIMIT, KinematicLimits, KinematicState, Trajectory1D
from .otg import (TargetState, _commit_feasible, _descent_candidate,
                  _descent_window, _plan_raw, plan_to_state)

EPS_POS = 1e-9       # positions closer than this are the same point
EPS_SECTION = 1e-6   # sections shorter than this are merged away
SEARCH_ITERS = 25    # bisection iterations for acceleration searches
SEARCH_TOL_REL = 1e-4  # bracket width target, relative to the accel limit

WaypointKind = Literal["start", "local_min", "local_max", "end"]


@dataclass(frozen=True, slots=True)
class AccRange:
    """Feasible accelerations at a waypoint, all signed.

    ``a_in_max`` bounds the acceleration carried into the section starting
    here, ``a_out_max`` the target acceleration arriving from the section
    ending here, and ``a_max`` combines the two by magnitude so that it is
    safe in both roles.  ``a_min`` is the smallest feasible target when
    approaching from rest at the section start, which is always zero.
    """

    a_in_max: float
    a_out_max: float
    a_max: float
    a_min: float


@dataclass(frozen=True, slots=True)
class Waypoint1D:
    position: float
    kind: WaypointKind
    s: float
    acc_range: AccRange | None = None


@dataclass(frozen=True, slots=True)
class Section:
    """A monotone stretch between two adjacent waypoints."""

    index: int
    p_from: float
    p_to: float
    direction: int  # +1 rising, -1 falling
    start_s: float
    end_s: float

    @property
    def length(self) -> float:
        return self.end_s - self.start_s


@dataclass(frozen=True)
class Path1D:
    waypoints: tuple[Waypoint1D, ...]
    sections: tuple[Section, ...]
    total_s: float


def waypoint_sign(kind: WaypointKind) -> int:
    """Sign of any feasible acceleration at a waypoint of this kind."""
    if kind == "local_min":
        return 1
    if kind == "local_max":
        return -1
    return 0


def decompose(samples: Sequence[float], eps_pos: float = EPS_POS,
              eps_section: float = EPS_SECTION) -> Path1D:
    """Split sampled positions into monotone sections at direction reversals.

    Plateaus collapse to their first sample; reversals shorter than
    ``eps_section`` are merged away.  Raises ``DegeneratePathError`` when no
    usable geometry remains.
    """
    points = [float(x) for x in samples]
    if len(points) < 2:
        raise DegeneratePathError("a path needs at least two samples")
    for x in points:
        if not math.isfinite(x):
            raise ValueError("path samples must be finite")

    def collapse(pts: list[float]) -> list[float]:
        # Drop near-duplicates, then interior points that are not reversals.
        out = [pts[0]]
        for x in pts[1:]:
            if abs(x - out[-1]) > eps_pos:
                out.append(x)
        i = 1
        while i < len(out) - 1:
            if (out[i] - out[i - 1]) * (out[i + 1] - out[i]) > 0.0:
                del out[i]
            else:
                i += 1
        return out

    points = collapse(points)
    while True:
        if len(points) < 2:
            raise DegeneratePathError("all samples equal within tolerance")
        short = next((i for i in range(len(points) - 1)
                      if abs(points[i + 1] - points[i]) < eps_section), None)
        if short is None:
            break
        if len(points) == 2:
            raise DegeneratePathError(
                "path shorter than the minimum section length")
        if short == 0:
            del points[1]
        elif short == len(points) - 2:
            del points[short]
        else:
            del points[short:short + 2]
        points = collapse(points)

    waypoints = []
    s = 0.0
    for i, p in enumerate(points):
        if i == 0:
            kind: WaypointKind = "start"
        elif i == len(points) - 1:
            kind = "end"
            s += abs(p - points[i - 1])
        else:
            kind = "local_min" if p < points[i - 1] else "local_max"
            s += abs(p - points[i - 1])
        waypoints.append(Waypoint1D(p, kind, s))
    sections = []
    for i in range(len(points) - 1):
        direction = 1 if points[i + 1] > points[i] else -1
        sections.append(Section(i, points[i], points[i + 1], direction,
                                waypoints[i].s, waypoints[i + 1].s))
    return Path1D(tuple(waypoints), tuple(sections), waypoints[-1].s)


# -------------------------------------------------------------------------
# Raw validity predicate shared by the searches (fast path, no dataclasses)
# -------------------------------------------------------------------------

def _pieces_valid(p: float, v: float, a: float, pieces, lm: KinematicLimits,
                  direction: int, tol: float = EPS_LIMIT) -> bool:
    """Closed-form limit and direction check of a raw piece list."""
    v_lo = v_hi = v
    a_lo = a_hi = a
    for jerk, dt in pieces:
        if jerk < lm.j_min - tol or jerk > lm.j_max + tol:
            return False
        v_end = v + dt * (a + 0.5 * jerk * dt)
        a_end = a + jerk * dt
        v_lo = min(v_lo, v_end)
        v_hi = max(v_hi, v_end)
        if jerk != 0.0:
            t_star = -a / jerk
            if 0.0 < t_star < dt:
                v_star = v + t_star * (a + 0.5 * jerk * t_star)
                v_lo = min(v_lo, v_star)
                v_hi = max(v_hi, v_star)
        a_lo = min(a_lo, a_end)
        a_hi = max(a_hi, a_end)
        v, a = v_end, a_end
    if v_lo < lm.v_min - tol or v_hi > lm.v_max + tol:
        return False
    if a_lo < lm.a_min - tol or a_hi > lm.a_max + tol:
        return False
    if direction > 0 and v_lo < -tol:
        return False
    if direction < 0 and v_hi > tol:
        return False
    return True


def _section_candidate_valid(section: Section, a_in: float, a_out: float,
                             lm: KinematicLimits) -> bool:
    pieces = _plan_raw(section.p_from, 0.0, a_in, section.p_to, a_out, lm)
    return _pieces_valid(section.p_from, 0.0, a_in, pieces, lm,
                         section.direction)


def _search_max(section: Section, lm: KinematicLimits, sign: int,
                probe, tol: float | None) -> float:
    """Largest magnitude m with probe(sign * m) valid; bisection from zero.

    Zero must be valid (a standstill approach always is); its rejection is a
    contradiction in the validity predicate, not a property of the path.
    Returns the proven-valid bracket end.
    """
    m_hi = lm.a_max if sign > 0 else -lm.a_min
    if tol is None:
        tol = SEARCH_TOL_REL * m_hi
    if not probe(0.0):
        raise SearchContradictionError(
            "zero target acceleration rejected on section "
            f"{section.index}")
    if probe(sign * m_hi):
        return sign * m_hi
    lo, hi = 0.0, m_hi
    for _ in range(SEARCH_ITERS):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if probe(sign * mid):
            lo = mid
        else:
            hi = mid
    return sign * lo


def max_input_acc(section: Section, limits: KinematicLimits,
                  tol: float | None = None) -> float:
    """Largest acceleration the section can start with and still be left.

    The candidate trajectory carries the probed acceleration at the section
    start (rest otherwise) and must reach the far waypoint with zero target
    acceleration without reversing against the section direction.
    """
    sign = section.direction

    def probe(a_in: float) -> bool:
        return _section_candidate_valid(section, a_in, 0.0, limits)

    return _search_max(section, limits, sign, probe, tol)


def max_output_acc(section: Section, limits: KinematicLimits,
                   tol: float | None = None) -> float:
    """Largest target acceleration reachable at the section's far waypoint."""
    sign = -section.direction

    def probe(a_out: float) -> bool:
        return _section_candidate_valid(section, 0.0, a_out, limits)

    return _search_max(section, limits, sign, probe, tol)


def waypoint_acc_ranges(path: Path1D, limits: KinematicLimits,
                        tol: float | None = None) -> Path1D:
    """Populate every waypoint with its feasible acceleration range.

    An interior waypoint takes the smaller magnitude of what the incoming
    section can deliver as a target and what the outgoing section can absorb
    as an input; start and end waypoints are pinned to rest.
    """
    out_max = [max_output_acc(sec, limits, tol) for sec in path.sections]
    in_max = [max_input_acc(sec, limits, tol) for sec in path.sections]
    waypoints = []
    for k, wp in enumerate(path.waypoints):
        if wp.kind in ("start", "end"):
            waypoints.append(replace(wp, acc_range=AccRange(0.0, 0.0, 0.0, 0.0)))
            continue
        a_out = out_max[k - 1]
        a_in = in_max[k]
        sign = waypoint_sign(wp.kind)
        a_max = sign * min(abs(a_out), abs(a_in))
        waypoints.append(replace(wp, acc_range=AccRange(a_in, a_out, a_max, 0.0)))
    return Path1D(tuple(waypoints), path.sections, path.total_s)


def _committed_target_window(state: KinematicState, section: Section,
                             waypoint: Waypoint1D, limits: KinematicLimits
                             ) -> tuple[float, float] | None:
    """Signed (weak, strong) feasible targets for a committed approach.

    A state deep in its final brake rejects both weak targets, which
    overshoot, and the strongest ones, whose final ramp sheds more speed
    than remains; what survives is an interior window, derived here from
    the committed-stop family's coverage bands.
    """
    a_full = waypoint.acc_range.a_max
    if section.direction > 0:
        return _descent_window(state.velocity, state.acceleration,
                               waypoint.position - state.position,
                               limits.a_min, limits.j_min, limits.j_max,
                               -abs(a_full))
    window = _descent_window(-state.velocity, -state.acceleration,
                             state.position - waypoint.position,
                             -limits.a_max, -limits.j_max, -limits.j_min,
                             -abs(a_full))
    if window is None:
        return None
    weak, strong = window
    return -weak, -strong


def _plan_arrival(p: float, v: float, a: float, p_t: float, a_t: float,
                  limits: KinematicLimits, direction: int
                  ) -> list[tuple[float, float]] | None:
    """Fastest direction-valid plan to (p_t, 0, a_t), or None.

    The free planner prefers a reversing root whenever one is quicker; a
    committed entry still has a monotone member covering the distance, so
    recover that member before declaring the target infeasible.
    """
    pieces = _plan_raw(p, v, a, p_t, a_t, limits)
    if _pieces_valid(p, v, a, pieces, limits, direction):
        return pieces
    dist = p_t - p
    if direction * dist <= 0.0:
        return None
    if direction > 0:
        member = _descent_candidate(v, a, a_t, dist, limits.a_min,
                                    limits.j_min, limits.j_max)
    else:
        mirror = _descent_candidate(-v, -a, -a_t, -dist, -limits.a_max,
                                    -limits.j_max, -limits.j_min)
        member = None if mirror is None else [(-j, t) for j, t in mirror]
    # An edge member drops a grazing negative hold, leaving an end-velocity
    # residual up to the graze tolerance times the hold level; widen the
    # check accordingly (a member cannot hide a real excursion, its
    # acceleration never swings against the travel).
    slack = EPS_LIMIT + 1e-9 * max(limits.a_max, -limits.a_min)
    if member is not None and _pieces_valid(p, v, a, member, limits,
                                            direction, slack):
        return member
    return None


def min_target_acc(state: KinematicState, section: Section,
                   waypoint: Waypoint1D, limits: KinematicLimits,
                   tol: float | None = None) -> float:
    """Smallest-magnitude feasible target acceleration at ``waypoint``.

    State-dependent: from a fast approach close to the waypoint, small
    targets overshoot and only sufficiently strong ones keep the motion on
    the section.  Returns zero whenever zero is feasible, otherwise the
    proven-valid end of the bisection bracket.

    Raises:
        InfeasibleTargetError: even the full ``a_max`` target is rejected.
    """
    if waypoint.acc_range is None:
        raise ValueError("waypoint has no acceleration range; run "
                         "waypoint_acc_ranges first")
    a_max = waypoint.acc_range.a_max
    sign = waypoint_sign(waypoint.kind)
    m_hi = abs(a_max)
    if tol is None:
        tol = SEARCH_TOL_REL * max(m_hi, 1e-12)

    def probe(a_t: float) -> bool:
        dist = waypoint.position - state.position
        if section.direction * dist > 0.0:
            verdict = _commit_feasible(state.velocity, state.acceleration,
                                       a_t, dist, limits)
            if verdict is not None:
                return verdict
        pieces = _plan_raw(state.position, state.velocity, state.acceleration,
                           waypoint.position, a_t, limits)
        return _pieces_valid(state.position, state.velocity,
                             state.acceleration, pieces, limits,
                             section.direction)

    if probe(0.0):
        return 0.0
    if m_hi == 0.0:
        raise InfeasibleTargetError(
            f"no feasible target acceleration at waypoint {waypoint.position}")
    if probe(sign * m_hi):
        lo, hi = 0.0, m_hi
    else:
        # Both ends rejected: the state is committed to a hard arrival and
        # the feasible targets form an interior window.  Locate it, then
        # confirm a member by probing from its middle outward.
        window = _committed_target_window(state, section, waypoint, limits)
        seed = None
        if window is not None:
            w_lo, w_hi = abs(window[0]), abs(window[1])
            for f in (0.5, 0.25, 0.75, 0.1, 0.9):
                mag = w_lo + f * (w_hi - w_lo)
                if probe(sign * mag):
                    seed = mag
                    break
        if seed is None:
            raise InfeasibleTargetError(
                f"no feasible target acceleration at waypoint "
                f"{waypoint.position}")
        lo, hi = abs(window[0]), seed
    for _ in range(SEARCH_ITERS):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if probe(sign * mid):
            hi = mid
        else:
            lo = mid
    return sign * hi


def check_combined_feasibility(path: Path1D, section_index: int,
                               alpha: float, beta: float,
                               limits: KinematicLimits) -> bool:
    """Is the section valid with scaled input and target accelerations?

    ``alpha`` scales the input acceleration bound of the section, ``beta``
    the target bound at its far waypoint; both in [0, 1].
    """
    section = path.sections[section_index]
    wp_from = path.waypoints[section_index]
    wp_to = path.waypoints[section_index + 1]
    if wp_from.acc_range is None or wp_to.acc_range is None:
        raise ValueError("path has no acceleration ranges; run "
                         "waypoint_acc_ranges first")
    a_in = alpha * wp_from.acc_range.a_in_max
    a_out = beta * wp_to.acc_range.a_out_max
    return _section_candidate_valid(section, a_in, a_out, limits)


def time_optimal_traversal(path: Path1D,
                           limits: KinematicLimits) -> Trajectory1D:
    """Chain time-optimal section trajectories with maximal waypoint targets.

    Each leg runs from the previous waypoint state to the next waypoint with
    its combined maximal acceleration as the target.  Legs are re-validated;
    if carrying full input and target accelerations together just tips a leg
    over the edge, the target is backed off to the largest feasible scale.
    """
    if any(wp.acc_range is None for wp in path.waypoints):
        path = waypoint_acc_ranges(path, limits)
    pieces_all: list[tuple[float, float]] = []
    state = KinematicState(path.waypoints[0].position, 0.0, 0.0)
    start = state
    for k in range(1, len(path.waypoints)):
        section = path.sections[k - 1]
        target_acc = path.waypoints[k].acc_range.a_max
        pieces = _plan_arrival(state.position, state.velocity,
                               state.acceleration, path.waypoints[k].position,
                               target_acc, limits, section.direction)
        if pieces is None:
            target_acc = _back_off_target(state, path.waypoints[k], section,
                                          limits)
            pieces = _plan_arrival(state.position, state.velocity,
                                   state.acceleration,
                                   path.waypoints[k].position, target_acc,
                                   limits, section.direction)
            if pieces is None:
                pieces = _plan_raw(state.position, state.velocity,
                                   state.acceleration,
                                   path.waypoints[k].position, target_acc,
                                   limits)
        pieces_all.extend(pieces)
        state = KinematicState(path.waypoints[k].position, 0.0, target_acc)
    return Trajectory1D.from_segments(start, pieces_all)


def _back_off_target(state: KinematicState, waypoint: Waypoint1D,
                     section: Section, limits: KinematicLimits) -> float:
    """Largest feasible scale of the waypoint target from this exact state."""
    a_full = waypoint.acc_range.a_max

    def probe(a_t: float) -> bool:
        dist = waypoint.position - state.position
        if section.direction * dist > 0.0:
            verdict = _commit_feasible(state.velocity, state.acceleration,
                                       a_t, dist, limits)
            if verdict is not None:
                return verdict
        pieces = _plan_raw(state.position, state.velocity, state.acceleration,
                           waypoint.position, a_t, limits)
        return _pieces_valid(state.position, state.velocity,
                             state.acceleration, pieces, limits,
                             section.direction)

    if probe(0.0):
        lo, hi = 0.0, 1.0
    else:
        # Committed approaches reject weak targets outright; the feasible
        # scales form an interior window and its strong edge is wanted.
        window = _committed_target_window(state, section, waypoint, limits)
        seed = None
        if window is not None and a_full != 0.0:
            w_lo, w_hi = abs(window[0]), abs(window[1])
            for f in (0.5, 0.75, 0.25, 0.9, 0.1):
                frac = (w_lo + f * (w_hi - w_lo)) / abs(a_full)
                if probe(frac * a_full):
                    seed = frac
                    break
        if seed is None:
            raise SearchContradictionError(
                f"zero target acceleration rejected at waypoint "
                f"{waypoint.position}")
        lo, hi = seed, min(1.0, abs(window[1]) / abs(a_full))
        if hi < lo:
            hi = lo
    for _ in range(SEARCH_ITERS):
        mid = 0.5 * (lo + hi)
        if probe(mid * a_full):
            lo = mid
        else:
            hi = mid
    return lo * a_full


def s_of_p(path: Path1D, position: float, section_index: int) -> float:
    """Travelled length at ``position`` inside the given section."""
    section = path.sections[section_index]
    lo, hi = sorted((section.p_from, section.p_to))
    if not (lo - EPS_POS <= position <= hi + EPS_POS):
        raise ValueError(
            f"position {position} outside section {section_index}")
    return section.start_s + section.direction * (position - section.p_from)


def p_of_s(path: Path1D, s: float) -> float:
    """Position at travelled length ``s``; inverse of :func:`s_of_p`."""
    if not (-EPS_POS <= s <= path.total_s + EPS_POS):
        raise ValueError(f"s {s} outside [0, {path.total_s}]")
    s = min(max(s, 0.0), path.total_s)
    starts = [sec.start_s for sec in path.sections]
    idx = max(0, _bisect.bisect_right(starts, s) - 1)
    section = path.sections[idx]
    return section.p_from + section.direction * (s - section.start_s)
