"""Time-optimal one-dimensional planning between rest-boundary states.

Solves two problems in closed form plus one bracketed scalar root-find:

* ``plan_to_state``: drive (p0, v0, a0) to (p_target, 0, a_target),
  time-optimally under velocity, acceleration and jerk bounds.
* ``plan_brake``: drive (v0, a0) to (0, 0) as fast as possible, final
  position free.

Profiles are bang-singular-bang: jerk takes an extreme value, is zero, or
takes the other extreme, for up to seven phases (accelerate, cruise,
decelerate, each up to three phases).  The acceleration-phase shape for a
velocity change is a triangle or, when the acceleration bound binds, a
trapezoid; the cruise velocity is found by a root-find on covered distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import InfeasibleTargetError
from .kinematics import EPS_LIMIT, KinematicLimits, KinematicState, Trajectory1D

EPS_TARGET = 1e-6      # boundary-state match tolerance
ROOT_XTOL = 1e-12      # peak-velocity root tolerance (seconds-free quantity)
ROOT_MAXITER = 200
WINDOW_SCAN = 256      # target-window seed scan resolution

Piece = tuple[float, float]  # (jerk, duration)


@dataclass(frozen=True, slots=True)
class TargetState:
    """Boundary condition at the end of a plan: position and acceleration.

    The final velocity is always zero; plans end either at a waypoint, where
    motion reverses or stops, or at rest.
    """

    position: float
    acceleration: float = 0.0


def _transition(v0: float, a0: float, v1: float, a1: float,
                a_lo: float, a_hi: float,
                j_lo: float, j_hi: float) -> list[Piece]:
    """Jerk pieces changing velocity v0 -> v1 while moving accel a0 -> a1.

    Time-optimal under the acceleration and jerk bounds; the final position
    is whatever the motion yields.  The shape is a single acceleration peak
    (or valley), clipped at the bound with a constant-acceleration middle
    phase when necessary.
    """
    dv_req = v1 - v0
    # Velocity change of the direct ramp a0 -> a1 at extreme jerk.  Needing
    # more than this means peaking above both accelerations, needing less
    # means dipping below both.
    if a1 > a0:
        jd = j_hi
    elif a1 < a0:
        jd = j_lo
    else:
        jd = 0.0
    if jd != 0.0:
        td = (a1 - a0) / jd
        dv_direct = a0 * td + 0.5 * jd * td * td
    else:
        td = 0.0
        dv_direct = 0.0
    if abs(dv_req - dv_direct) <= 1e-14 * (1.0 + abs(dv_req)):
        return [(jd, td)] if td > 0.0 else []

    k = 0.5 / j_hi - 0.5 / j_lo  # > 0
    if dv_req > dv_direct:
        peak_sq = (dv_req + 0.5 * a0 * a0 / j_hi - 0.5 * a1 * a1 / j_lo) / k
        peak = math.sqrt(max(peak_sq, 0.0))
        if peak <= a_hi:
            return [(j_hi, max(0.0, (peak - a0) / j_hi)),
                    (j_lo, max(0.0, (a1 - peak) / j_lo))]
        peak = a_hi
        dv_tri = peak * peak * k - 0.5 * a0 * a0 / j_hi + 0.5 * a1 * a1 / j_lo
        return [(j_hi, max(0.0, (peak - a0) / j_hi)),
                (0.0, max(0.0, (dv_req - dv_tri) / peak)),
                (j_lo, max(0.0, (a1 - peak) / j_lo))]

    valley_sq = (-dv_req - 0.5 * a0 * a0 / j_lo + 0.5 * a1 * a1 / j_hi) / k
    valley = -math.sqrt(max(valley_sq, 0.0))
    if valley >= a_lo:
        return [(j_lo, max(0.0, (valley - a0) / j_lo)),
                (j_hi, max(0.0, (a1 - valley) / j_hi))]
    valley = a_lo
    dv_tri = -valley * valley * k - 0.5 * a0 * a0 / j_lo + 0.5 * a1 * a1 / j_hi
    return [(j_lo, max(0.0, (valley - a0) / j_lo)),
            (0.0, max(0.0, (dv_req - dv_tri) / valley)),
            (j_hi, max(0.0, (a1 - valley) / j_hi))]


def _displacement(v: float, a: float, pieces: list[Piece]) -> float:
    """Position change accumulated by ``pieces`` starting from (v, a)."""
    p = 0.0
    for jerk, dt in pieces:
        p += dt * (v + dt * (0.5 * a + dt * jerk / 6.0))
        v += dt * (a + 0.5 * jerk * dt)
        a += jerk * dt
    return p


def _transition_span(v0: float, a0: float, v1: float, a1: float,
                     a_lo: float, a_hi: float,
                     j_lo: float, j_hi: float) -> float:
    """Displacement of the _transition profile, without building pieces.

    Root scans evaluate transitions by the thousand and only need the
    covered distance; this mirrors _transition's branch structure with the
    integration unrolled in place.
    """
    dv_req = v1 - v0
    if a1 > a0:
        jd = j_hi
    elif a1 < a0:
        jd = j_lo
    else:
        jd = 0.0
    if jd != 0.0:
        td = (a1 - a0) / jd
        dv_direct = td * (a0 + 0.5 * jd * td)
    else:
        td = 0.0
        dv_direct = 0.0
    if abs(dv_req - dv_direct) <= 1e-14 * (1.0 + abs(dv_req)):
        if td > 0.0:
            return td * (v0 + td * (0.5 * a0 + td * jd / 6.0))
        return 0.0
    k = 0.5 / j_hi - 0.5 / j_lo
    hold = 0.0
    if dv_req > dv_direct:
        peak_sq = (dv_req + 0.5 * a0 * a0 / j_hi - 0.5 * a1 * a1 / j_lo) / k
        peak = math.sqrt(peak_sq) if peak_sq > 0.0 else 0.0
        if peak > a_hi:
            peak = a_hi
            dv_tri = peak * peak * k - 0.5 * a0 * a0 / j_hi \
                + 0.5 * a1 * a1 / j_lo
            hold = max(0.0, (dv_req - dv_tri) / peak)
        j1, t1 = j_hi, max(0.0, (peak - a0) / j_hi)
        j2, t2 = j_lo, max(0.0, (a1 - peak) / j_lo)
    else:
        valley_sq = (-dv_req - 0.5 * a0 * a0 / j_lo
                     + 0.5 * a1 * a1 / j_hi) / k
        valley = -math.sqrt(valley_sq) if valley_sq > 0.0 else 0.0
        if valley < a_lo:
            valley = a_lo
            dv_tri = -valley * valley * k - 0.5 * a0 * a0 / j_lo \
                + 0.5 * a1 * a1 / j_hi
            hold = max(0.0, (dv_req - dv_tri) / valley)
        j1, t1 = j_lo, max(0.0, (valley - a0) / j_lo)
        j2, t2 = j_hi, max(0.0, (a1 - valley) / j_hi)
    p = t1 * (v0 + t1 * (0.5 * a0 + t1 * j1 / 6.0))
    v = v0 + t1 * (a0 + 0.5 * j1 * t1)
    a = a0 + j1 * t1
    if hold > 0.0:
        p += hold * (v + 0.5 * hold * a)
        v += hold * a
    return p + t2 * (v + t2 * (0.5 * a + t2 * j2 / 6.0))


def _committed_member(v0: float, a0: float, a_t: float, c: float,
                      j_lo: float, j_hi: float) -> list[Piece] | None:
    """One committed stop: accel a0 -> c (held) -> a_t, shedding v0 exactly.

    Returns None when the two ramps alone shed more than v0, which would
    need a negative hold.
    """
    j1 = j_lo if c < a0 else j_hi
    t1 = (c - a0) / j1 if c != a0 else 0.0
    dv1 = t1 * (a0 + 0.5 * j1 * t1)
    j2 = j_lo if a_t < c else j_hi
    t2 = (a_t - c) / j2 if a_t != c else 0.0
    dv2 = t2 * (c + 0.5 * j2 * t2)
    hold = (-v0 - dv1 - dv2) / c
    if hold < 0.0:
        if hold < -1e-9:
            return None
        hold = 0.0
    return [(j1, t1), (0.0, hold), (j2, t2)]


def _member_distance(v0: float, a0: float, a_t: float, c: float,
                     j_lo: float, j_hi: float) -> float:
    pieces = _committed_member(v0, a0, a_t, c, j_lo, j_hi)
    if pieces is None:
        return math.nan
    return _displacement(v0, a0, pieces)


def _committed_bounds(v0: float, a0: float, a_t: float, a_lo: float,
                      j_lo: float, j_hi: float
                      ) -> tuple[float, float | None] | None:
    """Domain of held levels for committed stops, as (deep, shallow).

    The deep end is the acceleration floor or the valley of the no-hold
    V through the deep side, whichever is shallower.  Raising the level
    lengthens both ramps, and at low entry speed the ramps alone can shed
    the whole velocity; the shallow end is that no-hold boundary, or None
    when the hold survives all the way up to zero.  Returns None when the
    domain is empty.
    """
    k = 0.5 / j_hi - 0.5 / j_lo
    valley_sq = (v0 - 0.5 * a0 * a0 / j_lo + 0.5 * a_t * a_t / j_hi) / k
    c_deep = max(a_lo, -math.sqrt(max(valley_sq, 0.0)))
    if c_deep >= 0.0:
        return None
    edge_sq = (-v0 + 0.5 * a0 * a0 / j_hi - 0.5 * a_t * a_t / j_lo) / k
    c_edge = -math.sqrt(edge_sq) if edge_sq > 0.0 else None
    if c_edge is not None and c_edge < c_deep:
        return None
    return c_deep, c_edge


def _descent_candidate(v0: float, a0: float, a_t: float, dist: float,
                       a_lo: float, j_lo: float,
                       j_hi: float) -> list[Piece] | None:
    """Committed stop covering ``dist`` exactly, or None.

    A braking entry state that bleeds its acceleration back to zero first
    spends extra distance at speed, so the peak-velocity family cannot stop
    shorter than its bled member; the distances between the hardest direct
    stop and that member are only coverable by profiles whose acceleration
    moves a0 -> a_t through one held negative level.  Assumes dist > 0,
    v0 > 0, a0 < 0, a_t <= 0; callers mirror the negative-direction case.
    """
    bounds = _committed_bounds(v0, a0, a_t, a_lo, j_lo, j_hi)
    if bounds is None:
        return None
    c_deep, c_edge = bounds

    def miss(c: float) -> float:
        return _member_distance(v0, a0, a_t, c, j_lo, j_hi) - dist

    def finish(c: float) -> list[Piece] | None:
        pieces = _committed_member(v0, a0, a_t, c, j_lo, j_hi)
        if pieces is None:
            return None
        return [pc for pc in pieces if pc[1] > 0.0]

    f_deep = miss(c_deep)
    if math.isnan(f_deep):
        return None
    # Replanning part-way through one of these stops lands exactly on the
    # family's boundary, and rounding decides which side; accept a hairline
    # miss at either end rather than reporting the family infeasible.
    graze = 1e-9 * max(1.0, abs(dist))
    if f_deep > 0.0:
        return finish(c_deep) if f_deep <= graze else None
    root = None
    if c_edge is not None:
        f_edge = miss(c_edge)
        if math.isnan(f_edge):
            return None
        if f_edge < 0.0:
            # The widest member still falls short of dist.
            return finish(c_edge) if f_edge >= -graze else None
        root = c_edge if f_edge == 0.0 else brentq(
            miss, c_deep, c_edge, xtol=ROOT_XTOL, maxiter=ROOT_MAXITER)
    else:
        c_prev = c_deep
        for _ in range(80):
            c = 0.5 * c_prev
            f = miss(c)
            if math.isnan(f):
                break
            if f >= 0.0:
                root = c if f == 0.0 else brentq(miss, c_prev, c,
                                                 xtol=ROOT_XTOL,
                                                 maxiter=ROOT_MAXITER)
                break
            c_prev = c
    if root is None:
        return None
    return finish(root)


def _descent_window(v0: float, a0: float, dist: float, a_lo: float,
                    j_lo: float, j_hi: float,
                    a_deepest: float) -> tuple[float, float] | None:
    """Interval of target accelerations whose committed stop covers ``dist``.

    For each target the committed family sweeps one band of distances, and
    both band edges move the same way as the target deepens, so the targets
    able to cover ``dist`` form an interval inside [a_deepest, 0]; a scan
    finds a member and bisection sharpens both edges.  Same frame as
    _descent_candidate; returns (weak, strong) signed accelerations.
    """
    if not a_deepest < 0.0:
        return None
    graze = 1e-9 * max(1.0, abs(dist))

    def fits(a_t: float) -> bool:
        bounds = _committed_bounds(v0, a0, a_t, a_lo, j_lo, j_hi)
        if bounds is None:
            return False
        c_deep, c_edge = bounds
        d_deep = _member_distance(v0, a0, a_t, c_deep, j_lo, j_hi)
        if math.isnan(d_deep) or d_deep - graze > dist:
            return False
        if c_edge is None:
            return True
        d_edge = _member_distance(v0, a0, a_t, c_edge, j_lo, j_hi)
        return not math.isnan(d_edge) and d_edge + graze >= dist

    seed = None
    for i in range(WINDOW_SCAN):
        a_t = a_deepest * (i + 0.5) / WINDOW_SCAN
        if fits(a_t):
            seed = a_t
            break
    if seed is None:
        return None
    if fits(0.0):
        weak = 0.0
    else:
        lo, hi = 0.0, seed          # lo misses, hi fits
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if fits(mid):
                hi = mid
            else:
                lo = mid
        weak = hi
    if fits(a_deepest):
        strong = a_deepest
    else:
        lo, hi = a_deepest, seed    # lo misses, hi fits
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if fits(mid):
                hi = mid
            else:
                lo = mid
        strong = hi
    return weak, strong


def _coast_velocity(v0: float, a0: float, j_lo: float, j_hi: float) -> float:
    """Velocity after bleeding the entry acceleration to zero at full jerk."""
    if a0 > 0.0:
        return v0 - 0.5 * a0 * a0 / j_lo
    if a0 < 0.0:
        return v0 - 0.5 * a0 * a0 / j_hi
    return v0


def _peak_distance(v0: float, a0: float, a_t: float, v_pk: float,
                   lm: KinematicLimits) -> float:
    """Distance covered by the peak-velocity profile through ``v_pk``."""
    return (_transition_span(v0, a0, v_pk, 0.0, lm.a_min, lm.a_max,
                             lm.j_min, lm.j_max)
            + _transition_span(v_pk, 0.0, 0.0, a_t, lm.a_min, lm.a_max,
                               lm.j_min, lm.j_max))


def _commit_feasible(v0: float, a0: float, a_t: float, dist: float,
                     lm: KinematicLimits) -> bool | None:
    """Fast arrival-feasibility verdict for entries committed to their stop.

    Mirrors the committed-descent trigger of the full planner: an entry that
    cannot afford to bleed its acceleration back to zero before stopping has
    a monotone arrival exactly when some committed member covers the
    remaining distance, so existence of the member settles feasibility
    without the planner's root enumeration.  Returns None for uncommitted
    entries, which need full planning.
    """
    coast = _coast_velocity(v0, a0, lm.j_min, lm.j_max)
    if dist > 0.0 and v0 > 0.0 and a_t <= 0.0:
        if coast <= 0.0 or dist < _peak_distance(v0, a0, a_t,
                                                 max(coast, lm.v_min), lm):
            return _descent_candidate(v0, a0, a_t, dist, lm.a_min,
                                      lm.j_min, lm.j_max) is not None
        return None
    if dist < 0.0 and v0 < 0.0 and a_t >= 0.0:
        if coast >= 0.0 or dist > _peak_distance(v0, a0, a_t,
                                                 min(coast, lm.v_max), lm):
            return _descent_candidate(-v0, -a0, -a_t, -dist, -lm.a_max,
                                      -lm.j_max, -lm.j_min) is not None
        return None
    return None


def _plan_raw(p0: float, v0: float, a0: float, p_t: float, a_t: float,
              lm: KinematicLimits) -> list[Piece]:
    """Piece list driving (p0, v0, a0) to (p_t, 0, a_t), time-optimally."""
    if p0 == p_t and v0 == 0.0 and a0 == a_t:
        return []
    dist = p_t - p0
    a_lo, a_hi = lm.a_min, lm.a_max
    j_lo, j_hi = lm.j_min, lm.j_max

    def stages(v_pk: float) -> tuple[list[Piece], list[Piece]]:
        return (_transition(v0, a0, v_pk, 0.0, a_lo, a_hi, j_lo, j_hi),
                _transition(v_pk, 0.0, 0.0, a_t, a_lo, a_hi, j_lo, j_hi))

    def dist_of(v_pk: float) -> float:
        return (_transition_span(v0, a0, v_pk, 0.0, a_lo, a_hi, j_lo, j_hi)
                + _transition_span(v_pk, 0.0, 0.0, a_t,
                                   a_lo, a_hi, j_lo, j_hi))

    d_hi = dist_of(lm.v_max)
    if dist >= d_hi:
        up, down = stages(lm.v_max)
        return up + [(0.0, (dist - d_hi) / lm.v_max)] + down
    d_lo = dist_of(lm.v_min)
    if dist <= d_lo:
        up, down = stages(lm.v_min)
        return up + [(0.0, (dist - d_lo) / lm.v_min)] + down

    # Covered distance grows with the peak velocity only outside the band
    # of peaks between rest, the entry velocity and the velocity the entry
    # state coasts to while its acceleration bleeds to zero.  Inside that
    # band several peaks can cover the same distance (braking nearly to
    # rest and nudging forward travels farther than one clean ramp), so a
    # single global bracket may land on a slow or reversing profile.  Use
    # the monotone outer brackets when the requested distance reaches them;
    # otherwise enumerate the crossings inside the band and keep the
    # fastest.
    coast = _coast_velocity(v0, a0, j_lo, j_hi)
    kink = -0.5 * a_t * a_t / (j_lo if a_t < 0.0 else j_hi)
    band_lo = max(min(coast, v0, kink, 0.0), lm.v_min)
    band_hi = min(max(coast, v0, kink, 0.0), lm.v_max)

    def miss(v_pk: float) -> float:
        return dist_of(v_pk) - dist

    candidates: list[tuple[float, list[Piece]]] = []

    def add(v_pk: float) -> None:
        up, down = stages(v_pk)
        duration = sum(dt for _, dt in up) + sum(dt for _, dt in down)
        candidates.append((duration, up + down))

    up_fired = dist >= dist_of(band_hi) and band_hi < lm.v_max
    if up_fired:
        add(brentq(miss, band_hi, lm.v_max,
                   xtol=ROOT_XTOL, maxiter=ROOT_MAXITER))
    down_fired = dist <= dist_of(band_lo) and band_lo > lm.v_min
    if down_fired:
        add(brentq(miss, lm.v_min, band_lo,
                   xtol=ROOT_XTOL, maxiter=ROOT_MAXITER))
    # The outer root in the task's own direction dominates every in-band
    # root (a higher peak the right way covers the same distance sooner),
    # but the opposite outer root is a reversal profile that in-band roots
    # can beat, so its firing alone must not suppress the scan.
    if (dist > 0.0 and up_fired) or (dist < 0.0 and down_fired):
        return min(candidates, key=lambda c: c[0])[1]

    # Scan the band.  Sample finer than the velocity swept by one full
    # acceleration ramp, the width of the broad non-monotone features.  On
    # top of that, the covered distance has square-root-steep notches where
    # a profile stage degenerates (peak at rest, at the entry velocity, at
    # the coasting velocity, or at the direct-ramp switch of the arrival
    # stage); a uniform stride can miss the crossing pair inside a notch,
    # so refine around each center on a log scale.
    width = band_hi - band_lo
    feature = min(0.5 * a_hi * a_hi / j_hi, -0.5 * a_lo * a_lo / j_lo)
    n = max(8, min(64, 4 * int(width / max(feature, 1e-12)) + 8))
    points = {band_lo + width * i / n for i in range(n + 1)}
    centers: list[float] = []
    for center in (0.0, v0, coast, kink):
        if band_lo <= center <= band_hi and \
                all(abs(center - c) > 1e-9 * width for c in centers):
            centers.append(center)
    for center in centers:
        points.add(center)
        mag = 1e-8 * width
        while mag < 0.3 * width:
            for x in (center - mag, center + mag):
                if band_lo < x < band_hi:
                    points.add(x)
            mag *= 10.0
    grid = sorted(points)
    misses = [miss(x) for x in grid]
    for i, f_i in enumerate(misses):
        if f_i == 0.0:
            add(grid[i])
        elif i + 1 < len(grid) and (f_i < 0.0) != (misses[i + 1] < 0.0):
            add(brentq(miss, grid[i], grid[i + 1],
                       xtol=ROOT_XTOL, maxiter=ROOT_MAXITER))

    # An entry committed to its stop: the family above bleeds the entry
    # acceleration to zero before restopping, so it cannot cover the
    # distances just beyond the hardest direct stop; a committed-descent
    # profile can.  The entry may still be braking or still accelerating
    # into the stop; the member solver itself rejects entries whose
    # hardest descent already overshoots.
    direct = None
    if (dist > 0.0 and v0 > 0.0 and a_t <= 0.0
            and (coast <= 0.0 or dist < dist_of(max(coast, lm.v_min)))):
        direct = _descent_candidate(v0, a0, a_t, dist, a_lo, j_lo, j_hi)
    elif (dist < 0.0 and v0 < 0.0 and a_t >= 0.0
            and (coast >= 0.0 or dist > dist_of(min(coast, lm.v_max)))):
        mirror = _descent_candidate(-v0, -a0, -a_t, -dist,
                                    -a_hi, -j_hi, -j_lo)
        if mirror is not None:
            direct = [(-jerk, dt) for jerk, dt in mirror]
    if direct is not None:
        candidates.append((sum(dt for _, dt in direct), direct))

    if not candidates:
        add(brentq(miss, lm.v_min, lm.v_max,
                   xtol=ROOT_XTOL, maxiter=ROOT_MAXITER))
    return min(candidates, key=lambda c: c[0])[1]


def _check_start(start: KinematicState, lm: KinematicLimits) -> None:
    if not (lm.v_min - EPS_LIMIT <= start.velocity <= lm.v_max + EPS_LIMIT):
        raise ValueError(f"start velocity {start.velocity} outside limits")
    if not (lm.a_min - EPS_LIMIT <= start.acceleration <= lm.a_max + EPS_LIMIT):
        raise ValueError(f"start acceleration {start.acceleration} outside limits")


def plan_to_state(start: KinematicState, target: TargetState,
                  limits: KinematicLimits) -> Trajectory1D:
    """Time-optimal trajectory from ``start`` to ``target`` (zero velocity).

    The result matches the boundary states within ``EPS_TARGET`` and is
    time-optimal among piecewise-constant-jerk profiles with jerk in
    {j_min, 0, j_max} (up to seven phases).  When several profiles tie,
    the one with fewer segments is returned (zero-duration phases are
    dropped).

    Raises:
        InfeasibleTargetError: target acceleration outside the limits.
        ValueError: non-finite inputs or start state outside the limits.
    """
    _check_start(start, limits)
    if not math.isfinite(target.position) or not math.isfinite(target.acceleration):
        raise ValueError("target must be finite")
    excess = max(limits.a_min - target.acceleration,
                 target.acceleration - limits.a_max)
    if excess > EPS_LIMIT:
        raise InfeasibleTargetError(
            f"target acceleration {target.acceleration} outside limits",
            residual=excess)
    pieces = _plan_raw(start.position, start.velocity, start.acceleration,
                       target.position, target.acceleration, limits)
    traj = Trajectory1D.from_segments(start, pieces)
    final = traj.final_state
    residual = max(abs(final.position - target.position),
                   abs(final.velocity),
                   abs(final.acceleration - target.acceleration))
    if residual > EPS_TARGET:
        raise InfeasibleTargetError(
            f"no profile reaches the target within {EPS_TARGET:g}",
            residual=residual)
    return traj


def plan_brake(start: KinematicState,
               limits: KinematicLimits) -> Trajectory1D:
    """Fastest stop: zero velocity and acceleration, final position free."""
    _check_start(start, limits)
    pieces = _transition(start.velocity, start.acceleration, 0.0, 0.0,
                         limits.a_min, limits.a_max,
                         limits.j_min, limits.j_max)
    return Trajectory1D.from_segments(start, pieces)
