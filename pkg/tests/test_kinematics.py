"""Tests for the constant-jerk kinematics primitives."""

from __future__ import annotations

import math

import numpy as np
import pytest

from pathparam import (
    JerkSegment,
    KinematicLimits,
    KinematicState,
    Trajectory1D,
    integrate_segment,
    validate,
)

LIMITS = KinematicLimits.symmetric(2.0, 4.0, 8.0)


def random_trajectory(rng: np.random.Generator,
                      limits: KinematicLimits) -> Trajectory1D:
    """A short random piecewise-constant-jerk chain from a random state."""
    start = KinematicState(rng.uniform(-1, 1), rng.uniform(-1, 1),
                           rng.uniform(-2, 2))
    pieces = [(rng.uniform(limits.j_min, limits.j_max),
               rng.uniform(0.0, 0.08))
              for _ in range(rng.integers(1, 6))]
    return Trajectory1D.from_segments(start, pieces)


# =========================================================================
# Integration
# =========================================================================

class TestIntegrateSegment:
    def test_closed_form_spot_value(self):
        """p' = p + v dt + a dt^2/2 + j dt^3/6, and the lower derivatives."""
        s = integrate_segment(KinematicState(1.0, 2.0, 3.0), 6.0, 0.5)
        assert s.position == pytest.approx(1.0 + 1.0 + 3.0 * 0.125 + 0.125)
        assert s.velocity == pytest.approx(2.0 + 1.5 + 3.0 * 0.25)
        assert s.acceleration == pytest.approx(3.0 + 3.0)

    def test_zero_dt_is_identity(self):
        s = KinematicState(0.3, -0.4, 0.5)
        assert integrate_segment(s, 5.0, 0.0) == s

    def test_negative_dt_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            integrate_segment(KinematicState(0, 0, 0), 1.0, -0.1)

    def test_semigroup_property(self, rng):
        """Integrating dt1+dt2 equals integrating dt1 then dt2, to 1e-9."""
        for _ in range(300):
            s = KinematicState(*rng.uniform(-2, 2, size=3))
            j = rng.uniform(-8, 8)
            dt1, dt2 = rng.uniform(0, 1, size=2)
            once = integrate_segment(s, j, dt1 + dt2)
            twice = integrate_segment(integrate_segment(s, j, dt1), j, dt2)
            assert once.position == pytest.approx(twice.position, abs=1e-9)
            assert once.velocity == pytest.approx(twice.velocity, abs=1e-9)
            assert once.acceleration == pytest.approx(twice.acceleration,
                                                      abs=1e-9)


# =========================================================================
# Trajectory construction and sampling
# =========================================================================

class TestTrajectory1D:
    def test_from_segments_chains_states(self):
        traj = Trajectory1D.from_segments(KinematicState(0, 0, 0),
                                          [(2.0, 0.5), (-2.0, 0.5)])
        assert traj.total_duration == pytest.approx(1.0)
        assert traj.segments[1].start == traj.segments[0].end

    def test_zero_duration_trajectory_holds_state(self):
        """An empty piece list yields a single zero-duration segment."""
        s = KinematicState(1.0, 0.5, -0.25)
        traj = Trajectory1D.from_segments(s, [])
        assert traj.total_duration == 0.0
        assert traj.sample(0.0) == s
        assert traj.sample(3.0) == s
        ext = traj.extrema()
        assert ext.velocity_min == ext.velocity_max == 0.5
        assert ext.acceleration_min == ext.acceleration_max == -0.25

    def test_discontinuous_chain_rejected(self):
        a = JerkSegment(KinematicState(0, 0, 0), 1.0, 0.5)
        b = JerkSegment(KinematicState(5.0, 0, 0), 1.0, 0.5)
        with pytest.raises(ValueError, match="discontinuity"):
            Trajectory1D((a, b), 1.0)

    def test_wrong_total_duration_rejected(self):
        a = JerkSegment(KinematicState(0, 0, 0), 1.0, 0.5)
        with pytest.raises(ValueError, match="total_duration"):
            Trajectory1D((a,), 0.75)

    def test_sample_holds_after_end(self):
        traj = Trajectory1D.from_segments(KinematicState(0, 1, 0), [(0.0, 1.0)])
        end = traj.final_state
        assert traj.sample(1.0) == end
        assert traj.sample(100.0) == end

    def test_sample_before_start_rejected(self):
        traj = Trajectory1D.from_segments(KinematicState(0, 0, 0), [(1.0, 1.0)])
        with pytest.raises(ValueError, match=">= 0"):
            traj.sample(-0.5)

    def test_sample_matches_segment_states(self, rng):
        """Sampling at segment boundaries reproduces the chained states."""
        for _ in range(50):
            traj = random_trajectory(rng, LIMITS)
            t = 0.0
            for seg in traj.segments:
                s = traj.sample(t)
                assert s.position == pytest.approx(seg.start.position, abs=1e-12)
                assert s.velocity == pytest.approx(seg.start.velocity, abs=1e-12)
                t += seg.duration


# =========================================================================
# Extrema
# =========================================================================

class TestExtrema:
    def test_interior_velocity_peak_found(self):
        """A segment crossing a = 0 has its velocity extremum inside."""
        traj = Trajectory1D.from_segments(KinematicState(0, 0, 2.0),
                                          [(-2.0, 2.0)])
        # v(t) = 2t - t^2 peaks at t = 1 with v = 1; endpoints give 0.
        ext = traj.extrema()
        assert ext.velocity_max == pytest.approx(1.0)
        assert ext.velocity_min == pytest.approx(0.0)

    def test_matches_dense_sampling(self, rng):
        """Closed-form extrema agree with 10 kHz sampling to 1e-6."""
        for _ in range(1000):
            traj = random_trajectory(rng, LIMITS)
            ext = traj.extrema()
            ts = np.arange(0.0, traj.total_duration, 1e-4)
            states = [traj.sample(float(t)) for t in ts] + [traj.final_state]
            vs = [s.velocity for s in states]
            accs = [s.acceleration for s in states]
            assert ext.velocity_min <= min(vs) + 1e-6
            assert ext.velocity_max >= max(vs) - 1e-6
            assert ext.acceleration_min <= min(accs) + 1e-6
            assert ext.acceleration_max >= max(accs) - 1e-6
            # The dense sweep must also come close to the reported extrema.
            assert min(vs) <= ext.velocity_min + 1e-3
            assert max(vs) >= ext.velocity_max - 1e-3


# =========================================================================
# Limits and validation
# =========================================================================

class TestKinematicLimits:
    def test_pairs_must_straddle_zero(self):
        with pytest.raises(ValueError, match="straddle"):
            KinematicLimits(0.0, 1.0, -1.0, 1.0, -1.0, 1.0)
        with pytest.raises(ValueError, match="straddle"):
            KinematicLimits(-1.0, 1.0, -1.0, 1.0, -1.0, -0.5)

    def test_symmetric_constructor(self):
        lm = KinematicLimits.symmetric(1.0, 2.0, 3.0)
        assert (lm.v_min, lm.v_max) == (-1.0, 1.0)
        assert (lm.a_min, lm.a_max) == (-2.0, 2.0)
        assert (lm.j_min, lm.j_max) == (-3.0, 3.0)

    def test_scaled_jerk_touches_only_jerk(self):
        lm = KinematicLimits.symmetric(1.0, 2.0, 3.0).scaled_jerk(2.0)
        assert (lm.j_min, lm.j_max) == (-6.0, 6.0)
        assert (lm.v_max, lm.a_max) == (1.0, 2.0)


class TestValidate:
    def test_valid_trajectory_reports_margin(self):
        traj = Trajectory1D.from_segments(KinematicState(0, 0, 0),
                                          [(8.0, 0.1), (-8.0, 0.1)])
        report = validate(traj, LIMITS)
        assert report.valid
        assert report.violated_quantity is None
        assert report.worst_margin <= 0.0

    def test_jerk_violation_detected(self):
        traj = Trajectory1D.from_segments(KinematicState(0, 0, 0), [(9.0, 0.1)])
        report = validate(traj, LIMITS)
        assert not report.valid
        assert report.violated_quantity == "jerk"
        assert report.worst_margin == pytest.approx(1.0)

    def test_velocity_violation_detected(self):
        traj = Trajectory1D.from_segments(KinematicState(0, 2.5, 0), [(0.0, 1.0)])
        report = validate(traj, LIMITS)
        assert not report.valid
        assert report.violated_quantity == "velocity"
        assert report.worst_margin == pytest.approx(0.5)

    def test_direction_violation_detected(self):
        """A momentary velocity sign flip is caught even between samples."""
        traj = Trajectory1D.from_segments(KinematicState(0, 0.05, -2.0),
                                          [(8.0, 0.5)])
        assert validate(traj, LIMITS, "nonneg").violated_quantity == "direction"
        assert validate(traj, LIMITS, "any").valid

    def test_nonpos_direction(self):
        traj = Trajectory1D.from_segments(KinematicState(0, -1.0, 0), [(0.0, 1.0)])
        assert validate(traj, LIMITS, "nonpos").valid
        assert not validate(traj, LIMITS, "nonneg").valid

    def test_monotone_in_limits(self, rng):
        """Enlarging every limit interval never turns valid into invalid."""
        for _ in range(300):
            traj = random_trajectory(rng, LIMITS)
            direction = ("any", "nonneg", "nonpos")[rng.integers(3)]
            report = validate(traj, LIMITS, direction)
            wider = KinematicLimits(LIMITS.v_min * 1.7, LIMITS.v_max * 2.1,
                                    LIMITS.a_min * 1.3, LIMITS.a_max * 3.0,
                                    LIMITS.j_min * 2.0, LIMITS.j_max * 1.1)
            if report.valid:
                assert validate(traj, wider, direction).valid
