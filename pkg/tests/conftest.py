"""Shared test helpers: randomized but reproducible problem generators."""

from __future__ import annotations

import math

import numpy as np
import pytest

from pathparam import KinematicLimits, KinematicState
from pathparam.otg import TargetState


def feasible_problem(rng: np.random.Generator, limits: KinematicLimits,
                     span: float = 3.0) -> tuple[KinematicState, TargetState]:
    """Draw a random planning problem that admits a within-limits profile.

    Start and target accelerations are kept inside a margin of the
    acceleration bound and of the value whose jerk-limited release would
    sweep velocity across a full velocity bound; the start velocity leaves
    room for the unavoidable transient while shedding the start
    acceleration.  The planner gets no slack beyond that: its output must
    pass validation exactly.
    """
    j_eff = min(limits.j_max, -limits.j_min)
    v_eff = min(limits.v_max, -limits.v_min)
    a_cap = 0.85 * min(limits.a_max, -limits.a_min,
                       math.sqrt(2.0 * j_eff * v_eff * 0.85))
    a0 = rng.uniform(-a_cap, a_cap)
    a_t = rng.uniform(-a_cap, a_cap)
    margin = a0 * a0 / (2.0 * j_eff)
    v0 = rng.uniform(0.9 * (limits.v_min + margin),
                     0.9 * (limits.v_max - margin))
    p_t = rng.uniform(-span, span)
    return KinematicState(0.0, v0, a0), TargetState(p_t, a_t)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260822)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance verdict lines after the regular summary."""
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "VERDICTS", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
