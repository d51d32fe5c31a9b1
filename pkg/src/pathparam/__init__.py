"""Jerk-limited time parameterization of multi-dimensional joint-space paths."""

from .errors import (
    DegeneratePathError,
    FormatError,
    InfeasibleTargetError,
    PathParamError,
    SearchContradictionError,
    StallError,
)
from .io import (
    LimitsConfig,
    RunConfig,
    default_limits,
    gen_random_1d,
    gen_random_walk,
    load_limits,
    load_path,
    load_trajectory,
    save_limits,
    save_path,
    save_trajectory,
)
from .kinematics import (
    JerkSegment,
    KinematicLimits,
    KinematicState,
    Trajectory1D,
    TrajectoryExtrema,
    ValidityReport,
    integrate_segment,
    validate,
)
from .multipath import (
    DeviationStats,
    MultiPath,
    ReferenceProfile,
    TrackingOutcome,
    build_multipath,
    initial_reference,
    iterate,
    path_deviation,
    path_deviation_points,
    s_of_u,
    track_dimension,
    u_of_s,
    update_reference,
)
from .otg import TargetState, plan_brake, plan_to_state
from .path1d import (
    AccRange,
    Path1D,
    Section,
    Waypoint1D,
    check_combined_feasibility,
    decompose,
    max_input_acc,
    max_output_acc,
    min_target_acc,
    time_optimal_traversal,
    waypoint_acc_ranges,
)
from .traversal import (
    StepBounds,
    TraversalState,
    lower_trajectory,
    run_with_mapping,
    start_state,
    step,
    upper_trajectory,
)

__all__ = [
    "AccRange",
    "DegeneratePathError",
    "DeviationStats",
    "FormatError",
    "InfeasibleTargetError",
    "JerkSegment",
    "KinematicLimits",
    "KinematicState",
    "LimitsConfig",
    "MultiPath",
    "Path1D",
    "PathParamError",
    "ReferenceProfile",
    "RunConfig",
    "SearchContradictionError",
    "Section",
    "StallError",
    "StepBounds",
    "TargetState",
    "TrackingOutcome",
    "Trajectory1D",
    "TrajectoryExtrema",
    "TraversalState",
    "ValidityReport",
    "Waypoint1D",
    "build_multipath",
    "check_combined_feasibility",
    "decompose",
    "default_limits",
    "gen_random_1d",
    "gen_random_walk",
    "initial_reference",
    "integrate_segment",
    "iterate",
    "load_limits",
    "load_path",
    "load_trajectory",
    "lower_trajectory",
    "max_input_acc",
    "max_output_acc",
    "min_target_acc",
    "path_deviation",
    "path_deviation_points",
    "plan_brake",
    "plan_to_state",
    "run_with_mapping",
    "s_of_u",
    "save_limits",
    "save_path",
    "save_trajectory",
    "start_state",
    "step",
    "time_optimal_traversal",
    "track_dimension",
    "u_of_s",
    "update_reference",
    "validate",
    "waypoint_acc_ranges",
]
