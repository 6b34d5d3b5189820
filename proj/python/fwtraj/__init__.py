"""Python interface to the fwtraj trajectory optimizer."""

from ._core import (  # noqa: F401
    BasisSet,
    BoundaryState,
    ControlProfile,
    Ellipsoid,
    HeadingVariant,
    Horizon,
    Limits,
    ProblemSpec,
    ResidualReport,
    Scenario,
    SolutionMetrics,
    SolveStatus,
    SolverConfig,
    TrajectorySolution,
    Weights,
    build_basis,
    check_avoidance,
    estimate_traversal_time,
    eval_collision_residual,
    eval_curve,
    eval_kinematic_residual,
    inflate_obstacles,
    load_scenario,
    recover_controls,
    solve,
    solve_scenario,
)

__all__ = [name for name in dir() if not name.startswith("_")]
