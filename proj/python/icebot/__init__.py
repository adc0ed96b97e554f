"""Roadmap-based catheter view recovery (C++ core)."""

from ._core import (
    Controller,
    IcebotError,
    Roadmap,
    benchmark,
    build_report,
    distance,
    forward_kinematics,
    jacobian,
    orientation_error,
    plan,
    replay,
    rigid_register,
    snap_to_roadmap,
    tip_position_error,
    tip_rates_to_joint_rates,
)

__all__ = [
    "Controller",
    "IcebotError",
    "Roadmap",
    "benchmark",
    "build_report",
    "distance",
    "forward_kinematics",
    "jacobian",
    "orientation_error",
    "plan",
    "replay",
    "rigid_register",
    "snap_to_roadmap",
    "tip_position_error",
    "tip_rates_to_joint_rates",
]
