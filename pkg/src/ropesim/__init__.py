"""Dual-drone rope manipulation: planning, estimation, servoing and simulation."""

__version__ = "0.1.0"

from .geometry import (
    ParabolaShapeP,
    ParabolaShapeT,
    RopeSpec,
    arc_length,
    arc_length_general,
    solve_curvature_for_length,
    solve_span_for_length,
)

__all__ = [
    "ParabolaShapeP",
    "ParabolaShapeT",
    "RopeSpec",
    "arc_length",
    "arc_length_general",
    "solve_curvature_for_length",
    "solve_span_for_length",
    "__version__",
]
