"""Quasi-static closed-loop simulator.

rope      ground-truth parabola closure and the exact catenary oracle
models    second-order drone tracking, synthetic sensor, litter drift
scenario  closed-loop runner, run log, grasp predicate
ablation  seeded multi-run harness over planner weights
"""

from .rope import TrueShape, chain_equilibrium, rope_ground_truth, shape_lowest_point, shape_points_world
from .models import (
    DroneModel,
    DroneState,
    LitterModel,
    SensorModel,
    downwash_drift,
    drone_step,
    sample_sensor,
)
from .scenario import GraspOutcome, ScenarioConfig, ScenarioRunLog, grasp_check, run_scenario
from .ablation import AblationRow, ablation

__all__ = [
    "AblationRow",
    "DroneModel",
    "DroneState",
    "GraspOutcome",
    "LitterModel",
    "ScenarioConfig",
    "ScenarioRunLog",
    "SensorModel",
    "TrueShape",
    "ablation",
    "chain_equilibrium",
    "downwash_drift",
    "drone_step",
    "grasp_check",
    "rope_ground_truth",
    "sample_sensor",
    "shape_lowest_point",
    "shape_points_world",
]
