"""Drone tracking, synthetic rope sensor, and litter drift models.

These stand in for the hardware chain: a second-order tracking model for the
autopilot position loop, an arc-length sampler with noise/dropout/outliers
for the RGB-D + GPS sensing, and a phenomenological downwash push on the
floating litter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from ..errors import ConfigError
from ..estimation import RopePointCloud
from ..geometry import _arc_length_general_arr, rot_z, wrap_angle
from .rope import TrueShape, shape_points_world


@dataclass(frozen=True)
class DroneModel:
    """Second-order position tracking with velocity/acceleration limits."""

    omega: float = 6.0
    zeta: float = 1.0
    v_max: float = 3.0
    a_max: float = 8.0

    def __post_init__(self):
        if self.omega <= 0 or self.zeta <= 0:
            raise ConfigError("drone model needs omega > 0 and zeta > 0")


@dataclass
class DroneState:
    p: np.ndarray
    v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    yaw: float = 0.0

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        self.v = np.asarray(self.v, dtype=float)


@lru_cache(maxsize=32)
def _tracking_propagator(omega: float, zeta: float, dt: float) -> np.ndarray:
    """Exact matrix exponential of d/dt [e, v] = [[0, 1], [-w^2, -2 z w]]."""
    a = np.array([[0.0, 1.0], [-omega * omega, -2.0 * zeta * omega]])
    return expm(a * dt)


def drone_step(
    state: DroneState, p_ref, yaw_ref: float, model: DroneModel, dt: float, v_ref=None
) -> DroneState:
    """Advance the tracking model by dt toward a (possibly moving) reference.

    The error dynamics a = w^2 (p_ref - p) - 2 z w v are integrated exactly
    through the matrix exponential; with v_ref the reference moves linearly
    within the step (first-order hold), which reproduces the continuous ramp
    lag 2 z v / w without bias. Steps that would exceed the acceleration or
    speed limits fall back to clamped semi-implicit substeps.
    """
    if dt <= 0:
        raise ConfigError("dt must be positive")
    p_ref = np.asarray(p_ref, dtype=float)
    v_ref = np.zeros(3) if v_ref is None else np.asarray(v_ref, dtype=float)
    err = state.p - p_ref
    accel0 = -model.omega**2 * err - 2.0 * model.zeta * model.omega * state.v
    # affine offset: d/dt [e, v] = A [e, v] + [-v_ref, 0], A^-1 b = [2 z v_ref / w, -v_ref]
    shift = np.vstack([2.0 * model.zeta * v_ref / model.omega, -v_ref])
    phi = _tracking_propagator(model.omega, model.zeta, dt)
    ev = phi @ (np.vstack([err, state.v]) + shift) - shift
    new_err, new_v = ev[0], ev[1]
    saturated = (
        np.linalg.norm(accel0) > model.a_max or np.linalg.norm(new_v) > model.v_max
    )
    if saturated:
        n_sub = 20
        h = dt / n_sub
        e, v = err.copy(), state.v.copy()
        for _ in range(n_sub):
            a = -model.omega**2 * e - 2.0 * model.zeta * model.omega * v
            a_norm = np.linalg.norm(a)
            if a_norm > model.a_max:
                a *= model.a_max / a_norm
            v = v + a * h
            v_norm = np.linalg.norm(v)
            if v_norm > model.v_max:
                v *= model.v_max / v_norm
            e = e + (v - v_ref) * h
        new_err, new_v = e, v
    alpha = 1.0 - math.exp(-model.omega * dt)
    new_yaw = wrap_angle(state.yaw + alpha * wrap_angle(yaw_ref - state.yaw))
    return DroneState(p=p_ref + new_err + v_ref * dt, v=new_v, yaw=new_yaw)


@dataclass(frozen=True)
class SensorModel:
    """Synthetic rope sensing: arc-uniform curve samples plus GPS endpoints."""

    samples_per_frame: int = 60
    noise_sigma: float = 0.01
    dropout_prob: float = 0.0
    outlier_count: int = 0
    outlier_offset: float = 0.5
    gps_sigma: float = 0.02
    frame_rate: float = 15.0

    def __post_init__(self):
        if not 0.0 <= self.dropout_prob <= 1.0:
            raise ConfigError("dropout_prob must lie in [0, 1]")
        if min(self.noise_sigma, self.gps_sigma, self.outlier_offset) < 0:
            raise ConfigError("sigmas and offsets must be nonnegative")
        if self.frame_rate <= 0:
            raise ConfigError("frame_rate must be positive")


def sample_sensor(
    shape: TrueShape,
    p_a1,
    p_a2,
    model: SensorModel,
    seed: int,
    frame_index: int,
) -> RopePointCloud:
    """One synthetic sensor frame, deterministic per (seed, frame_index).

    Points are drawn uniformly in arc length on the true curve, perturbed by
    isotropic Gaussian noise, thinned by dropout, and augmented with
    off-plane outlier points (floating red litter in view). The attachment
    records get independent GPS noise.
    """
    rng = np.random.default_rng([seed, frame_index])
    y_grid = np.linspace(0.0, shape.y_span, 257)
    s_grid = _arc_length_general_arr(shape.a_p, shape.b_p, y_grid)
    total = float(s_grid[-1])
    s_draw = rng.uniform(0.0, total, model.samples_per_frame)
    y = np.interp(s_draw, s_grid, y_grid)
    pts = shape_points_world(shape, p_a1, y)
    pts = pts + rng.normal(0.0, model.noise_sigma, pts.shape)
    keep = rng.random(model.samples_per_frame) >= model.dropout_prob
    pts = pts[keep]
    if model.outlier_count > 0:
        y_out = rng.uniform(0.0, shape.y_span, model.outlier_count)
        signs = rng.choice([-1.0, 1.0], model.outlier_count)
        normal_dir = rot_z(shape.psi_p) @ np.array([1.0, 0.0, 0.0])
        outliers = shape_points_world(shape, p_a1, y_out) + np.outer(
            signs * model.outlier_offset, normal_dir
        )
        pts = np.vstack([pts, outliers])
    a1 = np.asarray(p_a1, dtype=float) + rng.normal(0.0, model.gps_sigma, 3)
    a2 = np.asarray(p_a2, dtype=float) + rng.normal(0.0, model.gps_sigma, 3)
    return RopePointCloud(points=pts, p_a1=a1, p_a2=a2)


@dataclass(frozen=True)
class LitterModel:
    """Downwash drift of floating litter away from the rotor ground points."""

    drift_gain: float = 8.0
    decay_length: float = 0.15
    lateral_offset_range: float = 0.15

    def __post_init__(self):
        if self.drift_gain < 0 or self.decay_length <= 0:
            raise ConfigError("drift gain must be >= 0 with positive decay length")


def downwash_drift(p_lt, robot_positions, dt: float, gain: float, decay: float):
    """Advance the litter on the water plane under the downwash push.

    Each robot contributes gain * exp(-r / decay) away from its ground
    projection, where r is the horizontal robot-litter distance; symmetric
    configurations cancel.
    """
    p_lt = np.asarray(p_lt, dtype=float).copy()
    velocity = np.zeros(2)
    for robot in robot_positions:
        ground = np.asarray(robot, dtype=float)[:2]
        offset = p_lt[:2] - ground
        r = float(np.linalg.norm(offset))
        if r < 1e-9:
            continue
        velocity += gain * math.exp(-r / decay) * offset / r
    p_lt[:2] += velocity * dt
    p_lt[2] = 0.0
    return p_lt
