"""Hook-point reference trajectories.

The planner consumes a uniformly sampled trajectory of the rope's middle
point. Builders here produce the three scenario families used in the field
tests (straight approach with ascent, circular approach, channel run) plus a
generic waypoint resampler.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass
class HookTrajectory:
    """Uniformly sampled middle-point reference: times, positions, velocities."""

    t: np.ndarray
    p_hook: np.ndarray  # (n, 3) world positions
    v_hook: np.ndarray  # (n, 3) world velocities

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.p_hook = np.asarray(self.p_hook, dtype=float)
        self.v_hook = np.asarray(self.v_hook, dtype=float)
        n = len(self.t)
        if self.p_hook.shape != (n, 3) or self.v_hook.shape != (n, 3):
            raise ConfigError("trajectory arrays must be (n,) and (n, 3)")
        if n < 2:
            raise ConfigError("trajectory needs at least two samples")
        steps = np.diff(self.t)
        if not (steps > 0).all():
            raise ConfigError("trajectory times must be strictly increasing")
        if not np.allclose(steps, steps[0], rtol=1e-9, atol=1e-12):
            raise ConfigError("trajectory timestep must be uniform")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    def __len__(self) -> int:
        return len(self.t)

    def check_velocity_consistency(self, rel_tol: float = 0.05) -> bool:
        """Finite differences of positions agree with the stored velocities
        within rel_tol wherever the velocity is appreciable.

        One-sided differences on both sides are accepted so that piecewise
        trajectories with velocity kinks still validate.
        """
        dt = self.dt
        fwd = np.diff(self.p_hook, axis=0) / dt
        err_f = np.linalg.norm(fwd - self.v_hook[:-1], axis=1)
        err_b = np.linalg.norm(fwd - self.v_hook[1:], axis=1)
        err = np.full(len(self.t), np.inf)
        err[:-1] = err_f
        err[1:] = np.minimum(err[1:], err_b)
        speed = np.linalg.norm(self.v_hook, axis=1)
        mask = speed > 1e-6
        return bool((err[mask] <= rel_tol * speed[mask]).all())


def _sample_count(duration: float, dt: float) -> int:
    return int(round(duration / dt)) + 1


def straight_trajectory(
    start,
    cruise_velocity,
    cruise_duration: float,
    ascent_velocity,
    ascent_duration: float,
    dt: float = 0.02,
) -> HookTrajectory:
    """Constant-velocity approach followed by a climbing leg.

    The grass-field run is start=(-3.6, 3, 0), cruise (0, 0.5, 0) for 8 s to
    the litter, then (0, 0.5, 0.1) while ascending; the channel run moves
    along x at 0.24 m/s instead.
    """
    start = np.asarray(start, dtype=float)
    v1 = np.asarray(cruise_velocity, dtype=float)
    v2 = np.asarray(ascent_velocity, dtype=float)
    n1 = _sample_count(cruise_duration, dt)
    n2 = _sample_count(ascent_duration, dt)
    t = dt * np.arange(n1 + n2 - 1)
    p = np.empty((len(t), 3))
    v = np.empty((len(t), 3))
    t1 = t[:n1, None]
    p[:n1] = start + v1 * t1
    v[:n1] = v1
    turn = p[n1 - 1].copy()
    t2 = (t[n1:, None] - t[n1 - 1])
    p[n1:] = turn + v2 * t2
    v[n1:] = v2
    return HookTrajectory(t=t, p_hook=p, v_hook=v)


def circular_trajectory(
    center,
    radius: float,
    speed: float,
    start_angle: float,
    sweep_angle: float,
    ascent_rate: float = 0.0,
    ascent_start_angle: float | None = None,
    dt: float = 0.02,
) -> HookTrajectory:
    """Arc at constant tangential speed, optionally climbing past a given angle.

    Angles follow the world convention (atan2), positive sweep is
    counter-clockwise.
    """
    if radius <= 0 or speed <= 0:
        raise ConfigError("circular trajectory needs positive radius and speed")
    center = np.asarray(center, dtype=float)
    omega = speed / radius * np.sign(sweep_angle)
    duration = abs(sweep_angle) * radius / speed
    t = dt * np.arange(_sample_count(duration, dt))
    ang = start_angle + omega * t
    p = np.stack(
        [
            center[0] + radius * np.cos(ang),
            center[1] + radius * np.sin(ang),
            np.full_like(ang, center[2]),
        ],
        axis=1,
    )
    v = np.stack(
        [
            -radius * omega * np.sin(ang),
            radius * omega * np.cos(ang),
            np.zeros_like(ang),
        ],
        axis=1,
    )
    if ascent_rate != 0.0 and ascent_start_angle is not None:
        climbing = (ang - ascent_start_angle) * np.sign(sweep_angle) >= 0.0
        if climbing.any():
            t0 = t[int(climbing.argmax())]
            p[:, 2] += ascent_rate * np.where(climbing, t - t0, 0.0)
            v[:, 2] = np.where(climbing, ascent_rate, 0.0)
    return HookTrajectory(t=t, p_hook=p, v_hook=v)


def waypoint_trajectory(times, positions, dt: float = 0.02) -> HookTrajectory:
    """Piecewise-linear resampling of sparse (t, position) waypoints."""
    times = np.asarray(times, dtype=float)
    positions = np.asarray(positions, dtype=float)
    if times.ndim != 1 or len(times) < 2 or positions.shape != (len(times), 3):
        raise ConfigError("waypoints need matching times (n,) and positions (n, 3)")
    if not (np.diff(times) > 0).all():
        raise ConfigError("waypoint times must be strictly increasing")
    t = times[0] + dt * np.arange(_sample_count(times[-1] - times[0], dt))
    p = np.stack([np.interp(t, times, positions[:, k]) for k in range(3)], axis=1)
    seg_v = np.diff(positions, axis=0) / np.diff(times)[:, None]
    idx = np.clip(np.searchsorted(times, t, side="right") - 1, 0, len(seg_v) - 1)
    v = seg_v[idx]
    return HookTrajectory(t=t, p_hook=p, v_hook=v)
