"""Offline rope-shape planner.

Per timestep the planner picks the robot separation d (and through the rope
length constraint the curvature a) minimising

    J(d) = f_t(a(d), d) + w_gr(dist to litter) * f_gr(a(d), d)

where f_t is the rope tension at the attachments and f_gr the unused hooked
width. The curvature is eliminated through the fixed rope length, reducing
each step to a bounded scalar minimisation solved on a dense grid with
golden-section refinement. Robot references then follow from the symmetric
parabola geometry.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InfeasibleError
from .geometry import (
    RopeSpec,
    _curvature_for_length_arr,
    _span_for_length_arr,
    endpoint_tension,
    rot_z,
    sag,
    solve_curvature_for_length,
    solve_span_for_length,
    wrap_angle,
)
from .trajectories import HookTrajectory

# horizontal speed below which the yaw reference is held at its last value
_YAW_HOLD_SPEED = 1e-3
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class PlannerConfig:
    """Weights, bounds and physical inputs of the shape planner.

    w, k_gr, k_pos parameterise the sigmoid grasp weight; d_min/h_min/phi_max
    bound the separation; p_lt is the litter position. v_sep_max rate-limits
    the separation reference so commanded shapes stay dynamically feasible.
    """

    w: float = 1.0
    k_gr: float = 1.0
    k_pos: float = 1.0
    d_min: float = 1.0
    h_min: float = 0.3
    phi_max: float = math.radians(20.0)
    m_robot: float = 2.0
    p_lt: tuple[float, float, float] = (0.0, 0.0, 0.0)
    v_sep_max: float = 0.3
    grid_points: int = 200
    refine_tol: float = 1e-6

    def __post_init__(self):
        if self.w < 0 or self.k_gr <= 0 or self.k_pos <= 0:
            raise ConfigError("sigmoid parameters out of range")
        if self.d_min <= 0 or self.h_min <= 0:
            raise ConfigError("d_min and h_min must be positive")
        if not 0 < self.phi_max < math.pi / 2:
            raise ConfigError("phi_max must lie in (0, pi/2)")

    @property
    def litter(self) -> np.ndarray:
        return np.asarray(self.p_lt, dtype=float)


@dataclass(frozen=True)
class SeparationBounds:
    """d_max = min of the height-limited and the roll-limited separation."""

    d_max: float
    d_max_h: float
    d_max_t: float

    def as_dict(self) -> dict:
        return {"d_max": self.d_max, "d_max_h": self.d_max_h, "d_max_t": self.d_max_t}


@dataclass
class PlannedTrajectory:
    """Planner output: per-step robot references and rope-shape references."""

    t: np.ndarray
    p_hook: np.ndarray
    v_hook: np.ndarray
    p_r1: np.ndarray
    p_r2: np.ndarray
    psi_r1: np.ndarray
    psi_r2: np.ndarray
    a_ref: np.ndarray
    b_ref: np.ndarray
    d_ref: np.ndarray
    psi_ref: np.ndarray
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])


def grasp_weight(dist: float, cfg: PlannerConfig) -> float:
    """Sigmoid weight of the unused-hook-width objective.

    Saturates toward w close to the litter and decays to zero far away;
    equals w/2 at dist == k_pos.
    """
    return cfg.w / (1.0 + math.exp(-cfg.k_gr * (cfg.k_pos - dist)))


def _roll_needed(d: float, spec: RopeSpec, m_robot: float) -> float:
    """Quasi-static roll a robot needs to hold the rope at separation d."""
    a = solve_curvature_for_length(d, spec.l_rope)
    _, h, v = endpoint_tension(a, d, spec)
    return math.atan2(h, m_robot * spec.g + v)


def _sag_at(d: float, spec: RopeSpec) -> float:
    return sag(solve_curvature_for_length(d, spec.l_rope), d)


def _largest_feasible(predicate, lo: float, hi: float, iters: int = 60) -> float:
    """Largest d in [lo, hi] with predicate(d) true; predicate is monotone
    (true below, false above). Assumes predicate(lo) is true."""
    if predicate(hi):
        return hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if predicate(mid):
            lo = mid
        else:
            hi = mid
    return lo


def compute_d_max(cfg: PlannerConfig, spec: RopeSpec) -> SeparationBounds:
    """Upper separation bound from the flight-height and roll-angle limits.

    d_max_h keeps the robots (at hook height + sag) at least h_min above the
    hook plane; d_max_t keeps the roll needed to hold the rope tension within
    phi_max. Both maps are monotone in d, so bisection applies.
    """
    hi = spec.l_rope * (1.0 - 1e-9)
    lo = min(cfg.d_min, 1e-3 * spec.l_rope)
    if _sag_at(lo, spec) < cfg.h_min:
        raise InfeasibleError(
            f"minimum flight height {cfg.h_min} m exceeds the achievable sag"
        )
    d_max_h = _largest_feasible(lambda d: _sag_at(d, spec) >= cfg.h_min, lo, hi)
    if _roll_needed(lo, spec, cfg.m_robot) > cfg.phi_max:
        raise InfeasibleError("roll limit violated even at the smallest separation")
    d_max_t = _largest_feasible(
        lambda d: _roll_needed(d, spec, cfg.m_robot) <= cfg.phi_max, lo, hi
    )
    d_max = min(d_max_h, d_max_t)
    if d_max < cfg.d_min - 1e-9:
        raise InfeasibleError(
            f"d_max {d_max:.3f} m is below the safety separation d_min {cfg.d_min} m"
        )
    # exactly-binding bounds collapse the feasible set to the single point d_min
    d_max = max(d_max, cfg.d_min)
    return SeparationBounds(d_max=d_max, d_max_h=d_max_h, d_max_t=d_max_t)


def yaw_reference(v_hook, previous: float = 0.0) -> float:
    """Yaw of the rope plane: aligned with the horizontal hook velocity.

    Holds the previous value while the horizontal speed is negligible (pure
    ascent or hover leaves the heading undefined).
    """
    vx, vy = float(v_hook[0]), float(v_hook[1])
    if math.hypot(vx, vy) < _YAW_HOLD_SPEED:
        return previous
    return math.atan2(vy, vx)


class ObjectiveTables:
    """Precomputed separation grid shared by every planning step.

    The tension and unused-hook-width terms depend on d only (the litter
    distance enters through the weight), so the expensive curvature and
    hook-span solves are done once per trajectory.
    """

    def __init__(self, cfg: PlannerConfig, spec: RopeSpec, bounds: SeparationBounds):
        self.cfg = cfg
        self.spec = spec
        self.bounds = bounds
        self.d = np.linspace(cfg.d_min, bounds.d_max, cfg.grid_points)
        self.a = _curvature_for_length_arr(self.d, spec.l_rope)
        u = self.a * self.d
        self.tension = spec.m_rope * spec.g * np.sqrt(1.0 + u * u) / (2.0 * u)
        d_hook = _span_for_length_arr(self.a, spec.l_hook)
        self.unused_hook = spec.l_hook - d_hook

    def terms_at(self, d: float) -> tuple[float, float]:
        """Fresh (tension, unused hook width) at an arbitrary separation."""
        a = solve_curvature_for_length(d, self.spec.l_rope)
        t, _, _ = endpoint_tension(a, d, self.spec)
        f_gr = self.spec.l_hook - solve_span_for_length(a, self.spec.l_hook)
        return t, f_gr

    def objective_at(self, d: float, w_gr: float) -> float:
        t, f_gr = self.terms_at(d)
        return t + w_gr * f_gr


def _golden_min(f, lo: float, hi: float, tol: float) -> float:
    c = hi - _GOLDEN * (hi - lo)
    d = lo + _GOLDEN * (hi - lo)
    fc, fd = f(c), f(d)
    while hi - lo > tol:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _GOLDEN * (hi - lo)
            fc = f(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _GOLDEN * (hi - lo)
            fd = f(d)
    return 0.5 * (lo + hi)


def plan_step(
    p_hook,
    v_hook,
    cfg: PlannerConfig,
    spec: RopeSpec,
    tables: ObjectiveTables | None = None,
) -> tuple[float, float]:
    """One planning step: optimal (a_ref, d_ref) for the current hook point.

    Dense grid scan plus golden-section refinement of the weighted objective;
    exact ties (a flat objective at w = 0) resolve to the smallest separation.
    """
    if tables is None:
        tables = ObjectiveTables(cfg, spec, compute_d_max(cfg, spec))
    dist = float(np.linalg.norm(np.asarray(p_hook, dtype=float) - cfg.litter))
    w_gr = grasp_weight(dist, cfg)
    cost = tables.tension + w_gr * tables.unused_hook
    idx = int(np.argmin(cost))
    lo = tables.d[max(idx - 1, 0)]
    hi = tables.d[min(idx + 1, len(tables.d) - 1)]
    d_star = _golden_min(lambda d: tables.objective_at(d, w_gr), lo, hi, cfg.refine_tol)
    # endpoints win exact ties so a tension-only objective returns d_min itself
    candidates = [tables.d[0], d_star, tables.d[-1]]
    costs = [tables.objective_at(d, w_gr) for d in candidates]
    best = min(range(3), key=lambda k: (costs[k], candidates[k]))
    d_ref = float(candidates[best])
    a_ref = solve_curvature_for_length(d_ref, spec.l_rope)
    return a_ref, d_ref


def plan_trajectory(
    traj: HookTrajectory, cfg: PlannerConfig, spec: RopeSpec
) -> PlannedTrajectory:
    """Plan the full trajectory: shape references plus both robot references.

    Steps are planned independently, then two sequential passes apply the yaw
    hold and the separation rate limiter (|d[k+1] - d[k]| <= v_sep_max * dt,
    with the curvature re-solved wherever the limiter engages).
    """
    bounds = compute_d_max(cfg, spec)
    tables = ObjectiveTables(cfg, spec, bounds)
    n = len(traj)
    dt = traj.dt

    psi = np.empty(n)
    prev_yaw = 0.0
    for i in range(n):
        prev_yaw = yaw_reference(traj.v_hook[i], prev_yaw)
        psi[i] = wrap_angle(prev_yaw)

    a = np.empty(n)
    d = np.empty(n)
    for i in range(n):
        a[i], d[i] = plan_step(traj.p_hook[i], traj.v_hook[i], cfg, spec, tables)

    max_step = cfg.v_sep_max * dt
    limited = 0
    for i in range(1, n):
        lo, hi = d[i - 1] - max_step, d[i - 1] + max_step
        if d[i] < lo or d[i] > hi:
            d[i] = min(max(d[i], lo), hi)
            a[i] = solve_curvature_for_length(d[i], spec.l_rope)
            limited += 1

    sags = a * (d / 2.0) ** 2
    p_r1 = np.empty((n, 3))
    p_r2 = np.empty((n, 3))
    z_off = np.array([0.0, 0.0, spec.z_atc])
    for i in range(n):
        r = rot_z(psi[i])
        half = r @ np.array([0.0, d[i] / 2.0, 0.0])
        lift = np.array([0.0, 0.0, sags[i]])
        base = traj.p_hook[i] + z_off + lift
        p_r1[i] = base - half
        p_r2[i] = base + half

    return PlannedTrajectory(
        t=traj.t.copy(),
        p_hook=traj.p_hook.copy(),
        v_hook=traj.v_hook.copy(),
        p_r1=p_r1,
        p_r2=p_r2,
        psi_r1=psi.copy(),
        psi_r2=psi.copy(),
        a_ref=a,
        b_ref=np.zeros(n),
        d_ref=d,
        psi_ref=psi,
        meta={
            "separation_bounds": bounds.as_dict(),
            "grid_points": cfg.grid_points,
            "rate_limited_steps": limited,
        },
    )
