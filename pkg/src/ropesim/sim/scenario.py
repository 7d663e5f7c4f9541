"""Closed-loop scenario runner and grasp predicate.

Per control step: servo-corrected references feed the drone models, the rope
closes quasi-statically over the resulting attachments, the synthetic sensor
fires at its own rate, the estimator and the shape servo update, and the
litter drifts under downwash. The grasp predicate is evaluated on the logged
time series after the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigError, NoPassError, SingularConfigurationError
from ..estimation import EstimationConfig, KalmanState, estimate_shape
from ..geometry import RopeSpec, rot_z, solve_span_for_length
from ..planner import PlannedTrajectory, PlannerConfig, plan_trajectory
from ..servo import ServoConfig, ServoState, interaction_matrix, reference_in_p_frame, servo_step, shape_error
from ..trajectories import HookTrajectory
from .models import DroneModel, DroneState, LitterModel, SensorModel, downwash_drift, drone_step, sample_sensor
from .rope import rope_ground_truth, shape_lowest_point


@dataclass
class ScenarioConfig:
    """Everything one closed-loop run needs."""

    spec: RopeSpec
    planner: PlannerConfig
    trajectory: HookTrajectory
    servo: ServoConfig = ServoConfig()
    estimation: EstimationConfig = EstimationConfig()
    drone: DroneModel = DroneModel()
    sensor: SensorModel = SensorModel()
    litter: LitterModel = LitterModel()
    control_rate: float = 50.0
    seed: int = 0
    servo_enabled: bool = True
    drift_enabled: bool = False
    contact_threshold: float = 0.05
    litter_true_offset: tuple[float, float, float] = (0.0, 0.0, 0.0)
    relative_offset_bias: tuple[float, float, float] = (0.0, 0.0, 0.0)
    collect_frames: bool = False


@dataclass(frozen=True)
class GraspOutcome:
    """Result of the grasp predicate at the rope-plane crossing."""

    success: bool
    margin: float
    lateral_offset: float
    hook_coverage: float
    rope_height_at_litter: float
    contact_ok: bool
    crossing_index: int
    crossing_time: float

    def as_dict(self) -> dict:
        return {
            "success": bool(self.success),
            "margin_m": self.margin,
            "lateral_offset_m": self.lateral_offset,
            "hook_coverage_m": self.hook_coverage,
            "rope_height_at_litter_m": self.rope_height_at_litter,
            "contact_ok": bool(self.contact_ok),
            "crossing_index": int(self.crossing_index),
            "crossing_time_s": self.crossing_time,
        }


@dataclass
class ScenarioRunLog:
    """Uniform-rate time series of one closed-loop run."""

    t: np.ndarray
    p_hook_ref: np.ndarray
    v_hook_ref: np.ndarray
    p_r1_plan: np.ndarray
    p_r2_plan: np.ndarray
    cmd_r1: np.ndarray
    cmd_r2: np.ndarray
    p_r1: np.ndarray
    p_r2: np.ndarray
    dp_r1: np.ndarray
    dp_r2: np.ndarray
    a_true: np.ndarray
    b_true: np.ndarray
    psi_true: np.ndarray
    lowest: np.ndarray
    a_ref: np.ndarray
    d_ref: np.ndarray
    psi_ref: np.ndarray
    a_est: np.ndarray
    b_est: np.ndarray
    psi_est: np.ndarray
    est_stale: np.ndarray
    e_s: np.ndarray
    v_rel: np.ndarray
    litter: np.ndarray
    frame_step: np.ndarray
    plan: PlannedTrajectory
    outcome: GraspOutcome | None = None
    frames: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.t)

    @property
    def s_ref(self) -> np.ndarray:
        """Reference triples (a_p, b_p, psi_p) per step."""
        return np.stack([self.a_ref, -self.a_ref * self.d_ref, self.psi_ref], axis=1)


def grasp_check(
    log: ScenarioRunLog, spec: RopeSpec, contact_threshold: float = 0.05
) -> GraspOutcome:
    """Evaluate the grasp at the instant the rope plane sweeps past the litter.

    Success needs the litter inside the hooked ground coverage around the
    true lowest point and the rope low enough at the litter's lateral offset
    to keep the hooks in contact with the surface.
    """
    v_h = log.v_hook_ref[:, :2]
    speed = np.linalg.norm(v_h, axis=1)
    moving = speed > 1e-6
    rel = log.litter[:, :2] - log.lowest[:, :2]
    along = np.einsum("ij,ij->i", rel, v_h) / np.where(moving, speed, 1.0)
    along = np.where(moving, along, np.inf)
    crossing = None
    for k in range(1, len(log)):
        if along[k - 1] > 0.0 >= along[k]:
            crossing = k
            break
    if crossing is None:
        raise NoPassError("the hook track never passed the litter position")

    span_dir = rot_z(log.psi_true[crossing]) @ np.array([0.0, 1.0, 0.0])
    lateral = float(
        abs((log.litter[crossing] - log.lowest[crossing]) @ span_dir)
    )
    a_true = float(log.a_true[crossing])
    coverage = solve_span_for_length(max(a_true, 0.0), spec.l_hook)
    margin = coverage / 2.0 - lateral
    height = float(log.lowest[crossing, 2]) + max(a_true, 0.0) * lateral**2
    contact_ok = height <= contact_threshold
    return GraspOutcome(
        success=bool(margin >= 0.0 and contact_ok),
        margin=margin,
        lateral_offset=lateral,
        hook_coverage=coverage,
        rope_height_at_litter=height,
        contact_ok=contact_ok,
        crossing_index=crossing,
        crossing_time=float(log.t[crossing]),
    )


def run_scenario(cfg: ScenarioConfig) -> ScenarioRunLog:
    """Run the closed loop over the configured trajectory and grade the grasp."""
    dt = 1.0 / cfg.control_rate
    if abs(cfg.trajectory.dt - dt) > 1e-9:
        raise ConfigError(
            f"trajectory timestep {cfg.trajectory.dt} must match the control period {dt}"
        )
    plan = plan_trajectory(cfg.trajectory, cfg.planner, cfg.spec)
    n = len(plan)
    bias = np.asarray(cfg.relative_offset_bias, dtype=float)
    plan_r1 = plan.p_r1 - bias / 2.0
    plan_r2 = plan.p_r2 + bias / 2.0

    z_off = np.array([0.0, 0.0, cfg.spec.z_atc])
    drone1 = DroneState(p=plan_r1[0].copy(), yaw=plan.psi_r1[0])
    drone2 = DroneState(p=plan_r2[0].copy(), yaw=plan.psi_r2[0])
    litter = cfg.planner.litter + np.asarray(cfg.litter_true_offset, dtype=float)
    litter[2] = 0.0

    kf = KalmanState()
    servo_state = ServoState()
    m_matrix = None
    frame_interval = 1.0 / cfg.sensor.frame_rate
    next_frame_t = 0.0
    frame_idx = 0
    last_e = np.zeros(3)
    last_v = np.zeros(3)
    last_est = np.full(3, np.nan)
    last_stale = True
    prev_cmd1 = None
    prev_cmd2 = None

    log = ScenarioRunLog(
        t=plan.t.copy(),
        p_hook_ref=plan.p_hook.copy(),
        v_hook_ref=plan.v_hook.copy(),
        p_r1_plan=plan.p_r1.copy(),
        p_r2_plan=plan.p_r2.copy(),
        cmd_r1=np.empty((n, 3)),
        cmd_r2=np.empty((n, 3)),
        p_r1=np.empty((n, 3)),
        p_r2=np.empty((n, 3)),
        dp_r1=np.empty((n, 3)),
        dp_r2=np.empty((n, 3)),
        a_true=np.empty(n),
        b_true=np.empty(n),
        psi_true=np.empty(n),
        lowest=np.empty((n, 3)),
        a_ref=plan.a_ref.copy(),
        d_ref=plan.d_ref.copy(),
        psi_ref=plan.psi_ref.copy(),
        a_est=np.empty(n),
        b_est=np.empty(n),
        psi_est=np.empty(n),
        est_stale=np.ones(n, dtype=bool),
        e_s=np.empty((n, 3)),
        v_rel=np.empty((n, 3)),
        litter=np.empty((n, 3)),
        frame_step=np.zeros(n, dtype=bool),
        plan=plan,
    )

    for k in range(n):
        corr1 = servo_state.dp_r1 if cfg.servo_enabled else np.zeros(3)
        corr2 = servo_state.dp_r2 if cfg.servo_enabled else np.zeros(3)
        cmd1 = plan_r1[k] + corr1
        cmd2 = plan_r2[k] + corr2
        vref1 = np.zeros(3) if prev_cmd1 is None else (cmd1 - prev_cmd1) / dt
        vref2 = np.zeros(3) if prev_cmd2 is None else (cmd2 - prev_cmd2) / dt
        drone1 = drone_step(drone1, cmd1, plan.psi_r1[k], cfg.drone, dt, vref1)
        drone2 = drone_step(drone2, cmd2, plan.psi_r2[k], cfg.drone, dt, vref2)
        prev_cmd1, prev_cmd2 = cmd1, cmd2

        p_a1 = drone1.p - z_off
        p_a2 = drone2.p - z_off
        shape = rope_ground_truth(p_a1, p_a2, cfg.spec.l_rope)
        lowest = shape_lowest_point(shape, p_a1)

        if log.t[k] >= next_frame_t - 1e-9:
            cloud = sample_sensor(shape, p_a1, p_a2, cfg.sensor, cfg.seed, frame_idx)
            est, kf = estimate_shape(cloud, cfg.estimation, cfg.spec, kf)
            s_ref = reference_in_p_frame(plan.a_ref[k], plan.d_ref[k], plan.psi_ref[k])
            last_e = shape_error(est.s, s_ref)
            last_est = est.s
            last_stale = est.stale
            try:
                m_matrix = interaction_matrix(
                    cloud.p_a1,
                    cloud.p_a2,
                    cfg.spec.l_rope,
                    fd_step=cfg.servo.fd_step,
                    cond_limit=cfg.servo.cond_limit,
                )
            except SingularConfigurationError:
                pass  # keep the previous matrix through a taut transient
            if cfg.servo_enabled and m_matrix is not None:
                last_v, servo_state = servo_step(
                    last_e, servo_state, m_matrix, cfg.servo, stale=last_stale
                )
            if cfg.collect_frames:
                log.frames.append((float(log.t[k]), frame_idx, cloud))
            log.frame_step[k] = True
            frame_idx += 1
            next_frame_t += frame_interval

        if cfg.drift_enabled:
            litter = downwash_drift(
                litter,
                [drone1.p, drone2.p],
                dt,
                cfg.litter.drift_gain,
                cfg.litter.decay_length,
            )

        log.cmd_r1[k], log.cmd_r2[k] = cmd1, cmd2
        log.p_r1[k], log.p_r2[k] = drone1.p, drone2.p
        log.dp_r1[k], log.dp_r2[k] = corr1, corr2
        log.a_true[k], log.b_true[k], log.psi_true[k] = shape.a_p, shape.b_p, shape.psi_p
        log.lowest[k] = lowest
        log.a_est[k], log.b_est[k], log.psi_est[k] = last_est
        log.est_stale[k] = last_stale
        log.e_s[k] = last_e
        log.v_rel[k] = last_v
        log.litter[k] = litter

    try:
        log.outcome = grasp_check(log, cfg.spec, cfg.contact_threshold)
    except NoPassError:
        log.outcome = None
    return log
