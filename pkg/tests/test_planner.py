import math

import numpy as np
import pytest

from ropesim.errors import ConfigError, InfeasibleError
from ropesim.geometry import (
    RopeSpec,
    _curvature_for_length_arr,
    _span_for_length_arr,
    arc_length,
    sag,
    solve_curvature_for_length,
)
from ropesim.planner import (
    ObjectiveTables,
    PlannerConfig,
    compute_d_max,
    grasp_weight,
    plan_step,
    plan_trajectory,
    yaw_reference,
)
from ropesim.trajectories import (
    HookTrajectory,
    circular_trajectory,
    straight_trajectory,
    waypoint_trajectory,
)

GRASS_LITTER = (-3.6, 7.0, 0.0)


def grass_field(dt=0.02):
    return straight_trajectory(
        start=(-3.6, 3.0, 0.0),
        cruise_velocity=(0.0, 0.5, 0.0),
        cruise_duration=8.0,
        ascent_velocity=(0.0, 0.5, 0.1),
        ascent_duration=4.0,
        dt=dt,
    )


def brute_force_argmin(tables, w_gr, n=100_000):
    """Independent minimiser: dense scan of the eliminated objective."""
    d = np.linspace(tables.d[0], tables.d[-1], n)
    a = _curvature_for_length_arr(d, tables.spec.l_rope)
    u = a * d
    tension = tables.spec.m_rope * tables.spec.g * np.sqrt(1.0 + u * u) / (2.0 * u)
    f_gr = tables.spec.l_hook - _span_for_length_arr(a, tables.spec.l_hook)
    return float(d[np.argmin(tension + w_gr * f_gr)])



@pytest.fixture(scope="module")
def grass_plan():
    spec = RopeSpec()
    cfg = PlannerConfig(w=1.0, p_lt=GRASS_LITTER)
    return cfg, spec, plan_trajectory(grass_field(), cfg, spec)

class TestGraspWeight:
    def test_sigmoid_midpoint(self):
        cfg = PlannerConfig(w=1.0, k_gr=1.0, k_pos=1.0)
        assert grasp_weight(cfg.k_pos, cfg) == pytest.approx(0.5, rel=1e-12)

    def test_far_from_litter_vanishes(self):
        cfg = PlannerConfig()
        assert grasp_weight(40.0, cfg) < 1e-15
        assert grasp_weight(40.0, cfg) >= 0.0

    def test_at_litter_hand_value(self):
        cfg = PlannerConfig(w=1.0, k_gr=1.0, k_pos=1.0)
        assert grasp_weight(0.0, cfg) == pytest.approx(1.0 / (1.0 + math.exp(-1.0)), rel=1e-12)
        assert grasp_weight(0.0, cfg) == pytest.approx(0.7311, abs=1e-4)

    def test_monotone_nonincreasing(self):
        cfg = PlannerConfig(w=1.3, k_gr=2.0, k_pos=0.7)
        dists = np.linspace(0.0, 10.0, 50)
        vals = [grasp_weight(d, cfg) for d in dists]
        assert all(v1 >= v2 for v1, v2 in zip(vals, vals[1:]))
        assert all(0.0 < v < cfg.w for v in vals)


class TestSeparationBounds:
    def test_unconstrained_limit_approaches_rope_length(self, spec):
        cfg = PlannerConfig(phi_max=math.pi / 2 - 1e-6, h_min=1e-6, d_min=0.1)
        bounds = compute_d_max(cfg, spec)
        assert bounds.d_max > 0.999 * spec.l_rope

    def test_height_bound_binding_at_minimum(self, spec):
        d_min = 1.0
        sag_at_min = sag(solve_curvature_for_length(d_min, spec.l_rope), d_min)
        cfg = PlannerConfig(d_min=d_min, h_min=sag_at_min)
        bounds = compute_d_max(cfg, spec)
        assert bounds.d_max_h == pytest.approx(d_min, abs=1e-7)

    def test_roll_bound_tight_at_returned_separation(self, spec):
        cfg = PlannerConfig(phi_max=0.35, m_robot=2.0, h_min=1e-6, d_min=0.5)
        bounds = compute_d_max(cfg, spec)
        from ropesim.planner import _roll_needed

        roll = _roll_needed(bounds.d_max_t, spec, cfg.m_robot)
        assert roll <= cfg.phi_max
        assert abs(roll - cfg.phi_max) < 1e-6

    def test_infeasible_when_below_d_min(self, spec):
        # at d_min = 1 m the sag is ~1.26 m; demanding more makes d_max < d_min
        with pytest.raises(InfeasibleError):
            compute_d_max(PlannerConfig(d_min=1.0, h_min=1.3), spec)


class TestYawReference:
    def test_lateral_motion(self):
        assert yaw_reference((0.0, 0.5, 0.0)) == pytest.approx(math.pi / 2)

    def test_channel_heading(self):
        assert yaw_reference((0.24, 0.0, 0.1)) == 0.0

    def test_pure_ascent_holds_previous(self):
        assert yaw_reference((0.0, 0.0, 0.1), previous=1.23) == 1.23


class TestPlanStep:
    def test_zero_weight_returns_d_min_exactly(self, spec):
        cfg = PlannerConfig(w=0.0, p_lt=GRASS_LITTER)
        tables = ObjectiveTables(cfg, spec, compute_d_max(cfg, spec))
        for p in [(-3.6, 3.0, 0.0), (-3.6, 7.0, 0.0), (0.0, 0.0, 0.0)]:
            _, d = plan_step(p, (0, 0.5, 0), cfg, spec, tables)
            assert d == cfg.d_min

    def test_far_from_litter_returns_d_min(self, spec):
        cfg = PlannerConfig(w=1.0, p_lt=(100.0, 0.0, 0.0))
        _, d = plan_step((0.0, 0.0, 0.0), (0, 0.5, 0), cfg, spec)
        assert d == cfg.d_min

    def test_weight_ordering_at_litter(self, spec):
        seps = {}
        for w in (0.0, 1.0, 1.5):
            cfg = PlannerConfig(w=w, p_lt=(0.0, 0.0, 0.0))
            tables = ObjectiveTables(cfg, spec, compute_d_max(cfg, spec))
            _, seps[w] = plan_step((0.0, 0.0, 0.0), (0, 0, 0), cfg, spec, tables)
        assert seps[1.5] > seps[1.0] > seps[0.0]

    def test_matches_brute_force_scan(self, spec, rng):
        cfg = PlannerConfig(w=1.2, p_lt=(0.0, 0.0, 0.0))
        tables = ObjectiveTables(cfg, spec, compute_d_max(cfg, spec))
        for _ in range(10):
            dist = rng.uniform(0.0, 3.0)
            p = (dist, 0.0, 0.0)
            _, d = plan_step(p, (0, 0, 0), cfg, spec, tables)
            d_bf = brute_force_argmin(tables, grasp_weight(dist, cfg))
            assert abs(d - d_bf) <= 1e-4


class TestPlanTrajectory:
    def test_grass_field_invariants(self, grass_plan):
        cfg, spec, plan = grass_plan
        residual = [abs(arc_length(a, d) - spec.l_rope) for a, d in zip(plan.a_ref, plan.d_ref)]
        assert max(residual) <= 1e-6
        d_max = plan.meta["separation_bounds"]["d_max"]
        assert (plan.d_ref >= cfg.d_min - 1e-12).all()
        assert (plan.d_ref <= d_max + 1e-12).all()
        assert (plan.a_ref >= 0.0).all()
        assert (plan.b_ref == 0.0).all()

    def test_separation_profile_is_bell_shaped_near_litter(self, grass_plan):
        cfg, spec, plan = grass_plan
        k = int(np.argmax(plan.d_ref))
        dist = np.linalg.norm(plan.p_hook[k] - np.asarray(GRASS_LITTER))
        assert dist <= cfg.k_pos
        assert plan.d_ref[k] > plan.d_ref[0]
        assert plan.d_ref[k] > plan.d_ref[-1]

    def test_zero_weight_profile_constant(self, spec):
        cfg = PlannerConfig(w=0.0, p_lt=GRASS_LITTER)
        plan = plan_trajectory(grass_field(), cfg, spec)
        assert (plan.d_ref == cfg.d_min).all()

    def test_straight_line_geometry(self, spec):
        # hook moving along +y: robot paths parallel to it, offset along x
        cfg = PlannerConfig(w=0.0, p_lt=(100.0, 100.0, 0.0))
        traj = straight_trajectory((0, 0, 0), (0, 0.5, 0), 4.0, (0, 0.5, 0.1), 1.0, dt=0.02)
        plan = plan_trajectory(traj, cfg, spec)
        n_cruise = 50
        assert np.allclose(plan.psi_ref[:n_cruise], math.pi / 2)
        dx1 = plan.p_r1[:n_cruise, 0] - plan.p_hook[:n_cruise, 0]
        dx2 = plan.p_r2[:n_cruise, 0] - plan.p_hook[:n_cruise, 0]
        assert np.allclose(np.abs(dx1), plan.d_ref[:n_cruise] / 2.0, atol=1e-12)
        assert np.allclose(dx1, -dx2, atol=1e-12)
        expected_z = plan.a_ref * (plan.d_ref / 2) ** 2 + spec.z_atc
        assert np.allclose(plan.p_r1[:, 2] - plan.p_hook[:, 2], expected_z, atol=1e-12)

    def test_inter_robot_distance_equals_separation(self, grass_plan):
        cfg, spec, plan = grass_plan
        gap = np.linalg.norm(plan.p_r1 - plan.p_r2, axis=1)
        assert np.allclose(gap, plan.d_ref, atol=1e-12)

    def test_hook_midpoint_identity(self, grass_plan):
        cfg, spec, plan = grass_plan
        z_atc = np.array([0.0, 0.0, spec.z_atc])
        mid = 0.5 * ((plan.p_r1 - z_atc) + (plan.p_r2 - z_atc))
        sags = plan.a_ref * (plan.d_ref / 2.0) ** 2
        expected = plan.p_hook + np.stack(
            [np.zeros_like(sags), np.zeros_like(sags), sags], axis=1
        )
        assert np.abs(mid - expected).max() <= 1e-9

    def test_robot_yaws_follow_shape_yaw_exactly(self, grass_plan):
        cfg, spec, plan = grass_plan
        assert (plan.psi_r1 == plan.psi_ref).all()
        assert (plan.psi_r2 == plan.psi_ref).all()

    def test_rate_limiter_bounds_separation_slew(self, spec):
        cfg = PlannerConfig(w=1.5, p_lt=GRASS_LITTER, v_sep_max=0.05)
        plan = plan_trajectory(grass_field(), cfg, spec)
        slews = np.abs(np.diff(plan.d_ref)) / plan.dt
        assert slews.max() <= cfg.v_sep_max + 1e-9
        assert plan.meta["rate_limited_steps"] > 0
        residual = [abs(arc_length(a, d) - spec.l_rope) for a, d in zip(plan.a_ref, plan.d_ref)]
        assert max(residual) <= 1e-6

    def test_circular_trajectory_yaw_sweeps(self, spec):
        cfg = PlannerConfig(w=1.0, p_lt=(0.0, 4.0, 0.0))
        traj = circular_trajectory(
            center=(0, 0, 0),
            radius=4.0,
            speed=0.5,
            start_angle=0.0,
            sweep_angle=math.pi / 2,
            dt=0.05,
        )
        plan = plan_trajectory(traj, cfg, spec)
        # tangential heading: psi = angle + pi/2 along a CCW circle
        expected = np.unwrap(np.arctan2(traj.v_hook[:, 1], traj.v_hook[:, 0]))
        assert np.allclose(np.unwrap(plan.psi_ref), expected, atol=1e-9)


class TestHookTrajectoryValidation:
    def test_velocity_consistency_across_leg_change(self):
        assert grass_field().check_velocity_consistency()

    def test_nonuniform_timestep_rejected(self):
        with pytest.raises(ConfigError):
            HookTrajectory(
                t=np.array([0.0, 0.1, 0.3]),
                p_hook=np.zeros((3, 3)),
                v_hook=np.zeros((3, 3)),
            )

    def test_decreasing_time_rejected(self):
        with pytest.raises(ConfigError):
            HookTrajectory(
                t=np.array([0.0, -0.1, -0.2]),
                p_hook=np.zeros((3, 3)),
                v_hook=np.zeros((3, 3)),
            )

    def test_waypoint_resampling(self):
        traj = waypoint_trajectory(
            [0.0, 2.0, 4.0],
            [[0, 0, 0], [1, 0, 0], [1, 2, 0]],
            dt=0.1,
        )
        assert traj.check_velocity_consistency()
        assert np.allclose(traj.p_hook[20], [1, 0, 0])
        assert np.allclose(traj.v_hook[5], [0.5, 0, 0])

    def test_bad_config_values_rejected(self):
        with pytest.raises(ConfigError):
            PlannerConfig(k_gr=-1.0)
        with pytest.raises(ConfigError):
            PlannerConfig(phi_max=2.0)
