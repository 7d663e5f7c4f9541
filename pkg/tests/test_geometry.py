import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from ropesim.errors import DomainError, InfeasibleError, SingularConfigurationError
from ropesim.geometry import (
    ParabolaShapeT,
    RopeSpec,
    arc_length,
    arc_length_general,
    endpoint_tension,
    rot_z,
    sag,
    solve_curvature_for_length,
    solve_span_for_length,
    tool_to_p_frame,
    wrap_angle,
)


def quad_arc_length(a, d):
    """Independent oracle: adaptive quadrature of the arc-length integrand."""
    val, _ = quad(lambda y: math.sqrt(1.0 + (2.0 * a * y) ** 2), -d / 2.0, d / 2.0)
    return val


class TestArcLength:
    def test_straight_line_limit(self):
        assert arc_length(0.0, 2.0) == 2.0

    def test_known_value_matches_quadrature(self):
        # frozen from quad_arc_length(0.5, 2.0)
        assert arc_length(0.5, 2.0) == pytest.approx(2.295587149392638, rel=1e-12)
        assert arc_length(0.5, 2.0) == pytest.approx(quad_arc_length(0.5, 2.0), rel=1e-12)

    def test_series_switch_is_continuous(self):
        assert arc_length(1e-9, 2.8) == pytest.approx(2.8, abs=1e-12)
        just_below, just_above = 0.99e-6 / 2.8, 1.01e-6 / 2.8
        assert arc_length(just_below, 2.8) == pytest.approx(
            arc_length(just_above, 2.8), abs=1e-12
        )

    def test_agrees_with_quadrature_on_grid(self):
        for a in np.linspace(0.0, 2.0, 9):
            for d in np.linspace(0.1, 3.0, 9):
                assert arc_length(a, d) == pytest.approx(quad_arc_length(a, d), rel=1e-9)

    def test_negative_inputs_rejected(self):
        with pytest.raises(DomainError):
            arc_length(-0.1, 1.0)
        with pytest.raises(DomainError):
            arc_length(0.1, -1.0)

    @given(
        a=st.floats(0.0, 2.0),
        d=st.floats(0.1, 3.0),
        da=st.floats(1e-3, 1.0),
        dd=st.floats(1e-3, 1.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_strictly_increasing_in_both_arguments(self, a, d, da, dd):
        base = arc_length(a, d)
        assert arc_length(a + da, d) > base
        assert arc_length(a, d + dd) > base


class TestArcLengthGeneral:
    def test_flat_segment(self):
        assert arc_length_general(0.0, 0.0, 1.4) == 1.4

    def test_45_degree_line(self):
        assert arc_length_general(0.0, 1.0, 1.0) == pytest.approx(math.sqrt(2.0), rel=1e-14)

    def test_symmetric_shape_identity(self):
        # z = a*y^2 - a*d*y over [0, d] is the symmetric curve shifted to one end
        assert arc_length_general(0.5, -1.0, 2.0) == pytest.approx(
            arc_length(0.5, 2.0), rel=1e-14
        )

    @given(a=st.floats(1e-4, 2.0), d=st.floats(0.1, 3.0))
    @settings(max_examples=200, deadline=None)
    def test_symmetry_identity_property(self, a, d):
        assert arc_length_general(a, -a * d, d) == pytest.approx(arc_length(a, d), rel=1e-12)

    def test_matches_quadrature_general(self):
        for a, b, y in [(0.7, -0.9, 1.8), (-0.4, 0.3, 1.2), (1.5, 0.0, 0.8), (1e-7, 2.0, 1.0)]:
            oracle, _ = quad(lambda t: math.sqrt(1.0 + (2 * a * t + b) ** 2), 0.0, y)
            assert arc_length_general(a, b, y) == pytest.approx(oracle, rel=1e-9)


class TestCurvatureSolve:
    def test_taut_limit(self):
        assert solve_curvature_for_length(2.8, 2.8) == 0.0
        assert solve_curvature_for_length(2.8 - 1e-9, 2.8) < 1e-3

    def test_inverse_of_arc_length_example(self):
        assert solve_curvature_for_length(2.0, 2.295587149392638) == pytest.approx(
            0.5, rel=1e-10
        )

    def test_round_trip(self):
        a = solve_curvature_for_length(2.0, 2.8)
        assert arc_length(a, 2.0) == pytest.approx(2.8, rel=1e-10)

    def test_infeasible_and_domain_errors(self):
        with pytest.raises(InfeasibleError):
            solve_curvature_for_length(3.0, 2.8)
        with pytest.raises(DomainError):
            solve_curvature_for_length(-1.0, 2.8)

    @given(d=st.floats(0.1, 2.7), l=st.floats(2.8, 6.0))
    @settings(max_examples=200, deadline=None)
    def test_round_trip_property(self, d, l):
        a = solve_curvature_for_length(d, l)
        assert arc_length(a, d) == pytest.approx(l, rel=1e-9)


class TestSpanSolve:
    def test_flat_rope_covers_own_length(self):
        assert solve_span_for_length(0.0, 0.30) == 0.30

    def test_inverse_round_trip(self):
        assert solve_span_for_length(0.5, 2.295587149392638) == pytest.approx(2.0, rel=1e-10)

    def test_curvature_shortens_coverage(self):
        for a in (0.2, 1.0, 5.0):
            assert solve_span_for_length(a, 0.30) < 0.30

    @given(a=st.floats(1e-3, 6.0), l=st.floats(0.05, 3.0))
    @settings(max_examples=200, deadline=None)
    def test_round_trip_property(self, a, l):
        d = solve_span_for_length(a, l)
        assert arc_length(a, d) == pytest.approx(l, rel=1e-9)


class TestEndpointTension:
    def test_hand_evaluated_value(self, spec):
        # a*d = 1 with the 0.25 kg rope: t = 0.25*9.81*sqrt(2)/2
        t, h, v = endpoint_tension(0.5, 2.0, spec)
        assert t == pytest.approx(1.7342, abs=5e-5)
        assert v == pytest.approx(0.25 * 9.81 / 2.0, rel=1e-14)

    def test_vertical_rope_limit(self, spec):
        t, _, v = endpoint_tension(100.0, 2.0, spec)
        assert t == pytest.approx(spec.m_rope * spec.g / 2.0, rel=1e-3)
        assert t > v

    def test_pythagorean_identity(self, spec):
        for a, d in [(0.3, 1.0), (2.0, 0.7), (0.05, 2.5)]:
            t, h, v = endpoint_tension(a, d, spec)
            assert math.hypot(h, v) == pytest.approx(t, abs=1e-12)

    def test_singular_configuration(self, spec):
        with pytest.raises(SingularConfigurationError):
            endpoint_tension(0.0, 2.0, spec)

    def test_increasing_in_d_under_length_constraint(self, spec):
        # eliminate a through the fixed rope length; tension then grows as the
        # robots separate (why the tension-only planner collapses to d_min)
        spans = np.linspace(0.5, 2.7, 40)
        tensions = []
        for d in spans:
            a = solve_curvature_for_length(d, spec.l_rope)
            tensions.append(endpoint_tension(a, d, spec)[0])
        assert all(t1 < t2 for t1, t2 in zip(tensions, tensions[1:]))


class TestSagAndFrames:
    def test_sag_values(self):
        assert sag(0.0, 2.0) == 0.0
        assert sag(0.5, 2.0) == 0.5

    def test_sag_decreasing_along_length_constraint(self, spec):
        spans = np.linspace(0.3, 2.7, 40)
        sags = [sag(solve_curvature_for_length(d, spec.l_rope), d) for d in spans]
        assert all(s1 > s2 for s1, s2 in zip(sags, sags[1:]))

    def test_tool_to_p_frame_conversion(self):
        p = tool_to_p_frame(ParabolaShapeT(a=0.5, psi=1.2), d=2.0)
        assert (p.a_p, p.b_p, p.c_p) == (0.5, -1.0, 0.0)
        assert p.psi_p == 1.2

    def test_tool_to_p_frame_zero_curvature(self):
        p = tool_to_p_frame(ParabolaShapeT(a=0.0), d=2.0)
        assert (p.a_p, p.b_p, p.c_p) == (0.0, 0.0, 0.0)

    def test_p_frame_vertex_matches_sag(self):
        a, d = 0.8, 1.5
        p = tool_to_p_frame(ParabolaShapeT(a=a), d=d)
        y_min = -p.b_p / (2.0 * p.a_p)
        z_min = p.a_p * y_min**2 + p.b_p * y_min + p.c_p
        assert y_min == pytest.approx(d / 2.0, rel=1e-14)
        assert z_min == pytest.approx(-sag(a, d), rel=1e-14)

    def test_rot_z(self):
        assert np.allclose(rot_z(0.0), np.eye(3))
        assert np.allclose(rot_z(math.pi / 2) @ [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
        assert np.allclose(rot_z(0.7) @ rot_z(-0.7), np.eye(3), atol=1e-14)

    @given(angle=st.floats(-50.0, 50.0))
    @settings(max_examples=300)
    def test_wrap_angle_range(self, angle):
        w = wrap_angle(angle)
        assert -math.pi < w <= math.pi
        assert math.isclose(
            math.sin(w - angle), 0.0, abs_tol=1e-6
        )  # differs by multiple of 2*pi


class TestRopeSpecValidation:
    def test_defaults_are_paper_constants(self, spec):
        assert (spec.l_rope, spec.m_rope, spec.l_hook, spec.z_atc) == (2.8, 0.25, 0.30, 0.12)

    def test_invariants_enforced(self):
        with pytest.raises(DomainError):
            RopeSpec(l_rope=-1.0)
        with pytest.raises(DomainError):
            RopeSpec(l_hook=3.0)  # longer than the rope
        with pytest.raises(DomainError):
            RopeSpec(z_atc=-0.1)
