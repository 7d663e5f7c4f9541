"""Closed-form parabola rope geometry.

A rope hanging between two attachment points is modelled as the parabola
z = a*y^2 (tool frame, symmetric) or z = a*y^2 + b*y + c (attachment frame).
This module provides the arc-length closed form, its inverse solves, the
endpoint tension of the hanging rope, sag, and the frame conversions shared
by the planner, estimator, servo and simulator.

All angles are radians, all lengths metres, world frame z points up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InfeasibleError, SingularConfigurationError

# Below this value of |a*d| the closed form hits 0/0 and a second-order
# series is used instead; truncation error stays below 1e-12.
_SMALL_AD = 1e-6

# Root solves: bisection sweep then Newton polish.
_BISECT_ITERS = 48
_NEWTON_ITERS = 3
_MAX_BRACKET_DOUBLINGS = 200


@dataclass(frozen=True)
class RopeSpec:
    """Physical constants of the rope manipulator.

    l_rope  total rope length [m]
    m_rope  rope mass including the hook tool [kg]
    l_hook  arc length of the hooked middle section [m]
    z_atc   attachment point offset below each robot CoM [m]
    g       gravitational acceleration [m/s^2]
    """

    l_rope: float = 2.8
    m_rope: float = 0.25
    l_hook: float = 0.30
    z_atc: float = 0.12
    g: float = 9.81

    def __post_init__(self):
        if not (self.l_rope > 0 and self.m_rope > 0 and self.g > 0):
            raise DomainError("l_rope, m_rope and g must be positive")
        if not (0 < self.l_hook < self.l_rope):
            raise DomainError("l_hook must lie in (0, l_rope)")
        if self.z_atc < 0:
            raise DomainError("z_atc must be nonnegative")


@dataclass(frozen=True)
class ParabolaShapeT:
    """Rope shape in the tool frame (origin at the lowest point): z = a*y^2 + b*y.

    psi and phi are the yaw and roll of the containing plane. Planner output
    is always symmetric (b = 0) with a >= 0.
    """

    a: float
    b: float = 0.0
    psi: float = 0.0
    phi: float = 0.0


@dataclass(frozen=True)
class ParabolaShapeP:
    """Rope shape in the attachment frame of robot 1: z = a_p*y^2 + b_p*y + c_p.

    The frame origin sits at robot 1's attachment point and its y axis points
    horizontally toward robot 2's attachment, so a symmetric tool-frame shape
    maps to b_p = -a_p*d and c_p = 0.
    """

    a_p: float
    b_p: float
    c_p: float = 0.0
    psi_p: float = 0.0
    phi_p: float = 0.0


def wrap_angle(angle):
    """Wrap an angle (scalar or array) to (-pi, pi]."""
    wrapped = np.mod(-np.asarray(angle) + np.pi, 2.0 * np.pi)
    out = -(wrapped - np.pi)
    return float(out) if np.isscalar(angle) or np.ndim(angle) == 0 else out


def rot_z(psi: float) -> np.ndarray:
    """Right-handed rotation matrix about the world z axis."""
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def span_yaw(p_a1, p_a2) -> float:
    """Yaw of the rope plane given both attachment points.

    Defined so that R_z(psi) maps +y onto the horizontal direction from
    attachment 1 to attachment 2: the P-frame y axis always runs from robot 1
    toward robot 2.
    """
    p_a1 = np.asarray(p_a1, dtype=float)
    p_a2 = np.asarray(p_a2, dtype=float)
    dx, dy = p_a2[0] - p_a1[0], p_a2[1] - p_a1[1]
    return wrap_angle(math.atan2(dy, dx) - math.pi / 2.0)


def _asinh_term(u):
    """u*sqrt(1+u^2) + asinh(u), the antiderivative core (odd in u)."""
    return u * np.sqrt(1.0 + u * u) + np.arcsinh(u)


def _arc_length_arr(a, d):
    """Vectorised arc length of z = a*y^2 over y in [-d/2, d/2]; a, d >= 0."""
    a = np.asarray(a, dtype=float)
    d = np.asarray(d, dtype=float)
    u = a * d
    small = u < _SMALL_AD
    a_safe = np.where(small, 1.0, a)
    closed = _asinh_term(u) / (2.0 * a_safe)
    series = d * (1.0 + u * u / 6.0)
    return np.where(small, series, closed)


def arc_length(a: float, d: float) -> float:
    """Arc length of the symmetric parabola z = a*y^2 spanning width d.

    Closed form [a*d*sqrt(1+(a*d)^2) + asinh(a*d)] / (2a), with a series
    branch near a = 0 so the straight-line limit L -> d is exact.
    """
    if not (np.isfinite(a) and np.isfinite(d)):
        raise DomainError("arc_length: non-finite input")
    if a < 0 or d < 0:
        raise DomainError("arc_length: a and d must be nonnegative")
    return float(_arc_length_arr(a, d))


def _arc_length_general_arr(a, b, y_span):
    """Vectorised arc length of z = a*y^2 + b*y over y in [0, y_span]."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    y = np.asarray(y_span, dtype=float)
    small = np.abs(a) * y < _SMALL_AD
    a_safe = np.where(small, 1.0, a)
    closed = (_asinh_term(2.0 * a_safe * y + b) - _asinh_term(b)) / (4.0 * a_safe)
    hyp = np.sqrt(1.0 + b * b)
    series = y * hyp + a * b * y * y / hyp + a * a * (2.0 * y**3 / 3.0) / hyp**3
    return np.where(small, series, closed)


def arc_length_general(a_p: float, b_p: float, y_span: float) -> float:
    """Arc length of z = a_p*y^2 + b_p*y over y in [0, y_span].

    Valid for either sign of a_p; reduces to y_span*sqrt(1+b_p^2) as a_p -> 0.
    """
    if not (np.isfinite(a_p) and np.isfinite(b_p) and np.isfinite(y_span)):
        raise DomainError("arc_length_general: non-finite input")
    if y_span < 0:
        raise DomainError("arc_length_general: y_span must be nonnegative")
    return float(_arc_length_general_arr(a_p, b_p, y_span))


def _curvature_for_length_arr(d, l_rope):
    """Vectorised inverse of arc_length in a: find a >= 0 with L(a, d) = l_rope.

    Bisection (the map is strictly increasing in a) then Newton polish.
    Caller guarantees 0 < d <= l_rope elementwise.
    """
    d = np.asarray(d, dtype=float)
    lo = np.zeros_like(d)
    hi = np.maximum(4.0 * l_rope / (d * d), 1.0 / np.maximum(d, 1e-12))
    for _ in range(_MAX_BRACKET_DOUBLINGS):
        short = _arc_length_arr(hi, d) < l_rope
        if not short.any():
            break
        hi = np.where(short, 2.0 * hi, hi)
    else:  # pragma: no cover - bracket growth is geometric
        raise InfeasibleError("curvature bracket failed to expand")
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        too_short = _arc_length_arr(mid, d) < l_rope
        lo = np.where(too_short, mid, lo)
        hi = np.where(too_short, hi, mid)
    a = 0.5 * (lo + hi)
    # dL/da = [u*sqrt(1+u^2) - asinh(u)] / (2 a^2), with series a*d^3/3 near 0
    for _ in range(_NEWTON_ITERS):
        u = a * d
        small = u < _SMALL_AD
        a_safe = np.where(small, 1.0, a)
        deriv = np.where(
            small,
            a * d**3 / 3.0,
            (u * np.sqrt(1.0 + u * u) - np.arcsinh(u)) / (2.0 * a_safe * a_safe),
        )
        step = (_arc_length_arr(a, d) - l_rope) / np.maximum(deriv, 1e-300)
        a = np.maximum(a - step, 0.0)
    return a


def _arc_length_scalar(a: float, d: float) -> float:
    u = a * d
    if u < _SMALL_AD:
        return d * (1.0 + u * u / 6.0)
    return (u * math.sqrt(1.0 + u * u) + math.asinh(u)) / (2.0 * a)


def _curvature_for_length_scalar(d: float, l_rope: float) -> float:
    lo = 0.0
    hi = max(4.0 * l_rope / (d * d), 1.0 / d)
    for _ in range(_MAX_BRACKET_DOUBLINGS):
        if _arc_length_scalar(hi, d) >= l_rope:
            break
        hi *= 2.0
    else:  # pragma: no cover
        raise InfeasibleError("curvature bracket failed to expand")
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if _arc_length_scalar(mid, d) < l_rope:
            lo = mid
        else:
            hi = mid
    a = 0.5 * (lo + hi)
    for _ in range(_NEWTON_ITERS):
        u = a * d
        if u < _SMALL_AD:
            deriv = a * d**3 / 3.0
        else:
            deriv = (u * math.sqrt(1.0 + u * u) - math.asinh(u)) / (2.0 * a * a)
        if deriv <= 0.0:
            break
        a = max(a - (_arc_length_scalar(a, d) - l_rope) / deriv, 0.0)
    return a


def solve_curvature_for_length(d: float, l_rope: float) -> float:
    """Curvature a >= 0 such that arc_length(a, d) == l_rope.

    The arc length is strictly increasing in a for fixed d, so the solution is
    unique. Raises if the rope is not longer than the span.
    """
    if d <= 0:
        raise DomainError("solve_curvature_for_length: span must be positive")
    if l_rope <= 0:
        raise DomainError("solve_curvature_for_length: length must be positive")
    if d > l_rope:
        raise InfeasibleError(
            f"span {d} exceeds rope length {l_rope}: rope cannot reach"
        )
    if d == l_rope:
        return 0.0
    return _curvature_for_length_scalar(d, l_rope)


def _span_for_length_arr(a, l_rope):
    """Vectorised inverse of arc_length in d: find d with L(a, d) = l_rope."""
    a = np.asarray(a, dtype=float)
    lo = np.zeros_like(a)
    hi = np.full_like(a, l_rope)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        too_short = _arc_length_arr(a, mid) < l_rope
        lo = np.where(too_short, mid, lo)
        hi = np.where(too_short, hi, mid)
    d = 0.5 * (lo + hi)
    for _ in range(_NEWTON_ITERS):
        deriv = np.sqrt(1.0 + (a * d) ** 2)  # dL/dd
        d = np.clip(d - (_arc_length_arr(a, d) - l_rope) / deriv, 0.0, l_rope)
    return d


def solve_span_for_length(a: float, l_arc: float) -> float:
    """Horizontal span d such that arc_length(a, d) == l_arc.

    Used with l_arc = l_hook to get the ground width covered by the hooked
    section. A solution exists for every a >= 0 since L(a, d) >= d.
    """
    if a < 0:
        raise DomainError("solve_span_for_length: a must be nonnegative")
    if l_arc <= 0:
        raise DomainError("solve_span_for_length: arc length must be positive")
    if a == 0.0:
        return l_arc
    lo, hi = 0.0, l_arc
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        if _arc_length_scalar(a, mid) < l_arc:
            lo = mid
        else:
            hi = mid
    d = 0.5 * (lo + hi)
    for _ in range(_NEWTON_ITERS):
        deriv = math.sqrt(1.0 + (a * d) ** 2)
        d = min(max(d - (_arc_length_scalar(a, d) - l_arc) / deriv, 0.0), l_arc)
    return d


def endpoint_tension(a: float, d: float, spec: RopeSpec) -> tuple[float, float, float]:
    """Rope tension magnitude and components at either attachment point.

    Returns (t, H, V): total tension, horizontal and vertical components, for
    the hanging rope z = a*y^2 of mass spec.m_rope. The collected litter mass
    is neglected against the rope mass.
    """
    u = a * d
    if u <= 0:
        raise SingularConfigurationError(
            "endpoint tension is unbounded for a straight rope (a*d = 0)"
        )
    v = spec.m_rope * spec.g / 2.0
    h = spec.m_rope * spec.g / (2.0 * u)
    t = spec.m_rope * spec.g * math.sqrt(1.0 + u * u) / (2.0 * u)
    return t, h, v


def sag(a: float, d: float) -> float:
    """Vertical drop from the attachment height to the lowest rope point."""
    return a * (d / 2.0) ** 2


def tool_to_p_frame(shape_t: ParabolaShapeT, d: float) -> ParabolaShapeP:
    """Convert a symmetric tool-frame shape to the attachment frame of robot 1.

    With the origin moved to the attachment at y = -d/2 of the symmetric curve,
    z = a*y^2 becomes z = a*y^2 - a*d*y (and c_p = 0).
    """
    return ParabolaShapeP(
        a_p=shape_t.a,
        b_p=-shape_t.a * d,
        c_p=0.0,
        psi_p=shape_t.psi,
        phi_p=shape_t.phi,
    )
