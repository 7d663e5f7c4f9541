"""Ground-truth rope models.

rope_ground_truth closes the simulation loop quasi-statically: the rope's
instantaneous shape is the hanging parabola through both attachment points
with the correct total length (roll assumed zero, plane vertical).

chain_equilibrium is the independent oracle: the exact catenary through the
same attachments, sampled at equal arc-length nodes. The parabola model is
validated against it (lowest-point discrepancy stays within a couple of
percent of the rope length for realistic span ratios).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..errors import InfeasibleError, SingularConfigurationError
from ..geometry import arc_length_general, rot_z, span_yaw

# attachments closer than this horizontal distance hang as a vertical line
_MIN_HORIZONTAL_SPAN = 1e-9


@dataclass(frozen=True)
class TrueShape:
    """Quasi-static rope state: P-frame parabola plus the span to robot 2.

    The P frame sits at attachment 1 with its y axis pointing horizontally
    toward attachment 2 (yaw psi_p means R_z(psi_p) maps +y onto that
    direction); c_p = 0 and phi_p = 0 by construction.
    """

    a_p: float
    b_p: float
    psi_p: float
    y_span: float
    z_span: float

    @property
    def s(self) -> np.ndarray:
        return np.array([self.a_p, self.b_p, self.psi_p])


def rope_ground_truth(p_a1, p_a2, l_rope: float) -> TrueShape:
    """Hanging parabola through both attachments with total length l_rope.

    One-dimensional bracketed solve on the curvature: the curve z = a*y^2+b*y
    interpolates (0, 0) and (y_span, z_span), and its arc length grows
    strictly with a, so the hanging (a > 0) solution is unique.
    """
    p_a1 = np.asarray(p_a1, dtype=float)
    p_a2 = np.asarray(p_a2, dtype=float)
    delta = p_a2 - p_a1
    dist = float(np.linalg.norm(delta))
    if dist >= l_rope:
        raise InfeasibleError(
            f"attachment distance {dist:.4f} m reaches the rope length {l_rope} m"
        )
    r = float(math.hypot(delta[0], delta[1]))
    if r < _MIN_HORIZONTAL_SPAN:
        raise SingularConfigurationError(
            "attachments are vertically aligned; rope plane yaw is undefined"
        )
    psi_p = span_yaw(p_a1, p_a2)
    dz = float(delta[2])

    def residual(a: float) -> float:
        b = dz / r - a * r
        return arc_length_general(a, b, r) - l_rope

    a_hi = 1.0 / r
    for _ in range(200):
        if residual(a_hi) > 0.0:
            break
        a_hi *= 2.0
    else:  # pragma: no cover
        raise InfeasibleError("curvature bracket failed to expand")
    a_p = brentq(residual, 0.0, a_hi, xtol=1e-14, rtol=8.9e-16, maxiter=200)
    b_p = dz / r - a_p * r
    return TrueShape(a_p=float(a_p), b_p=float(b_p), psi_p=psi_p, y_span=r, z_span=dz)


def shape_points_world(shape: TrueShape, p_a1, y_values) -> np.ndarray:
    """World positions of curve points given their P-frame y coordinates."""
    y = np.asarray(y_values, dtype=float)
    z = shape.a_p * y * y + shape.b_p * y
    local = np.stack([np.zeros_like(y), y, z], axis=-1)
    return np.asarray(p_a1, dtype=float) + local @ rot_z(shape.psi_p).T


def shape_lowest_point(shape: TrueShape, p_a1) -> np.ndarray:
    """World position of the rope's lowest point (the tool point)."""
    if shape.a_p <= 0.0:
        y_min = 0.0 if shape.z_span >= 0 else shape.y_span
    else:
        y_min = float(np.clip(-shape.b_p / (2.0 * shape.a_p), 0.0, shape.y_span))
    return shape_points_world(shape, p_a1, np.array([y_min]))[0]


def chain_equilibrium(p_a1, p_a2, l_rope: float, n_links: int = 100) -> np.ndarray:
    """Static equilibrium of an inextensible cable: exact catenary nodes.

    Returns (n_links + 1) node positions spaced uniformly in arc length,
    endpoints included. Independent of the parabola machinery above.
    """
    if n_links < 10:
        raise InfeasibleError("chain oracle needs at least 10 links")
    p_a1 = np.asarray(p_a1, dtype=float)
    p_a2 = np.asarray(p_a2, dtype=float)
    delta = p_a2 - p_a1
    dist = float(np.linalg.norm(delta))
    if dist >= l_rope:
        raise InfeasibleError("attachments too far apart for the chain length")
    r = float(math.hypot(delta[0], delta[1]))
    if r < _MIN_HORIZONTAL_SPAN:
        raise SingularConfigurationError("vertically aligned attachments")
    v = float(delta[2])

    # catenary z = C cosh((y - y0)/C) + z0; the parameter q = r/(2C) solves
    # sinh(q)/q = sqrt(l^2 - v^2)/r, which is > 1 whenever the cable is slack
    k = math.sqrt(l_rope * l_rope - v * v) / r

    def fq(q: float) -> float:
        return math.sinh(q) / q - k

    q_hi = max(1.0, math.sqrt(6.0 * (k - 1.0)) + 1.0)
    while fq(q_hi) < 0.0:
        q_hi *= 2.0
    q = brentq(fq, 1e-12, q_hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    c = r / (2.0 * q)
    y0 = r / 2.0 - c * math.asinh(v / (2.0 * c * math.sinh(q)))
    z0 = -c * math.cosh(y0 / c)

    # arc length from the first endpoint: s(y) = C [sinh((y-y0)/C) + sinh(y0/C)]
    sinh_start = math.sinh(-y0 / c)
    s_nodes = np.linspace(0.0, l_rope, n_links + 1)
    y_nodes = y0 + c * np.arcsinh(s_nodes / c + sinh_start)
    z_nodes = c * np.cosh((y_nodes - y0) / c) + z0

    u_hat = np.array([delta[0] / r, delta[1] / r, 0.0])
    nodes = (
        p_a1[None, :]
        + y_nodes[:, None] * u_hat[None, :]
        + z_nodes[:, None] * np.array([0.0, 0.0, 1.0])[None, :]
    )
    return nodes
