"""Shape visual servoing.

A PI law maps the parabola-parameter error e_s = s - s_ref onto a relative
velocity between the two robots through the interaction matrix M. The
correction is split antisymmetrically over both robots so their midpoint
(and hence the hook reference trajectory) is untouched.

M is built numerically as the inverse Jacobian of the quasi-static forward
map from the relative attachment displacement to the shape parameters; this
keeps the controller consistent with whatever rope model closes the loop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SingularConfigurationError
from .geometry import wrap_angle


@dataclass(frozen=True)
class ServoConfig:
    """PI gains, sliding-window length, control period and saturation."""

    k_c: float = 0.5
    k_i: float = 0.005
    n_w: int = 50
    dt: float = 1.0 / 15.0
    v_corr_max: float = 0.5
    invert_split: bool = False
    fd_step: float = 1e-5
    cond_limit: float = 1e8

    def __post_init__(self):
        if self.k_c <= 0 or self.k_i < 0:
            raise ConfigError("gains must satisfy k_c > 0, k_i >= 0")
        if self.n_w < 1 or self.dt <= 0:
            raise ConfigError("window length and control period must be positive")


@dataclass(frozen=True)
class ServoState:
    """Error window plus the accumulated antisymmetric corrections."""

    window: tuple = ()
    dp_r1: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dp_r2: np.ndarray = field(default_factory=lambda: np.zeros(3))


def shape_error(s, s_ref) -> np.ndarray:
    """Componentwise parameter error with the yaw wrapped to (-pi, pi]."""
    e = np.asarray(s, dtype=float) - np.asarray(s_ref, dtype=float)
    e[2] = wrap_angle(e[2])
    return e


def reference_in_p_frame(a_ref: float, d_ref: float, psi_ref: float) -> np.ndarray:
    """Planner output (symmetric tool-frame shape) as a P-frame triple."""
    return np.array([a_ref, -a_ref * d_ref, psi_ref])


def _default_forward_map(p_a1, p_a2, l_rope):
    from .sim.rope import rope_ground_truth

    return rope_ground_truth(p_a1, p_a2, l_rope).s


def interaction_matrix(
    p_a1,
    p_a2,
    l_rope: float,
    forward_map=None,
    fd_step: float = 1e-5,
    cond_limit: float = 1e8,
) -> np.ndarray:
    """Map from shape-parameter error to relative endpoint velocity.

    Central finite differences of the forward map s(delta) with
    delta = p_a2 - p_a1 give the Jacobian J = ds/ddelta; M is its inverse.
    The yaw row is differenced with wrapping. Ill-conditioned J (taut rope)
    raises instead of returning a garbage inverse.
    """
    p_a1 = np.asarray(p_a1, dtype=float)
    p_a2 = np.asarray(p_a2, dtype=float)
    if forward_map is None:
        forward = lambda a, b: _default_forward_map(a, b, l_rope)
    else:
        forward = forward_map
    jac = np.empty((3, 3))
    for k in range(3):
        h = np.zeros(3)
        h[k] = fd_step
        s_plus = np.asarray(forward(p_a1, p_a2 + h), dtype=float)
        s_minus = np.asarray(forward(p_a1, p_a2 - h), dtype=float)
        diff = s_plus - s_minus
        diff[2] = wrap_angle(diff[2])
        jac[:, k] = diff / (2.0 * fd_step)
    if np.linalg.cond(jac) > cond_limit:
        raise SingularConfigurationError(
            "interaction matrix is ill-conditioned (rope close to taut)"
        )
    return np.linalg.inv(jac)


def servo_step(
    e_s,
    state: ServoState,
    m_matrix: np.ndarray,
    cfg: ServoConfig,
    stale: bool = False,
) -> tuple[np.ndarray, ServoState]:
    """One PI update: relative velocity command plus new accumulated corrections.

    The integral term sums the error window (current sample included); on a
    stale estimate the window is frozen so dropouts cannot wind it up. The
    velocity saturates per axis, then integrates into corrections applied as
    +v/2 to robot 1 and -v/2 to robot 2 (flip with cfg.invert_split), which
    drives the relative attachment vector opposite to the commanded velocity
    and keeps the midpoint fixed.
    """
    e_s = np.asarray(e_s, dtype=float)
    window = state.window if stale else (*state.window, e_s.copy())[-cfg.n_w :]
    integral = np.sum(window, axis=0) if window else np.zeros(3)
    v_rel = cfg.k_c * (m_matrix @ e_s) + cfg.k_i * (m_matrix @ integral)
    v_rel = np.clip(v_rel, -cfg.v_corr_max, cfg.v_corr_max)
    half = 0.5 * v_rel * cfg.dt
    sign = -1.0 if cfg.invert_split else 1.0
    new_state = ServoState(
        window=window,
        dp_r1=state.dp_r1 + sign * half,
        dp_r2=state.dp_r2 - sign * half,
    )
    return v_rel, new_state
