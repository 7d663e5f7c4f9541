"""Parabola shape estimation from a world-frame rope point cloud.

Pipeline per frame: voxel downsampling, RANSAC plane fit, yaw extraction from
the plane normal, transform into the attachment frame of robot 1, a
length-constrained weighted parabola fit, and Kalman smoothing of the
parameter triple (a_p, b_p, psi_p).

The fit weights encode sensor trust: the frame origin (manually measured
attachment, w_m), the depth-camera points (w_d) and the GPS-derived second
attachment (w_p). A total-length constraint keeps the estimate physical even
when the camera returns nothing and only the two attachments remain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigError, DegenerateCloudError, DomainError, SingularConfigurationError
from .geometry import (
    RopeSpec,
    arc_length_general,
    rot_z,
    solve_curvature_for_length,
    span_yaw,
    wrap_angle,
)

# rope length must stay within this band of the fitted curve length
_LENGTH_BAND = (0.9, 1.1)
# normal-equation conditioning beyond this treats the curvature as unobserved
_MAX_FIT_COND = 1e10
# scatter-eigenvalue ratio below which the cloud counts as collinear
_COLLINEAR_RATIO = 1e-8
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class EstimationConfig:
    """Knobs of the estimation pipeline.

    Weights reflect the precision ordering of the sources (manual attachment
    measurement, depth points, GPS endpoint). Kalman variances are per
    parameter; scalars broadcast over (a_p, b_p, psi_p).
    """

    voxel_size: float = 0.05
    ransac_iters: int = 200
    ransac_inlier_tol: float = 0.03
    w_m: float = 100.0
    w_d: float = 1.0
    w_p: float = 10.0
    kf_process_var: float | tuple = 1e-3
    kf_meas_var: float | tuple = 1e-2
    seed: int = 0

    def __post_init__(self):
        if self.voxel_size <= 0:
            raise ConfigError("voxel_size must be positive")
        if self.ransac_iters < 1 or self.ransac_inlier_tol <= 0:
            raise ConfigError("bad RANSAC parameters")
        if min(self.w_m, self.w_d, self.w_p) < 0 or self.w_m + self.w_d + self.w_p <= 0:
            raise ConfigError("fit weights must be nonnegative with a positive sum")

    def process_var(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.kf_process_var, dtype=float), (3,)).copy()

    def meas_var(self) -> np.ndarray:
        return np.broadcast_to(np.asarray(self.kf_meas_var, dtype=float), (3,)).copy()


@dataclass
class RopePointCloud:
    """World-frame sensed rope points plus the two attachment points."""

    points: np.ndarray
    p_a1: np.ndarray
    p_a2: np.ndarray

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 3)
        self.p_a1 = np.asarray(self.p_a1, dtype=float)
        self.p_a2 = np.asarray(self.p_a2, dtype=float)

    def all_points(self) -> np.ndarray:
        """Sensed points with both attachments appended (they are rope ends)."""
        return np.vstack([self.points, self.p_a1[None, :], self.p_a2[None, :]])

    def horizontal_span(self) -> float:
        return float(math.hypot(*(self.p_a2[:2] - self.p_a1[:2])))


@dataclass(frozen=True)
class PlaneFit:
    """Best-fitting plane n.p + d_plane = 0 with unit normal."""

    n: np.ndarray
    d_plane: float
    inlier_count: int


@dataclass(frozen=True)
class ParabolaFit:
    a_p: float
    b_p: float
    c_p: float
    length_constrained: bool


@dataclass
class KalmanState:
    """Per-parameter random-walk filter state over (a_p, b_p, psi_p)."""

    x: np.ndarray = field(default_factory=lambda: np.zeros(3))
    p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    n_frames: int = 0
    initialized: bool = False


@dataclass(frozen=True)
class EstimatedShape:
    """Filtered parameter triple plus fit diagnostics."""

    a_p: float
    b_p: float
    psi_p: float
    c_p: float
    phi_p: float
    cov: np.ndarray
    stale: bool
    length_constrained: bool
    raw: np.ndarray | None = None

    @property
    def s(self) -> np.ndarray:
        return np.array([self.a_p, self.b_p, self.psi_p])


def voxel_downsample(points, voxel_size: float) -> np.ndarray:
    """One centroid per occupied voxel of an axis-aligned grid."""
    if voxel_size <= 0:
        raise DomainError("voxel_size must be positive")
    points = np.asarray(points, dtype=float).reshape(-1, 3)
    if len(points) == 0:
        return points.copy()
    keys = np.floor(points / voxel_size).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    sums = np.zeros((len(uniq), 3))
    np.add.at(sums, inverse, points)
    counts = np.bincount(inverse, minlength=len(uniq)).astype(float)
    return sums / counts[:, None]


def vertical_plane_through(p_a1, p_a2) -> PlaneFit:
    """Fallback plane: contains both attachments and the world z axis."""
    p_a1 = np.asarray(p_a1, dtype=float)
    p_a2 = np.asarray(p_a2, dtype=float)
    dx, dy = p_a2[0] - p_a1[0], p_a2[1] - p_a1[1]
    r = math.hypot(dx, dy)
    if r < 1e-9:
        raise DegenerateCloudError(
            "attachments coincide horizontally; no vertical plane is defined"
        )
    n = np.array([-dy / r, dx / r, 0.0])
    return PlaneFit(n=n, d_plane=float(-n @ p_a1), inlier_count=2)


def fit_plane_ransac(
    cloud: RopePointCloud, cfg: EstimationConfig, rng: np.random.Generator | None = None
) -> PlaneFit:
    """RANSAC plane through the rope cloud, refined by a least-squares refit.

    Both attachment points always belong to the scoring set and are forced
    into the refit set: their GPS/manual provenance makes them the most
    trusted samples. Collinear clouds (taut rope) fall back to the vertical
    plane through the attachments.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    pts = cloud.all_points()
    n_pts = len(pts)
    anchor_idx = np.array([n_pts - 2, n_pts - 1])
    if n_pts < 3:
        return vertical_plane_through(cloud.p_a1, cloud.p_a2)

    triples = np.argsort(rng.random((cfg.ransac_iters, n_pts)), axis=1)[:, :3]
    p0 = pts[triples[:, 0]]
    normals = np.cross(pts[triples[:, 1]] - p0, pts[triples[:, 2]] - p0)
    norms = np.linalg.norm(normals, axis=1)
    valid = norms > 1e-12
    if not valid.any():
        return vertical_plane_through(cloud.p_a1, cloud.p_a2)
    normals[valid] /= norms[valid, None]
    offsets = -np.einsum("ij,ij->i", normals, p0)
    dist = np.abs(pts @ normals.T + offsets[None, :])
    counts = np.where(valid, (dist <= cfg.ransac_inlier_tol).sum(axis=0), -1)
    best = int(np.argmax(counts))
    inliers = dist[:, best] <= cfg.ransac_inlier_tol
    inliers[anchor_idx] = True

    refit_pts = pts[inliers]
    centroid = refit_pts.mean(axis=0)
    centered = refit_pts - centroid
    evals, evecs = np.linalg.eigh(centered.T @ centered)
    if evals[1] <= _COLLINEAR_RATIO * max(evals[2], 1e-300):
        return vertical_plane_through(cloud.p_a1, cloud.p_a2)
    normal = evecs[:, 0]
    normal = normal / np.linalg.norm(normal)
    return PlaneFit(
        n=normal,
        d_plane=float(-normal @ centroid),
        inlier_count=int(inliers.sum()),
    )


def plane_angles(n, reference_yaw: float | None = None) -> tuple[float, float]:
    """Yaw and roll of the rope plane from its unit normal.

    The normal's sign is unobservable, so the yaw branch is chosen within
    (-pi/2, pi/2] of reference_yaw (previous estimate or the attachment-span
    yaw); without a reference the branch closest to zero is returned. The
    roll flips sign together with the branch.
    """
    n = np.asarray(n, dtype=float)
    n_xy = math.hypot(n[0], n[1])
    if n_xy < 1e-12:
        raise SingularConfigurationError("horizontal plane: rope yaw undefined")
    psi = math.atan2(n[1], n[0])
    phi = math.atan2(n[2], n_xy)
    ref = 0.0 if reference_yaw is None else reference_yaw
    offset = wrap_angle(psi - ref)
    if not (-math.pi / 2 < offset <= math.pi / 2):
        psi = wrap_angle(psi + math.pi)
        phi = -phi
    return psi, phi


def to_p_frame(points, p_a1, psi_p: float) -> np.ndarray:
    """World points into the attachment frame: translate to attachment 1,
    yaw-align so the rope plane becomes the yz plane (x is out-of-plane)."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    return (pts - np.asarray(p_a1, dtype=float)) @ rot_z(-psi_p).T


def from_p_frame(points_p, p_a1, psi_p: float) -> np.ndarray:
    """Inverse of to_p_frame."""
    pts = np.asarray(points_p, dtype=float).reshape(-1, 3)
    return pts @ rot_z(psi_p).T + np.asarray(p_a1, dtype=float)


def _optimal_offset(a, b, y, z, y_a2, z_a2, cfg) -> float:
    """Closed-form minimiser of the weighted objective over c alone."""
    num = cfg.w_d * np.sum(z - a * y * y - b * y) + cfg.w_p * (
        z_a2 - a * y_a2 * y_a2 - b * y_a2
    )
    den = cfg.w_m + cfg.w_d * len(y) + cfg.w_p
    return float(num / den)


def _weighted_cost(a, b, c, y, z, y_a2, z_a2, cfg) -> float:
    res = a * y * y + b * y + c - z
    res_a2 = a * y_a2 * y_a2 + b * y_a2 + c - z_a2
    return float(cfg.w_m * c * c + cfg.w_d * np.dot(res, res) + cfg.w_p * res_a2 * res_a2)


def _solve_offset_on_manifold(a, length, y_a2):
    """Offset beta >= 0 with arc_length_general(a, -a*y_a2 + beta, y_a2) = length.

    For fixed a the length is even and strictly increasing in |beta|, so a
    bracketed root always exists when the symmetric curve is short enough.
    """
    b_sym = -a * y_a2

    def rho(beta: float) -> float:
        return arc_length_general(a, b_sym + beta, y_a2) - length

    r0 = rho(0.0)
    if r0 >= 0.0:
        return 0.0
    hi = length / y_a2 + 1.0
    while rho(hi) < 0.0:
        hi *= 2.0
    return brentq(rho, 0.0, hi, xtol=1e-13, rtol=8.9e-16, maxiter=200)


def fit_parabola(
    points_p, y_a2: float, z_a2: float, cfg: EstimationConfig, spec: RopeSpec
) -> ParabolaFit:
    """Length-constrained weighted least-squares parabola in the P frame.

    Unconstrained weighted normal-equations solution first; when the implied
    curve length leaves the [0.9, 1.1]*l_rope band, the length is pinned to
    the violated bound and the minimum is searched on that one-dimensional
    manifold. When the data cannot determine the curvature at all (endpoints
    only), the length is pinned to l_rope itself: the physical prior is then
    the only curvature information available.
    """
    if y_a2 <= 1e-9:
        raise DomainError("second attachment must sit at positive y in the P frame")
    pts = np.asarray(points_p, dtype=float).reshape(-1, 3)
    y, z = pts[:, 1], pts[:, 2]

    rows = [np.array([0.0, 0.0, 1.0]), np.array([y_a2**2, y_a2, 1.0])]
    rhs = [0.0, z_a2]
    weights = [cfg.w_m, cfg.w_p]
    design = np.vstack([np.stack([y * y, y, np.ones_like(y)], axis=1), rows])
    targets = np.concatenate([z, rhs])
    w = np.concatenate([np.full(len(y), cfg.w_d), weights])
    sw = np.sqrt(w)
    scaled = design * sw[:, None]
    singulars = np.linalg.svd(scaled, compute_uv=False)
    deficient = len(singulars) < 3 or singulars[-1] <= singulars[0] / _MAX_FIT_COND

    if not deficient:
        sol, *_ = np.linalg.lstsq(scaled, targets * sw, rcond=None)
        a_u, b_u, c_u = (float(v) for v in sol)
        length = arc_length_general(a_u, b_u, y_a2)
        lo, hi = _LENGTH_BAND[0] * spec.l_rope, _LENGTH_BAND[1] * spec.l_rope
        if lo <= length <= hi:
            return ParabolaFit(a_u, b_u, c_u, length_constrained=False)
        target = lo if length < lo else hi
    else:
        target = spec.l_rope

    if y_a2 >= target:
        # measured span inconsistent with the rope: best effort chord fit
        b_ch = z_a2 / y_a2
        c_ch = _optimal_offset(0.0, b_ch, y, z, y_a2, z_a2, cfg)
        return ParabolaFit(0.0, b_ch, c_ch, length_constrained=True)

    a_max = solve_curvature_for_length(y_a2, target)

    def branch_cost(a: float, sign: float) -> tuple[float, float, float]:
        beta = _solve_offset_on_manifold(a, target, y_a2)
        b = -a * y_a2 + sign * beta
        c = _optimal_offset(a, b, y, z, y_a2, z_a2, cfg)
        return _weighted_cost(a, b, c, y, z, y_a2, z_a2, cfg), b, c

    grid = np.linspace(0.0, a_max, 121)
    best = None
    for sign in (1.0, -1.0):
        costs = [branch_cost(a, sign)[0] for a in grid]
        k = int(np.argmin(costs))
        lo_a, hi_a = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        a_ref = _golden_scalar(lambda a: branch_cost(a, sign)[0], lo_a, hi_a, 1e-9)
        cost, b_ref, c_ref = branch_cost(a_ref, sign)
        if best is None or cost < best[0]:
            best = (cost, a_ref, b_ref, c_ref)
    _, a_p, b_p, c_p = best
    return ParabolaFit(float(a_p), float(b_p), float(c_p), length_constrained=True)


def _golden_scalar(f, lo: float, hi: float, tol: float) -> float:
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


def kalman_update(state: KalmanState, measurement, cfg: EstimationConfig) -> KalmanState:
    """Predict/update step of the per-parameter random-walk filter.

    Non-finite measurements degrade to prediction only (covariance keeps
    growing, the state coasts). The yaw innovation is wrapped.
    """
    z = np.asarray(measurement, dtype=float)
    q, r = cfg.process_var(), cfg.meas_var()
    if not state.initialized:
        if not np.isfinite(z).all():
            return replace(state, n_frames=state.n_frames + 1)
        return KalmanState(x=z.copy(), p=r.copy(), n_frames=state.n_frames + 1, initialized=True)
    p_pred = state.p + q
    if not np.isfinite(z).all():
        return KalmanState(
            x=state.x.copy(), p=p_pred, n_frames=state.n_frames + 1, initialized=True
        )
    innovation = z - state.x
    innovation[2] = wrap_angle(innovation[2])
    denom = p_pred + r
    gain = np.where(denom > 0.0, p_pred / np.where(denom > 0.0, denom, 1.0), 1.0)
    x = state.x + gain * innovation
    x[2] = wrap_angle(x[2])
    p = (1.0 - gain) * p_pred
    return KalmanState(x=x, p=p, n_frames=state.n_frames + 1, initialized=True)


def kalman_predict(state: KalmanState, cfg: EstimationConfig) -> KalmanState:
    """Prediction-only step used when a frame yields no usable measurement."""
    if not state.initialized:
        return replace(state, n_frames=state.n_frames + 1)
    return KalmanState(
        x=state.x.copy(),
        p=state.p + cfg.process_var(),
        n_frames=state.n_frames + 1,
        initialized=True,
    )


def estimate_shape(
    cloud: RopePointCloud,
    cfg: EstimationConfig,
    spec: RopeSpec,
    state: KalmanState | None = None,
) -> tuple[EstimatedShape, KalmanState]:
    """Full per-frame pipeline; returns the filtered shape and the new filter state.

    Deterministic per (cfg.seed, frame index): the RANSAC stream is derived
    from both, and the frame index is the filter's frame counter, so a replay
    from dumped clouds reproduces the in-loop estimates bit for bit.
    """
    if state is None:
        state = KalmanState()
    rng = np.random.default_rng([cfg.seed, state.n_frames])
    hint = state.x[2] if state.initialized else None
    try:
        if cloud.horizontal_span() >= 1e-9:
            hint = span_yaw(cloud.p_a1, cloud.p_a2)
        pts = voxel_downsample(cloud.points, cfg.voxel_size)
        work = RopePointCloud(pts, cloud.p_a1, cloud.p_a2)
        plane = fit_plane_ransac(work, cfg, rng)
        psi_p, phi_p = plane_angles(plane.n, reference_yaw=hint)
        pts_p = to_p_frame(pts, cloud.p_a1, psi_p)
        a2_p = to_p_frame(cloud.p_a2[None, :], cloud.p_a1, psi_p)[0]
        fit = fit_parabola(pts_p, float(a2_p[1]), float(a2_p[2]), cfg, spec)
    except (DegenerateCloudError, SingularConfigurationError, DomainError):
        new_state = kalman_predict(state, cfg)
        nan = float("nan")
        return (
            EstimatedShape(
                a_p=float(new_state.x[0]),
                b_p=float(new_state.x[1]),
                psi_p=float(new_state.x[2]),
                c_p=nan,
                phi_p=nan,
                cov=new_state.p.copy(),
                stale=True,
                length_constrained=False,
                raw=None,
            ),
            new_state,
        )
    measurement = np.array([fit.a_p, fit.b_p, psi_p])
    new_state = kalman_update(state, measurement, cfg)
    return (
        EstimatedShape(
            a_p=float(new_state.x[0]),
            b_p=float(new_state.x[1]),
            psi_p=float(new_state.x[2]),
            c_p=fit.c_p,
            phi_p=phi_p,
            cov=new_state.p.copy(),
            stale=False,
            length_constrained=fit.length_constrained,
            raw=measurement,
        ),
        new_state,
    )
