"""Joint pose-and-map filter over an augmented state vector.

State layout: [pose (x, y, heading) | per landmark: center (2), contour
basis values (N)], with a single dense joint covariance. Prediction is
additive (odometry increments in the global frame); correction is an
iterated EKF whose measurement model maps each scan point to the
predicted boundary point of its associated landmark, expressed in the
robot frame.

Per point, with T = R(heading), d = T z_L + position - center,
rho = |d|, p = (cos theta, sin theta), s = H_f @ contour and
s' = (dH_f/dtheta) @ contour:

    h(x)     = T^T (center + p s - position)
    dh/dc    = T^T (I + (p p^T - I)/rho * s + p s' dtheta/dc)
    dh/dpos  = -dh/dc
    dh/df    = T^T p H_f
    dh/dphi  = (dT/dphi)^T (center + p s - position)
               - T^T ((p p^T - I)/rho (dT/dphi) z_L s
                      + p s' dtheta/dc (dT/dphi) z_L)

with dtheta/dc = (d_y, -d_x)/rho^2. The measurement angle theta is
recomputed from the current linearization point and held fixed inside
each iteration; the dtheta/dc chain terms account for its dependence
on the state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from . import contour_gp as cgp
from .errors import (
    DegenerateGeometryError,
    InvalidArgumentError,
    NumericalFailureError,
)
from .geometry import RobotPose, normalize_angle, rotation_matrix
from .landmark import Landmark

POSE_DIM = 3
TWO_PI = 2.0 * math.pi


@dataclass(slots=True)
class NoiseConfig:
    """Process and measurement noise of the fused system.

    q_pose : 3x3 per-step pose process noise.
    q_center : 2x2 per-step landmark-center process noise.
    r_xy : 2x2 Cartesian measurement noise of one scan point.
    The contour process noise comes from the GP hyperparameters.
    """

    q_pose: np.ndarray
    q_center: np.ndarray
    r_xy: np.ndarray

    def __post_init__(self) -> None:
        self.q_pose = np.asarray(self.q_pose, dtype=float)
        self.q_center = np.asarray(self.q_center, dtype=float)
        self.r_xy = np.asarray(self.r_xy, dtype=float)
        for name, m, dim in (
            ("q_pose", self.q_pose, 3),
            ("q_center", self.q_center, 2),
            ("r_xy", self.r_xy, 2),
        ):
            if m.shape != (dim, dim):
                raise InvalidArgumentError(f"{name} must be {dim}x{dim}, got {m.shape}")
            if not np.allclose(m, m.T, atol=1e-12):
                raise InvalidArgumentError(f"{name} must be symmetric")
            if np.min(np.linalg.eigvalsh(m)) < -1e-12:
                raise InvalidArgumentError(f"{name} must be positive semidefinite")


@dataclass(slots=True)
class ScanAssociation:
    """Points of one scan assigned to one landmark (local frame)."""

    points: np.ndarray
    thetas: np.ndarray
    radii: np.ndarray


@dataclass(slots=True)
class AssociatedScan:
    """Partition of a scan into per-landmark sets and leftovers.

    ``assigned`` mirrors the decision per original scan index
    (landmark id, or -1) so logs can pair decisions with ground truth.
    """

    per_landmark: dict[int, ScanAssociation] = field(default_factory=dict)
    unassociated: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    assigned: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=int))

    @property
    def n_associated(self) -> int:
        return sum(a.points.shape[0] for a in self.per_landmark.values())


@dataclass(slots=True)
class SlamState:
    """Augmented filter state: joint mean, covariance, landmark registry."""

    mean: np.ndarray
    cov: np.ndarray
    grid: cgp.BasisGrid
    ids: list[int] = field(default_factory=list)
    hits: dict[int, int] = field(default_factory=dict)

    @classmethod
    def initial(cls, pose: RobotPose, pose_cov: np.ndarray, grid: cgp.BasisGrid) -> SlamState:
        return cls(mean=pose.as_array(), cov=np.array(pose_cov, dtype=float), grid=grid)

    @property
    def block_dim(self) -> int:
        return 2 + self.grid.n

    @property
    def n_landmarks(self) -> int:
        return len(self.ids)

    @property
    def dim(self) -> int:
        return POSE_DIM + self.n_landmarks * self.block_dim

    @property
    def pose(self) -> RobotPose:
        return RobotPose.from_array(self.mean[:POSE_DIM])

    def index_of(self, lm_id: int) -> int:
        return self.ids.index(lm_id)

    def block_start(self, index: int) -> int:
        return POSE_DIM + index * self.block_dim

    def center_of(self, lm_id: int) -> np.ndarray:
        off = self.block_start(self.index_of(lm_id))
        return self.mean[off : off + 2].copy()

    def contour_of(self, lm_id: int) -> cgp.ContourState:
        off = self.block_start(self.index_of(lm_id)) + 2
        n = self.grid.n
        return cgp.ContourState(
            mean=self.mean[off : off + n].copy(),
            cov=self.cov[off : off + n, off : off + n].copy(),
        )

    def landmark(self, lm_id: int) -> Landmark:
        return Landmark(
            id=lm_id,
            center=self.center_of(lm_id),
            contour=self.contour_of(lm_id),
            hits=self.hits.get(lm_id, 1),
        )

    def copy(self) -> SlamState:
        return SlamState(
            mean=self.mean.copy(),
            cov=self.cov.copy(),
            grid=self.grid,
            ids=list(self.ids),
            hits=dict(self.hits),
        )


@dataclass(slots=True)
class StackedModel:
    """One scan's measurement model evaluated at a linearization point."""

    z: np.ndarray
    h: np.ndarray
    jac: np.ndarray
    noise: np.ndarray


def predict(
    state: SlamState,
    u: np.ndarray,
    noise: NoiseConfig,
    grid: cgp.BasisGrid,
    h: cgp.GpHyperparams,
) -> SlamState:
    """Time update: additive global-frame odometry, block process noise."""
    u = np.asarray(u, dtype=float)
    if u.shape != (3,) or not np.all(np.isfinite(u)):
        raise InvalidArgumentError("odometry increment must be a finite 3-vector")
    out = state.copy()
    out.mean[:POSE_DIM] += u
    out.mean[2] = normalize_angle(out.mean[2])
    out.cov[:POSE_DIM, :POSE_DIM] += noise.q_pose
    q_f = cgp.contour_process_noise(grid, h)
    for i in range(state.n_landmarks):
        off = state.block_start(i)
        out.cov[off : off + 2, off : off + 2] += noise.q_center
        out.cov[off + 2 : off + 2 + grid.n, off + 2 : off + 2 + grid.n] += q_f
    return out


@dataclass(slots=True)
class _LandmarkRows:
    """Vectorized measurement model of one landmark's point batch."""

    h: np.ndarray  # (m, 2) predicted local points
    d_center: np.ndarray  # (m, 2, 2)
    d_contour: np.ndarray  # (m, 2, N)
    d_heading: np.ndarray  # (m, 2)
    r_f: np.ndarray  # (m,)
    theta: np.ndarray  # (m,)


def _landmark_rows(
    mean: np.ndarray,
    offset: int,
    pts_local: np.ndarray,
    grid: cgp.BasisGrid,
    h: cgp.GpHyperparams,
    thetas: np.ndarray | None = None,
) -> _LandmarkRows:
    """Evaluate h and its Jacobian blocks for one landmark's points.

    ``thetas`` overrides the measurement angles; by default they are
    recomputed from the geometry at ``mean``.
    """
    n = grid.n
    pos = mean[0:2]
    phi = float(mean[2])
    center = mean[offset : offset + 2]
    contour = mean[offset + 2 : offset + 2 + n]

    rot = rotation_matrix(phi)
    d_rot = np.array(
        [[-math.sin(phi), -math.cos(phi)], [math.cos(phi), -math.sin(phi)]]
    )
    pts = np.atleast_2d(pts_local)
    world = pts @ rot.T + pos
    d = world - center
    rho = np.hypot(d[:, 0], d[:, 1])
    if np.any(rho < 1e-9):
        raise DegenerateGeometryError("scan point coincides with a landmark center")
    if thetas is None:
        thetas = np.arctan2(d[:, 1], d[:, 0]) % TWO_PI
    else:
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))

    gp = cgp.solver(grid, h)
    rows, r_f = gp.weight_rows(thetas)
    d_rows = gp.weight_rows_deriv(thetas)
    s = rows @ contour
    s_prime = d_rows @ contour

    p = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
    offset_vec = center + p * s[:, None] - pos  # (m, 2), global frame
    h_vals = offset_vec @ rot

    # dp/dc = (p p^T - I)/rho, dtheta/dc = (sin, -cos)/rho
    pp = p[:, :, None] * p[:, None, :]
    dp_dc = (pp - np.eye(2)) / rho[:, None, None]
    dth_dc = np.stack([np.sin(thetas), -np.cos(thetas)], axis=1) / rho[:, None]

    inner = (
        np.eye(2)
        + dp_dc * s[:, None, None]
        + p[:, :, None] * (s_prime[:, None] * dth_dc)[:, None, :]
    )
    d_center = np.einsum("ab,mbc->mac", rot.T, inner)
    d_contour = np.einsum("ab,mb,mn->man", rot.T, p, rows)

    v = pts @ d_rot.T  # (dT/dphi) z_L
    chain = (
        np.einsum("mij,mj->mi", dp_dc, v) * s[:, None]
        + p * (s_prime * np.einsum("mj,mj->m", dth_dc, v))[:, None]
    )
    d_heading = offset_vec @ d_rot - chain @ rot

    return _LandmarkRows(
        h=h_vals,
        d_center=d_center,
        d_contour=d_contour,
        d_heading=d_heading,
        r_f=r_f,
        theta=thetas,
    )


def _landmark_count(mean: np.ndarray, grid: cgp.BasisGrid) -> int:
    extra = mean.shape[0] - POSE_DIM
    if extra % (2 + grid.n) != 0:
        raise InvalidArgumentError("state dimension does not match the basis grid")
    return extra // (2 + grid.n)


def measurement_fn(
    state_mean: np.ndarray,
    i: int,
    theta: float,
    grid: cgp.BasisGrid,
    h: cgp.GpHyperparams,
) -> np.ndarray:
    """Predicted local-frame boundary point of landmark ``i`` at ``theta``."""
    mean = np.asarray(state_mean, dtype=float)
    if not 0 <= i < _landmark_count(mean, grid):
        raise InvalidArgumentError(f"landmark index {i} out of range")
    offset = POSE_DIM + i * (2 + grid.n)
    pos = mean[0:2]
    rot = rotation_matrix(float(mean[2]))
    center = mean[offset : offset + 2]
    contour = mean[offset + 2 : offset + 2 + grid.n]
    row, _ = cgp.gp_measurement_model(theta, grid, h)
    s = float(row @ contour)
    p = np.array([math.cos(theta), math.sin(theta)])
    return rot.T @ (center + p * s - pos)


def measurement_noise(theta: float, phi: float, r_f: float, r_xy: np.ndarray) -> np.ndarray:
    """Cartesian noise of one point: radial GP noise plus sensor noise."""
    if r_f < 0:
        raise InvalidArgumentError(f"radial noise variance must be non-negative, got {r_f}")
    rot = rotation_matrix(phi)
    p = np.array([math.cos(theta), math.sin(theta)])
    return rot.T @ (np.outer(p, p) * r_f) @ rot + np.asarray(r_xy, dtype=float)


def jacobian(
    state_mean: np.ndarray,
    i: int,
    theta: float,
    z_l: np.ndarray,
    grid: cgp.BasisGrid,
    h: cgp.GpHyperparams,
) -> np.ndarray:
    """Measurement Jacobian of one point: 2 x D, zero off-block.

    Differentiates through the measurement angle: the row equals the
    finite-difference derivative of the model with theta recomputed
    from the perturbed state.
    """
    mean = np.asarray(state_mean, dtype=float)
    m_count = _landmark_count(mean, grid)
    if not 0 <= i < m_count:
        raise InvalidArgumentError(f"landmark index {i} out of range")
    offset = POSE_DIM + i * (2 + grid.n)
    rows = _landmark_rows(mean, offset, z_l, grid, h, thetas=np.array([theta]))
    out = np.zeros((2, mean.shape[0]))
    out[:, 0:2] = -rows.d_center[0]
    out[:, 2] = rows.d_heading[0]
    out[:, offset : offset + 2] = rows.d_center[0]
    out[:, offset + 2 : offset + 2 + grid.n] = rows.d_contour[0]
    return out


def build_stacked_model(
    state: SlamState,
    scan: AssociatedScan,
    grid: cgp.BasisGrid,
    h: cgp.GpHyperparams,
    noise: NoiseConfig,
    mean: np.ndarray | None = None,
) -> StackedModel | None:
    """Stack all associated points into one linear(ized) model.

    Rows are ordered landmark-major (registry order), then by point
    index within each landmark. Returns None for an empty scan.
    ``mean`` overrides the linearization point (used by the IEKF).
    """
    if scan.n_associated == 0:
        return None
    mean = state.mean if mean is None else np.asarray(mean, dtype=float)
    dim = state.dim
    n = grid.n
    rot = rotation_matrix(float(mean[2]))

    z_parts: list[np.ndarray] = []
    h_parts: list[np.ndarray] = []
    jac_parts: list[np.ndarray] = []
    noise_blocks: list[np.ndarray] = []
    for idx, lm_id in enumerate(state.ids):
        assoc = scan.per_landmark.get(lm_id)
        if assoc is None or assoc.points.shape[0] == 0:
            continue
        offset = state.block_start(idx)
        rows = _landmark_rows(mean, offset, assoc.points, grid, h)
        m = assoc.points.shape[0]
        jac = np.zeros((2 * m, dim))
        jac[:, 0:2] = (-rows.d_center).reshape(2 * m, 2)
        jac[:, 2] = rows.d_heading.reshape(2 * m)
        jac[:, offset : offset + 2] = rows.d_center.reshape(2 * m, 2)
        jac[:, offset + 2 : offset + 2 + n] = rows.d_contour.reshape(2 * m, n)
        z_parts.append(assoc.points.reshape(2 * m))
        h_parts.append(rows.h.reshape(2 * m))
        jac_parts.append(jac)

        p = np.stack([np.cos(rows.theta), np.sin(rows.theta)], axis=1)
        pp = p[:, :, None] * p[:, None, :] * rows.r_f[:, None, None]
        noise_blocks.append(np.einsum("ab,mbc,cd->mad", rot.T, pp, rot) + noise.r_xy)

    m_total = sum(part.shape[0] for part in z_parts) // 2
    big_r = np.zeros((2 * m_total, 2 * m_total))
    row0 = 0
    for blocks in noise_blocks:
        for blk in blocks:
            big_r[row0 : row0 + 2, row0 : row0 + 2] = blk
            row0 += 2
    return StackedModel(
        z=np.concatenate(z_parts),
        h=np.concatenate(h_parts),
        jac=np.vstack(jac_parts),
        noise=big_r,
    )


ModelFn = Callable[[np.ndarray], tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]]


def _solve_gain(cov_pred: np.ndarray, jac: np.ndarray, noise: np.ndarray) -> np.ndarray:
    """Kalman gain cov H^T S^-1 via an SPD solve with one inflation retry."""
    b = jac @ cov_pred
    s = b @ jac.T + noise
    s = 0.5 * (s + s.T)
    try:
        return cho_solve(cho_factor(s, lower=True), b).T
    except np.linalg.LinAlgError:
        pass
    inflated = s + (1e-9 * np.trace(s)) * np.eye(s.shape[0])
    try:
        return cho_solve(cho_factor(inflated, lower=True), b).T
    except np.linalg.LinAlgError as exc:
        raise NumericalFailureError("innovation covariance is not positive definite") from exc


def iekf_iterations(
    x_pred: np.ndarray,
    cov_pred: np.ndarray,
    model_fn: ModelFn,
    max_iter: int,
    tol: float,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Iterated EKF update around a predicted Gaussian.

    ``model_fn(x)`` returns (z, h(x), H(x), R(x)) at the linearization
    point x. Each iterate solves the standard update re-centered at the
    prediction; for a linear model the first iterate is already the
    exact Kalman update, so further iterations are no-ops.
    """
    if max_iter < 1:
        raise InvalidArgumentError(f"max_iter must be >= 1, got {max_iter}")
    x_i = x_pred.copy()
    gain: np.ndarray | None = None
    jac: np.ndarray | None = None
    iterations = 0
    for _ in range(max_iter):
        z, h_val, jac, noise = model_fn(x_i)
        gain = _solve_gain(cov_pred, jac, noise)
        x_next = x_pred + gain @ (z - h_val - jac @ (x_pred - x_i))
        step = float(np.linalg.norm(x_next - x_i))
        x_i = x_next
        iterations += 1
        if step < tol:
            break
    assert gain is not None and jac is not None
    cov = cov_pred - gain @ (jac @ cov_pred)
    return x_i, 0.5 * (cov + cov.T), iterations


def iekf_update(
    state: SlamState,
    scan: AssociatedScan,
    grid: cgp.BasisGrid,
    h: cgp.GpHyperparams,
    noise: NoiseConfig,
    max_iter: int = 10,
    tol: float = 1e-6,
) -> SlamState:
    """Correct the predicted state with one associated scan.

    The measurement angles are recomputed from each iterate, so the
    linearization tracks the current estimate. With no associated
    points the state is returned unchanged.
    """
    if scan.n_associated == 0:
        return state.copy()

    def model_fn(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        model = build_stacked_model(state, scan, grid, h, noise, mean=x)
        assert model is not None
        return model.z, model.h, model.jac, model.noise

    mean, cov, _ = iekf_iterations(state.mean, state.cov, model_fn, max_iter, tol)
    out = state.copy()
    out.mean = mean
    out.mean[2] = normalize_angle(float(mean[2]))
    out.cov = cov
    return out


def augment(
    state: SlamState,
    lm: Landmark,
    center_cov: np.ndarray,
    grid: cgp.BasisGrid,
    h: cgp.GpHyperparams,
) -> SlamState:
    """Append a new landmark block with zero cross-covariance."""
    if lm.id in state.ids:
        raise InvalidArgumentError(f"landmark id {lm.id} already in the map")
    center_cov = np.asarray(center_cov, dtype=float)
    if center_cov.shape != (2, 2):
        raise InvalidArgumentError("center covariance must be 2x2")
    n = grid.n
    dim = state.dim
    mean = np.concatenate([state.mean, lm.center, lm.contour.mean])
    cov = np.zeros((dim + 2 + n, dim + 2 + n))
    cov[:dim, :dim] = state.cov
    cov[dim : dim + 2, dim : dim + 2] = center_cov
    cov[dim + 2 :, dim + 2 :] = lm.contour.cov
    return SlamState(
        mean=mean,
        cov=cov,
        grid=grid,
        ids=state.ids + [lm.id],
        hits={**state.hits, lm.id: lm.hits},
    )


def covariance_health(cov: np.ndarray, tol: float = 1e-9) -> tuple[float, float]:
    """Symmetry and PSD diagnostics: (relative asymmetry, min eigenvalue).

    Healthy when asymmetry <= tol and min eigenvalue >= -tol * trace.
    """
    scale = max(float(np.max(np.abs(cov))), 1e-300)
    asym = float(np.max(np.abs(cov - cov.T))) / scale
    min_eig = float(np.min(np.linalg.eigvalsh(0.5 * (cov + cov.T))))
    return asym, min_eig


def assert_covariance_health(cov: np.ndarray, tol: float = 1e-9) -> None:
    asym, min_eig = covariance_health(cov, tol)
    if asym > tol:
        raise NumericalFailureError(f"covariance asymmetry {asym:.3e} exceeds {tol:.1e}")
    if min_eig < -tol * float(np.trace(cov)):
        raise NumericalFailureError(f"covariance eigenvalue {min_eig:.3e} below PSD tolerance")
