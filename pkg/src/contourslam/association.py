"""Scan-to-map data association, clustering, and landmark initiation.

Each scan point is assigned to the landmark with the highest radial
predictive likelihood among those whose chi-square gate it passes.
Points rejected by every gate are collected, clustered by density, and
each sufficiently large cluster becomes a new landmark.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import contour_gp as cgp
from .errors import DegenerateGeometryError, InvalidArgumentError
from .geometry import RobotPose
from .landmark import Landmark, radial_predictions
from .slam_filter import AssociatedScan, ScanAssociation, SlamState

TWO_PI = 2.0 * math.pi


@dataclass(slots=True)
class AssociationConfig:
    """Gating, clustering, and initiation parameters.

    ``extra_var`` is a variance floor added to the radial predictive
    variance during gating and scoring only. It stands in for what the
    per-landmark likelihood cannot see: pose and center uncertainty
    and the bias of a smooth contour model on cornered objects.
    Without it, points on a well-observed landmark fail its collapsed
    gate and respawn as duplicate landmarks.
    """

    gate_gamma: float = 9.0
    cluster_eps: float = 0.5
    cluster_min_pts: int = 3
    init_center_cov: np.ndarray = field(default_factory=lambda: np.diag([0.09, 0.09]))
    min_cluster_size: int = 5
    extra_var: float = 0.0025

    def __post_init__(self) -> None:
        self.init_center_cov = np.asarray(self.init_center_cov, dtype=float)
        if not self.gate_gamma > 0:
            raise InvalidArgumentError("gate_gamma must be positive")
        if not self.cluster_eps > 0:
            raise InvalidArgumentError("cluster_eps must be positive")
        if self.cluster_min_pts < 2:
            raise InvalidArgumentError("cluster_min_pts must be at least 2")
        if self.min_cluster_size < 1:
            raise InvalidArgumentError("min_cluster_size must be at least 1")
        if self.init_center_cov.shape != (2, 2):
            raise InvalidArgumentError("init_center_cov must be 2x2")
        if self.extra_var < 0:
            raise InvalidArgumentError("extra_var must be non-negative")


def associate(
    scan: np.ndarray,
    state: SlamState,
    cfg: AssociationConfig,
    grid: cgp.BasisGrid,
    h: cgp.GpHyperparams,
) -> AssociatedScan:
    """Partition a scan (local-frame points) against the predicted map.

    Each point goes to the gate-passing landmark of maximum likelihood;
    ties break toward the lowest landmark id. Points failing every gate
    are returned in ``unassociated`` (still local frame).
    """
    pts = np.atleast_2d(np.asarray(scan, dtype=float))
    m = pts.shape[0]
    out = AssociatedScan(assigned=np.full(m, -1, dtype=int))
    if m == 0:
        return out
    if state.n_landmarks == 0:
        out.unassociated = pts.copy()
        return out

    pose = state.pose
    ordered_ids = sorted(state.ids)
    loglik = np.full((m, len(ordered_ids)), -np.inf)
    thetas = np.zeros((m, len(ordered_ids)))
    radii = np.zeros((m, len(ordered_ids)))
    for col, lm_id in enumerate(ordered_ids):
        lm = state.landmark(lm_id)
        theta, r, mu, var = radial_predictions(pts, pose, lm, grid, h)
        var = var + cfg.extra_var
        maha = (r - mu) ** 2 / var
        passed = maha < cfg.gate_gamma
        loglik[passed, col] = (-0.5 * maha - 0.5 * np.log(TWO_PI * var))[passed]
        thetas[:, col] = theta
        radii[:, col] = r

    best = np.argmax(loglik, axis=1)
    gated = np.isfinite(loglik[np.arange(m), best])
    out.assigned[gated] = np.asarray(ordered_ids)[best[gated]]

    for col, lm_id in enumerate(ordered_ids):
        sel = out.assigned == lm_id
        if np.any(sel):
            out.per_landmark[lm_id] = ScanAssociation(
                points=pts[sel].copy(),
                thetas=thetas[sel, col],
                radii=radii[sel, col],
            )
    out.unassociated = pts[~gated].copy()
    return out


def cluster(points: np.ndarray, cfg: AssociationConfig) -> list[np.ndarray]:
    """Density-based clusters of global-frame points.

    DBSCAN semantics: a point is a core point when at least
    cluster_min_pts points (itself included) lie within cluster_eps;
    clusters are the connected components of core points under
    eps-reachability plus their border points. Noise and clusters
    smaller than min_cluster_size are discarded. Deterministic for a
    fixed input ordering.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    m = pts.shape[0]
    if m == 0:
        return []
    tree = cKDTree(pts)
    neighbors = tree.query_ball_point(pts, cfg.cluster_eps)
    core = np.array([len(nb) >= cfg.cluster_min_pts for nb in neighbors])

    labels = np.full(m, -1, dtype=int)
    n_clusters = 0
    for seed in range(m):
        if labels[seed] != -1 or not core[seed]:
            continue
        label = n_clusters
        n_clusters += 1
        labels[seed] = label
        frontier = [seed]
        while frontier:
            i = frontier.pop()
            for j in neighbors[i]:
                if labels[j] == -1:
                    labels[j] = label
                    if core[j]:
                        frontier.append(j)
    return [
        pts[labels == label]
        for label in range(n_clusters)
        if int(np.sum(labels == label)) >= cfg.min_cluster_size
    ]


def initiate(
    cluster_points: np.ndarray,
    pose: RobotPose,
    cfg: AssociationConfig,
    grid: cgp.BasisGrid,
    h: cgp.GpHyperparams,
    lm_id: int = 0,
) -> Landmark:
    """Build a landmark from one cluster of global-frame points.

    The center is the cluster centroid and the contour prior is
    conditioned on each point's (angle, radius) around it with rank-1
    Kalman updates. ``pose`` records the observation context; the
    geometry itself is pose-free because the points are global.
    """
    pts = np.atleast_2d(np.asarray(cluster_points, dtype=float))
    if pts.shape[0] < cfg.min_cluster_size:
        raise InvalidArgumentError(
            f"cluster of {pts.shape[0]} points is below min_cluster_size={cfg.min_cluster_size}"
        )
    center = pts.mean(axis=0)
    d = pts - center
    r = np.hypot(d[:, 0], d[:, 1])
    usable = r > 1e-12
    if not np.any(usable):
        raise DegenerateGeometryError("cluster is a single repeated point")
    theta = np.arctan2(d[usable, 1], d[usable, 0]) % TWO_PI

    contour = cgp.init_contour(grid, h)
    for th, radius in zip(theta, r[usable]):
        contour = cgp.condition_on_radius(contour, float(th), float(radius), grid, h)
    return Landmark(id=lm_id, center=center, contour=contour, hits=pts.shape[0])
