"""Deterministic ground-truth world: objects, trajectory, lidar, odometry.

World objects are star-convex shapes described by a radial function
around a fixed center, given either as an explicit polygon or as a
truncated Fourier series. The lidar model casts one beam per angular
step from the robot pose, keeps the nearest contour hit per beam, and
adds isotropic Cartesian noise in the global frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import InvalidArgumentError, InvalidScenarioError
from .geometry import RobotPose, global_to_local, normalize_angle, rotation_matrix

TWO_PI = 2.0 * math.pi

# Angular step of the polyline approximating smooth (Fourier) contours.
# The chord error at radius r is about r * step^2 / 8, far below the
# 1e-3 m raycast tolerance; exact hits are then refined by root finding.
_FOURIER_POLYLINE_STEP = math.radians(0.25)


@dataclass(frozen=True, slots=True)
class FourierShape:
    """Radial function r(theta) = base + sum_m cos/sin harmonics."""

    base: float
    cos: tuple[float, ...] = ()
    sin: tuple[float, ...] = ()


@dataclass(slots=True)
class WorldObject:
    """Star-convex object: center plus radial boundary function.

    Exactly one of ``polygon`` (global-frame vertices, counterclockwise
    or clockwise) or ``fourier`` must be given.
    """

    center: np.ndarray
    polygon: np.ndarray | None = None
    fourier: FourierShape | None = None
    _polyline: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.center = np.asarray(self.center, dtype=float)
        if self.center.shape != (2,):
            raise InvalidArgumentError("object center must be a 2-vector")
        if (self.polygon is None) == (self.fourier is None):
            raise InvalidArgumentError("specify exactly one of polygon or fourier")
        if self.polygon is not None:
            self.polygon = np.asarray(self.polygon, dtype=float)
            if self.polygon.ndim != 2 or self.polygon.shape[0] < 3 or self.polygon.shape[1] != 2:
                raise InvalidArgumentError("polygon needs at least 3 vertices of dimension 2")
            self._polyline = self.polygon
        else:
            n = int(round(TWO_PI / _FOURIER_POLYLINE_STEP))
            thetas = TWO_PI * np.arange(n) / n
            self._polyline = self.center + (
                self.radius_at(thetas)[:, None]
                * np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
            )
        self._validate_star_convex()

    def radius_at(self, thetas: np.ndarray) -> np.ndarray:
        """Boundary distance from the center along each direction."""
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        if self.fourier is not None:
            r = np.full(thetas.shape, self.fourier.base)
            for m, a in enumerate(self.fourier.cos, start=1):
                r += a * np.cos(m * thetas)
            for m, b in enumerate(self.fourier.sin, start=1):
                r += b * np.sin(m * thetas)
            return r
        dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
        t, _ = _ray_segments_min_t(self.center, dirs, self.polygon, closed=True)
        if np.any(~np.isfinite(t)):
            raise InvalidScenarioError("polygon does not enclose its center")
        return t

    @property
    def is_smooth(self) -> bool:
        return self.fourier is not None

    @property
    def boundary_polyline(self) -> np.ndarray:
        """Closed boundary as vertices; dense samples for smooth shapes."""
        return self._polyline

    def _validate_star_convex(self) -> None:
        thetas = np.radians(np.arange(360.0))
        r = self.radius_at(thetas)
        if np.any(r <= 0):
            raise InvalidScenarioError("object radial function must be positive at all angles")
        if self.polygon is not None:
            # every 1-degree ray from the center must cross the boundary
            # exactly once; more crossings means the shape is not
            # star-convex around the declared center. Hits are counted
            # by distinct distance so a ray grazing a shared vertex is
            # not double-counted.
            dirs = np.stack([np.cos(thetas), np.sin(thetas)], axis=1)
            t, ok = _ray_segments_hit_params(self.center, dirs, self.polygon)
            for row_t, row_ok in zip(t, ok):
                hits = np.sort(row_t[row_ok])
                distinct = 1 + int(np.sum(np.diff(hits) > 1e-9)) if hits.size else 0
                if distinct != 1:
                    raise InvalidScenarioError("polygon is not star-convex around its center")

    def contains(self, point: np.ndarray) -> bool:
        d = np.asarray(point, dtype=float) - self.center
        rho = float(np.hypot(d[0], d[1]))
        if rho == 0.0:
            return True
        theta = math.atan2(d[1], d[0])
        return rho < float(self.radius_at(np.array([theta]))[0])


def regular_polygon(
    center: np.ndarray, circumradius: float, n_sides: int, rotation: float = 0.0
) -> WorldObject:
    """Convenience constructor for a regular n-gon world object."""
    if n_sides < 3:
        raise InvalidArgumentError("polygon needs at least 3 sides")
    if circumradius <= 0:
        raise InvalidArgumentError("circumradius must be positive")
    center = np.asarray(center, dtype=float)
    angles = rotation + TWO_PI * np.arange(n_sides) / n_sides
    verts = center + circumradius * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return WorldObject(center=center, polygon=verts)


def _segments_of(polyline: np.ndarray, closed: bool = True) -> tuple[np.ndarray, np.ndarray]:
    p0 = polyline
    p1 = np.roll(polyline, -1, axis=0) if closed else polyline[1:]
    return p0, p1


_SEGMENT_PARAM_TOL = 1e-12


def _ray_segments_hit_params(
    origin: np.ndarray, dirs: np.ndarray, polyline: np.ndarray, closed: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """All positive hit parameters per ray: (t matrix, validity mask).

    The segment parameter s admits a tiny tolerance at both ends so a
    ray through a shared vertex cannot slip between the two adjacent
    segments; the resulting duplicate hit has the same distance and is
    harmless to nearest-hit queries and distinct-distance counting.
    """
    p0, p1 = _segments_of(polyline, closed)
    e = p1 - p0  # (k, 2)
    w = p0 - origin  # (k, 2)
    denom = dirs[:, 0, None] * e[None, :, 1] - dirs[:, 1, None] * e[None, :, 0]
    cross_we = w[None, :, 0] * e[None, :, 1] - w[None, :, 1] * e[None, :, 0]
    cross_wd = w[None, :, 0] * dirs[:, 1, None] - w[None, :, 1] * dirs[:, 0, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross_we / denom
        s = cross_wd / denom
    ok = (
        (np.abs(denom) > 1e-15)
        & (s >= -_SEGMENT_PARAM_TOL)
        & (s < 1.0 + _SEGMENT_PARAM_TOL)
        & (t > 1e-9)
    )
    return t, ok


def _ray_segments_min_t(
    origin: np.ndarray, dirs: np.ndarray, polyline: np.ndarray, closed: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Nearest positive ray parameter against a segment loop, per ray.

    Returns (t, valid_any) with t = +inf where no segment is hit.
    """
    t, ok = _ray_segments_hit_params(origin, dirs, polyline, closed)
    t = np.where(ok, t, np.inf)
    t_min = t.min(axis=1)
    return t_min, np.isfinite(t_min)


@dataclass(slots=True)
class StraightSegment:
    length: float
    speed: float

    def __post_init__(self) -> None:
        if self.speed <= 0 or self.length < 0:
            raise InvalidArgumentError("straight segment needs speed > 0, length >= 0")

    @property
    def duration(self) -> float:
        return self.length / self.speed


@dataclass(slots=True)
class ArcSegment:
    """Circular arc: positive sweep turns left, negative turns right."""

    radius: float
    sweep: float
    speed: float

    def __post_init__(self) -> None:
        if self.speed <= 0 or self.radius <= 0:
            raise InvalidArgumentError("arc segment needs speed > 0, radius > 0")

    @property
    def duration(self) -> float:
        return abs(self.sweep) * self.radius / self.speed


Segment = StraightSegment | ArcSegment


@dataclass(slots=True)
class TrajectorySpec:
    """Scripted path: a start pose and ordered straight/arc segments."""

    start: RobotPose
    segments: list[Segment]

    @property
    def duration(self) -> float:
        return sum(seg.duration for seg in self.segments)


def _advance(pose: RobotPose, seg: Segment, tau: float) -> RobotPose:
    """Pose after following ``seg`` from ``pose`` for time ``tau``."""
    if isinstance(seg, StraightSegment):
        dist = seg.speed * tau
        return RobotPose(
            pose.x + dist * math.cos(pose.heading),
            pose.y + dist * math.sin(pose.heading),
            pose.heading,
        )
    turn = math.copysign(seg.speed * tau / seg.radius, seg.sweep)
    side = math.copysign(1.0, seg.sweep)
    cx = pose.x - side * seg.radius * math.sin(pose.heading)
    cy = pose.y + side * seg.radius * math.cos(pose.heading)
    rot = rotation_matrix(turn)
    p = rot @ (pose.position - np.array([cx, cy])) + np.array([cx, cy])
    return RobotPose(float(p[0]), float(p[1]), normalize_angle(pose.heading + turn))


def pose_at(traj: TrajectorySpec, t: float) -> RobotPose:
    """Ground-truth pose at time ``t`` along the scripted path."""
    if t < -1e-9 or t > traj.duration + 1e-9:
        raise InvalidArgumentError(f"time {t} outside trajectory duration {traj.duration}")
    t = min(max(t, 0.0), traj.duration)
    pose = traj.start
    remaining = t
    for seg in traj.segments:
        if remaining <= seg.duration + 1e-12:
            return _advance(pose, seg, min(remaining, seg.duration))
        pose = _advance(pose, seg, seg.duration)
        remaining -= seg.duration
    return pose


@dataclass(slots=True)
class SensorSpec:
    """Lidar and odometry noise model."""

    angular_resolution: float = math.radians(3.6)
    max_range: float = 12.0
    range_noise_std: float = 0.03
    odom_noise: np.ndarray = field(default_factory=lambda: np.zeros((3, 3)))
    seed: int = 0

    def __post_init__(self) -> None:
        self.odom_noise = np.asarray(self.odom_noise, dtype=float)
        n = TWO_PI / self.angular_resolution
        if abs(n - round(n)) > 1e-9:
            raise InvalidArgumentError("angular_resolution must divide 2*pi evenly")
        if self.max_range <= 0 or self.range_noise_std < 0:
            raise InvalidArgumentError("max_range must be positive, noise std non-negative")
        if self.odom_noise.shape != (3, 3):
            raise InvalidArgumentError("odom_noise must be a 3x3 covariance")

    @property
    def n_beams(self) -> int:
        return int(round(TWO_PI / self.angular_resolution))


@dataclass(slots=True)
class Scan:
    """One lidar sweep: local-frame points and their true object ids.

    The ids exist for evaluation only and must never reach the filter.
    """

    points: np.ndarray
    true_ids: np.ndarray
    t: float = 0.0


def _refine_smooth_hit(
    obj: WorldObject, origin: np.ndarray, direction: np.ndarray, t0: float
) -> float:
    """Polish a polyline hit on a smooth contour by 1D root finding."""

    def signed_gap(t: float) -> float:
        p = origin + t * direction
        d = p - obj.center
        rho = math.hypot(d[0], d[1])
        theta = math.atan2(d[1], d[0])
        return rho - float(obj.radius_at(np.array([theta]))[0])

    lo, hi = t0 - 1e-3, t0 + 1e-3
    f_lo, f_hi = signed_gap(lo), signed_gap(hi)
    for _ in range(6):
        if f_lo < 0.0 <= f_hi or f_hi < 0.0 <= f_lo:
            break
        lo, hi = lo - 2e-3, hi + 2e-3
        f_lo, f_hi = signed_gap(lo), signed_gap(hi)
    else:
        return t0
    return float(brentq(signed_gap, lo, hi, xtol=1e-13))


def raycast(
    world: list[WorldObject],
    pose: RobotPose,
    spec: SensorSpec,
    rng: np.random.Generator,
) -> Scan:
    """Cast one full sweep and return the noisy hits in the local frame.

    Beams are cast at bearings k * angular_resolution for k = 0..n-1
    relative to the heading; only the nearest hit within max_range
    survives (objects occlude each other). Noise for all beams is drawn
    up front so the stream consumed per sweep is independent of which
    beams hit.
    """
    origin = pose.position
    for obj in world:
        if obj.contains(origin):
            raise InvalidScenarioError("robot pose lies inside a world object")
    n = spec.n_beams
    bearings = pose.heading + spec.angular_resolution * np.arange(n)
    dirs = np.stack([np.cos(bearings), np.sin(bearings)], axis=1)
    noise = rng.normal(0.0, spec.range_noise_std, size=(n, 2)) if spec.range_noise_std > 0 else None

    best_t = np.full(n, np.inf)
    best_obj = np.full(n, -1, dtype=int)
    for obj_id, obj in enumerate(world):
        t, _ = _ray_segments_min_t(origin, dirs, obj._polyline, closed=True)
        closer = t < best_t
        best_t[closer] = t[closer]
        best_obj[closer] = obj_id

    hit = np.isfinite(best_t)
    for b in np.nonzero(hit)[0]:
        obj = world[best_obj[b]]
        if obj.is_smooth:
            best_t[b] = _refine_smooth_hit(obj, origin, dirs[b], float(best_t[b]))
    hit &= best_t <= spec.max_range

    idx = np.nonzero(hit)[0]
    points_global = origin + best_t[idx, None] * dirs[idx]
    if noise is not None:
        points_global = points_global + noise[idx]
    return Scan(
        points=global_to_local(points_global, pose) if idx.size else np.empty((0, 2)),
        true_ids=best_obj[idx].copy(),
    )


def odometry_increment(
    prev: RobotPose,
    curr: RobotPose,
    spec: SensorSpec,
    rng: np.random.Generator,
) -> np.ndarray:
    """Noisy global-frame pose increment between consecutive poses."""
    u = np.array(
        [curr.x - prev.x, curr.y - prev.y, normalize_angle(curr.heading - prev.heading)]
    )
    if np.trace(spec.odom_noise) > 0.0:
        chol = np.linalg.cholesky(spec.odom_noise + 1e-18 * np.eye(3))
        u = u + chol @ rng.standard_normal(3)
    return u
