"""Planar rigid-body geometry: poses, rotations, frame transforms.

Angle convention: radians, counterclockwise positive, normalized to
[-pi, pi). Points are float arrays of shape (2,) or (m, 2), one row per
point; transforms accept either and preserve the shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError

TWO_PI = 2.0 * math.pi


def normalize_angle(angle: float) -> float:
    """Wrap an angle to the interval [-pi, pi).

    Idempotent, and congruent to the input modulo 2*pi.
    """
    if not math.isfinite(angle):
        raise InvalidArgumentError(f"angle must be finite, got {angle!r}")
    return (angle + math.pi) % TWO_PI - math.pi


def rotation_matrix(angle: float) -> np.ndarray:
    """Return the 2x2 counterclockwise rotation matrix for ``angle``."""
    if not math.isfinite(angle):
        raise InvalidArgumentError(f"angle must be finite, got {angle!r}")
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


@dataclass(slots=True)
class RobotPose:
    """Robot pose in the global frame: position (x, y) and heading."""

    x: float
    y: float
    heading: float

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def rotation(self) -> np.ndarray:
        return rotation_matrix(self.heading)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.heading])

    @classmethod
    def from_array(cls, v: np.ndarray) -> RobotPose:
        return cls(float(v[0]), float(v[1]), float(v[2]))


@dataclass(frozen=True, slots=True)
class Rotation2:
    """Rotation of the plane by a fixed angle."""

    angle: float

    @property
    def matrix(self) -> np.ndarray:
        return rotation_matrix(self.angle)

    def apply(self, points: np.ndarray) -> np.ndarray:
        return _check_points(points) @ self.matrix.T

    def inverse(self) -> Rotation2:
        return Rotation2(-self.angle)


def _check_points(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != 2:
        raise InvalidArgumentError(f"points must have trailing dimension 2, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise InvalidArgumentError("points must be finite")
    return pts


def local_to_global(z_l: np.ndarray, pose: RobotPose) -> np.ndarray:
    """Map sensor-frame points into the global frame: R(heading) p + t."""
    return _check_points(z_l) @ pose.rotation.T + pose.position


def global_to_local(z_g: np.ndarray, pose: RobotPose) -> np.ndarray:
    """Map global-frame points into the sensor frame: R(heading)^T (p - t).

    Inverse of :func:`local_to_global` up to floating-point round-off.
    """
    return (_check_points(z_g) - pose.position) @ pose.rotation
