"""Per-object state and radial measurement geometry.

A landmark is a star-convex object: a center point plus a GP belief
over its radial contour. Scan points are scored against a landmark
through their polar coordinates (theta, r) around the landmark center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from . import contour_gp as cgp
from .errors import DegenerateGeometryError, InvalidArgumentError
from .geometry import RobotPose, local_to_global

TWO_PI = 2.0 * math.pi


@dataclass(slots=True)
class Landmark:
    """Star-convex object: center, radial contour belief, bookkeeping."""

    id: int
    center: np.ndarray
    contour: cgp.ContourState
    hits: int = 1


@dataclass(slots=True)
class ContourBand:
    """Sampled contour confidence band at a fixed confidence level."""

    angles: np.ndarray
    mean_radius: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def measurement_angle(z_l: np.ndarray, pose: RobotPose, center: np.ndarray) -> float:
    """Polar angle of a local measurement around a landmark center.

    Normalized to [0, 2*pi), matching the basis-grid convention.
    """
    d = local_to_global(z_l, pose) - np.asarray(center, dtype=float)
    if float(np.hypot(d[0], d[1])) < 1e-12:
        raise DegenerateGeometryError("measurement coincides with the landmark center")
    return float(math.atan2(d[1], d[0]) % TWO_PI)


def radial_distance(z_l: np.ndarray, pose: RobotPose, center: np.ndarray) -> float:
    """Distance from the landmark center to a local measurement."""
    d = local_to_global(z_l, pose) - np.asarray(center, dtype=float)
    return float(np.hypot(d[0], d[1]))


def radial_predictions(
    z_l: np.ndarray,
    pose: RobotPose,
    lm: Landmark,
    grid: cgp.BasisGrid,
    h: cgp.GpHyperparams,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Polar coordinates and radial predictive moments for a point batch.

    Returns (theta, r, mu, var) where var is the full innovation
    variance of an observed radius: GP marginal variance plus
    interpolation and measurement noise. Using the marginal variance
    alone would shrink to zero on well-observed contours and reject
    every subsequent measurement at the gate.
    """
    pts = np.atleast_2d(np.asarray(z_l, dtype=float))
    d = local_to_global(pts, pose) - lm.center
    r = np.hypot(d[:, 0], d[:, 1])
    if np.any(r < 1e-12):
        raise DegenerateGeometryError("measurement coincides with the landmark center")
    theta = np.arctan2(d[:, 1], d[:, 0]) % TWO_PI
    mu, var = cgp.predict_radius_batch(theta, lm.contour, grid, h)
    return theta, r, mu, var + h.meas_noise


def likelihood(
    lm: Landmark,
    z_l: np.ndarray,
    pose: RobotPose,
    grid: cgp.BasisGrid,
    h: cgp.GpHyperparams,
) -> float:
    """Gaussian predictive density of the point's radius under the landmark."""
    _, r, mu, var = radial_predictions(z_l, pose, lm, grid, h)
    return float(np.exp(-0.5 * (r[0] - mu[0]) ** 2 / var[0]) / math.sqrt(TWO_PI * var[0]))


def gate(r: float, mu: float, var: float, gamma: float) -> bool:
    """Chi-square gate: accept iff (r - mu)^2 / var < gamma (strict)."""
    if not var > 0:
        raise InvalidArgumentError(f"gate variance must be positive, got {var!r}")
    if not gamma > 0:
        raise InvalidArgumentError(f"gate threshold must be positive, got {gamma!r}")
    return (r - mu) ** 2 / var < gamma


def contour_band(
    lm: Landmark, n: int, confidence: float, grid: cgp.BasisGrid, h: cgp.GpHyperparams
) -> ContourBand:
    """Sampled contour mean with a symmetric confidence band.

    The band covers the contour function itself (no measurement
    noise); the lower edge is clamped at zero for rendering.
    """
    if n < 8:
        raise InvalidArgumentError(f"need at least 8 band samples, got {n}")
    if not 0.0 < confidence < 1.0:
        raise InvalidArgumentError(f"confidence must lie in (0, 1), got {confidence}")
    angles = TWO_PI * np.arange(n) / n
    mu, var = cgp.predict_radius_batch(angles, lm.contour, grid, h)
    half = float(norm.ppf(0.5 * (1.0 + confidence))) * np.sqrt(var)
    return ContourBand(
        angles=angles,
        mean_radius=mu,
        lower=np.maximum(mu - half, 0.0),
        upper=mu + half,
    )


def area(lm: Landmark, n: int, grid: cgp.BasisGrid, h: cgp.GpHyperparams) -> float:
    """Polar area of the mean contour: (1/2) integral of f(theta)^2.

    Midpoint quadrature on n uniform samples of max(mean radius, 0).
    """
    if n < 16:
        raise InvalidArgumentError(f"need at least 16 area samples, got {n}")
    angles = TWO_PI * np.arange(n) / n
    mu, _ = cgp.predict_radius_batch(angles, lm.contour, grid, h)
    radii = np.maximum(mu, 0.0)
    return float(0.5 * np.sum(radii**2) * (TWO_PI / n))
