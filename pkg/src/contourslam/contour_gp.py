"""Gaussian-process model of star-convex radial contours.

An object boundary is parameterized by a radial function f(theta) giving
the distance from the object center to the boundary along direction
theta. f is modeled as a GP with a 2*pi-periodic kernel and represented
in state space by its values on a fixed uniform grid of basis angles.
Off-grid radii are linear functions of the basis values, so a Kalman
filter over the basis vector performs exact GP regression recursively.

The kernel is

    k(a, b) = sigma_f^2 * exp(-2 sin^2((a - b) / 2) / l^2) + sigma_r^2

with exact period 2*pi: antipodal angles are nearly uncorrelated for
small length scales, so irregular (non-symmetric) contours are
representable. The additive sigma_r^2 term is a fully correlated offset
that lets the GP learn the object's mean radius from data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import InvalidArgumentError, NumericalFailureError

# Relative jitter added to the Gram diagonal before factorization.
JITTER_SCALE = 1e-9

# Angular slack within which a query is treated as lying exactly on a
# basis angle. Far below any finite-difference step or sensor
# resolution, far above round-off on angles of magnitude ~2*pi.
_ON_GRID_TOL = 1e-10

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True, slots=True)
class GpHyperparams:
    """Hyperparameters of the radial contour GP.

    Parameters
    ----------
    sigma_f : prior std of radial variation around the mean radius [m].
    length_scale : angular correlation length [rad].
    sigma_r : prior std of the unknown mean radius [m].
    meas_noise : radial measurement noise variance [m^2].
    forgetting : in [0, 1]; scales the per-step contour process noise.
    """

    sigma_f: float = 0.35
    length_scale: float = 0.2
    sigma_r: float = 1.0
    meas_noise: float = 9e-4
    forgetting: float = 1e-4

    def __post_init__(self) -> None:
        if not (self.sigma_f > 0 and self.length_scale > 0 and self.sigma_r > 0):
            raise InvalidArgumentError("sigma_f, length_scale, sigma_r must be positive")
        if self.meas_noise < 0:
            raise InvalidArgumentError("meas_noise must be non-negative")
        if not 0.0 <= self.forgetting <= 1.0:
            raise InvalidArgumentError("forgetting must lie in [0, 1]")

    @property
    def jitter(self) -> float:
        return JITTER_SCALE * (self.sigma_f**2 + self.sigma_r**2)


@dataclass(frozen=True, slots=True)
class BasisGrid:
    """Uniform grid of n basis angles 2*pi*i/n, i = 0..n-1."""

    n: int

    def __post_init__(self) -> None:
        if self.n < 4:
            raise InvalidArgumentError(f"basis grid needs at least 4 angles, got {self.n}")

    @property
    def angles(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n) / self.n

    @property
    def spacing(self) -> float:
        return TWO_PI / self.n


@dataclass(slots=True)
class ContourState:
    """Gaussian belief over the radial basis vector."""

    mean: np.ndarray
    cov: np.ndarray

    def copy(self) -> ContourState:
        return ContourState(self.mean.copy(), self.cov.copy())


def kernel(theta_a: float, theta_b: float, h: GpHyperparams) -> float:
    """Periodic covariance between the radii at two angles."""
    d = theta_a - theta_b
    return float(
        h.sigma_f**2 * math.exp(-2.0 * math.sin(d / 2.0) ** 2 / h.length_scale**2) + h.sigma_r**2
    )


def gram(theta_a: np.ndarray, theta_b: np.ndarray, h: GpHyperparams) -> np.ndarray:
    """Kernel matrix with entry (i, j) = kernel(a_i, b_j, h)."""
    a = np.atleast_1d(np.asarray(theta_a, dtype=float))
    b = np.atleast_1d(np.asarray(theta_b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise InvalidArgumentError("gram requires non-empty angle vectors")
    d = np.subtract.outer(a, b)
    return h.sigma_f**2 * np.exp(-2.0 * np.sin(d / 2.0) ** 2 / h.length_scale**2) + h.sigma_r**2


def gram_deriv(theta: np.ndarray, theta_b: np.ndarray, h: GpHyperparams) -> np.ndarray:
    """Derivative of gram(theta, theta_b, h) with respect to theta (row-wise)."""
    a = np.atleast_1d(np.asarray(theta, dtype=float))
    b = np.atleast_1d(np.asarray(theta_b, dtype=float))
    d = np.subtract.outer(a, b)
    return (
        -(h.sigma_f**2 / h.length_scale**2)
        * np.sin(d)
        * np.exp(-2.0 * np.sin(d / 2.0) ** 2 / h.length_scale**2)
    )


class _GpSolver:
    """Cached Cholesky factorization of the jittered basis Gram matrix."""

    def __init__(self, grid: BasisGrid, h: GpHyperparams) -> None:
        self.grid = grid
        self.h = h
        self.angles = grid.angles
        self.gram_jittered = gram(self.angles, self.angles, h) + h.jitter * np.eye(grid.n)
        try:
            self._factor = cho_factor(self.gram_jittered, lower=True)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - kernel is PD
            raise NumericalFailureError("basis Gram matrix is not positive definite") from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return cho_solve(self._factor, rhs)

    def on_grid_index(self, theta: float) -> int | None:
        """Index of the basis angle coinciding with theta, if any."""
        idx = int(round(theta / self.grid.spacing)) % self.grid.n
        d = (theta - self.angles[idx] + math.pi) % TWO_PI - math.pi
        return idx if abs(d) < _ON_GRID_TOL else None

    def weight_rows(self, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Interpolation rows H and noise floors R_f for query angles.

        Row j satisfies E[f(theta_j) | basis] = H[j] @ basis. A query
        coinciding with a basis angle gets the exact unit row and
        R_f = meas_noise: that is the limit of the generic formula and
        avoids amplifying round-off through the near-singular Gram.
        """
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        k_cross = gram(thetas, self.angles, self.h)
        rows = self.solve(k_cross.T).T
        prior_var = self.h.sigma_f**2 + self.h.sigma_r**2
        r_f = prior_var + self.h.meas_noise - np.einsum("ij,ij->i", rows, k_cross)
        for j, theta in enumerate(thetas):
            idx = self.on_grid_index(float(theta))
            if idx is not None:
                rows[j] = 0.0
                rows[j, idx] = 1.0
                r_f[j] = self.h.meas_noise
        return rows, r_f

    def weight_rows_deriv(self, thetas: np.ndarray) -> np.ndarray:
        """Derivative of each weight row with respect to its query angle."""
        thetas = np.atleast_1d(np.asarray(thetas, dtype=float))
        return self.solve(gram_deriv(thetas, self.angles, self.h).T).T


_SOLVER_CACHE: dict[tuple[int, GpHyperparams], _GpSolver] = {}


def solver(grid: BasisGrid, h: GpHyperparams) -> _GpSolver:
    key = (grid.n, h)
    cached = _SOLVER_CACHE.get(key)
    if cached is None:
        cached = _GpSolver(grid, h)
        _SOLVER_CACHE[key] = cached
    return cached


def gp_measurement_model(
    theta: float, grid: BasisGrid, h: GpHyperparams
) -> tuple[np.ndarray, float]:
    """Linear measurement model of the radius at one angle.

    Returns (H, R_f) such that an observed radius r at ``theta``
    satisfies r = H @ basis + noise with variance R_f. R_f is the
    measurement noise plus the GP interpolation variance, and is never
    less than meas_noise up to round-off.
    """
    rows, r_f = solver(grid, h).weight_rows(np.array([theta], dtype=float))
    return rows[0], float(r_f[0])


def gp_measurement_rows(
    thetas: np.ndarray, grid: BasisGrid, h: GpHyperparams
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`gp_measurement_model` for a batch of angles."""
    return solver(grid, h).weight_rows(thetas)


def predict_radius(
    theta: float, state: ContourState, grid: BasisGrid, h: GpHyperparams
) -> tuple[float, float]:
    """Marginal posterior of the radius at one angle: (mean, variance)."""
    mu, var = predict_radius_batch(np.array([theta], dtype=float), state, grid, h)
    return float(mu[0]), float(var[0])


def predict_radius_batch(
    thetas: np.ndarray, state: ContourState, grid: BasisGrid, h: GpHyperparams
) -> tuple[np.ndarray, np.ndarray]:
    """Marginal posterior of the radius at each angle.

    variance = k(t,t) + H (cov - K) H^T, with K the jittered basis
    Gram. Clamped at zero: round-off may push tiny posterior variances
    negative once the contour is tightly converged.
    """
    s = solver(grid, h)
    rows, _ = s.weight_rows(thetas)
    mu = rows @ state.mean
    prior_var = h.sigma_f**2 + h.sigma_r**2
    delta = state.cov - s.gram_jittered
    var = prior_var + np.einsum("ij,jk,ik->i", rows, delta, rows)
    return mu, np.maximum(var, 0.0)


def init_contour(grid: BasisGrid, h: GpHyperparams) -> ContourState:
    """Prior contour belief: zero mean, jittered Gram covariance."""
    return ContourState(
        mean=np.zeros(grid.n),
        cov=gram(grid.angles, grid.angles, h) + h.jitter * np.eye(grid.n),
    )


def contour_process_noise(grid: BasisGrid, h: GpHyperparams) -> np.ndarray:
    """Per-step process noise for the contour block: forgetting * Gram."""
    if h.forgetting == 0.0:
        return np.zeros((grid.n, grid.n))
    return h.forgetting * gram(grid.angles, grid.angles, h)


def condition_on_radius(
    state: ContourState, theta: float, radius: float, grid: BasisGrid, h: GpHyperparams
) -> ContourState:
    """Kalman update of the contour belief with one radial observation."""
    row, r_f = gp_measurement_model(theta, grid, h)
    p_h = state.cov @ row
    s = float(row @ p_h) + r_f
    gain = p_h / s
    mean = state.mean + gain * (radius - float(row @ state.mean))
    cov = state.cov - np.outer(gain, p_h)
    return ContourState(mean=mean, cov=0.5 * (cov + cov.T))
