"""Shared fixtures: grids, hyperparameters, small scenario configs."""

from __future__ import annotations

import numpy as np
import pytest

from contourslam import BasisGrid, ContourState, GpHyperparams, condition_on_radius, init_contour


@pytest.fixture
def hyper() -> GpHyperparams:
    return GpHyperparams()


@pytest.fixture
def grid() -> BasisGrid:
    return BasisGrid(16)


@pytest.fixture
def grid50() -> BasisGrid:
    return BasisGrid(50)


def make_circle_contour(
    radius: float, grid: BasisGrid, h: GpHyperparams, n_obs: int = 36
) -> ContourState:
    """Contour belief conditioned on noiseless points of a circle."""
    state = init_contour(grid, h)
    for theta in 2.0 * np.pi * np.arange(n_obs) / n_obs:
        state = condition_on_radius(state, float(theta), radius, grid, h)
    return state


def tiny_world_config(
    range_noise_std: float = 0.0,
    odom_xy_std: float = 0.0,
    odom_heading_std: float = 0.0,
    n_steps: int = 50,
    seed: int = 0,
) -> dict:
    """One circle at the origin, robot orbiting it at radius 3."""
    odom = [
        [odom_xy_std**2, 0.0, 0.0],
        [0.0, odom_xy_std**2, 0.0],
        [0.0, 0.0, odom_heading_std**2],
    ]
    noisy = range_noise_std > 0 or odom_xy_std > 0 or odom_heading_std > 0
    r_xy = 1e-6 if noisy else 1e-8
    return {
        "version": 1,
        "name": "tiny",
        "seed": seed,
        "n_basis": 24,
        "step_dt": 0.25,
        "gp": {
            "sigma_f": 0.35,
            "length_scale": 0.2,
            "sigma_r": 1.0,
            "meas_noise": max(range_noise_std**2, 1e-6),
            "forgetting": 0.0 if not noisy else 1e-4,
        },
        "noise": {
            "q_pose": odom,
            "q_center": [[0.0, 0.0], [0.0, 0.0]],
            "r_xy": [[r_xy, 0.0], [0.0, r_xy]],
        },
        "association": {
            "gate_gamma": 9.0,
            "cluster_eps": 0.5,
            "cluster_min_pts": 3,
            "min_cluster_size": 5,
            "extra_var": 0.0025,
            "init_center_cov": [[0.09, 0.0], [0.0, 0.09]],
        },
        "iekf": {"max_iter": 10, "tol": 1e-6},
        "sensor": {
            "angular_resolution_deg": 3.6,
            "max_range": 12.0,
            "range_noise_std": range_noise_std,
            "odom_noise": odom,
        },
        "report": {
            "snapshot_every": 10,
            "snapshot_angles": 72,
            "band_confidence": 0.99,
            "iou_resolution": 0.05,
        },
        "world": {
            "objects": [
                {"center": [0.0, 0.0], "fourier": {"base": 1.0, "cos": [], "sin": []}}
            ]
        },
        "trajectory": {
            "start": {"x": 3.0, "y": 0.0, "heading_deg": 90.0},
            "segments": [
                {
                    "type": "arc",
                    "radius": 3.0,
                    "sweep_deg": 360.0,
                    "speed": 3.0 * 2.0 * np.pi / (n_steps * 0.25),
                }
            ],
        },
    }
