"""Built-in desk-scale scenarios.

``sim1`` drives a rounded-square loop past four regular polygons with
everything in sensor range the whole time. ``sim2`` is harder: eight
irregular smooth shapes on a ring, with an outer loop that revisits
the start pose at t = 20 s and an excursion through the ring so every
object is eventually observed from all sides.

Builders return plain config dictionaries (the JSON form); validate
with :func:`contourslam.config.from_dict` or write them to disk and
use the files with the command line interface.
"""

from __future__ import annotations

import math

from .errors import ConfigError

_ODOM_XY_STD = 0.01
_ODOM_HEADING_STD_DEG = 0.2


def _base_config(name: str) -> dict:
    heading_var = math.radians(_ODOM_HEADING_STD_DEG) ** 2
    odom = [
        [_ODOM_XY_STD**2, 0.0, 0.0],
        [0.0, _ODOM_XY_STD**2, 0.0],
        [0.0, 0.0, heading_var],
    ]
    return {
        "version": 1,
        "name": name,
        "seed": 0,
        "n_basis": 50,
        "step_dt": 0.25,
        "gp": {
            "sigma_f": 0.35,
            "length_scale": 0.2,
            "sigma_r": 1.0,
            "meas_noise": 9e-4,
            "forgetting": 1e-4,
        },
        "noise": {
            "q_pose": odom,
            "q_center": [[1e-8, 0.0], [0.0, 1e-8]],
            "r_xy": [[1e-6, 0.0], [0.0, 1e-6]],
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
            "range_noise_std": 0.03,
            "odom_noise": odom,
        },
        "report": {
            "snapshot_every": 10,
            "snapshot_angles": 72,
            "band_confidence": 0.99,
            "iou_resolution": 0.05,
        },
    }


def sim1() -> dict:
    """Four regular polygons, rounded-square loop, one lap.

    Corners of polygons are the hard case for a smooth contour model:
    a cluster seen nearly edge-on founds a landmark whose centroid sits
    almost on the boundary, which the radial map cannot represent. The
    scenario therefore asks for a larger founding cluster so landmarks
    are initiated from close range where clusters subtend a wide arc,
    and starts the center estimate with a loose prior.
    """
    cfg = _base_config("sim1")
    cfg["association"]["min_cluster_size"] = 12
    cfg["association"]["init_center_cov"] = [[0.5, 0.0], [0.0, 0.5]]
    cfg["world"] = {
        "objects": [
            {"center": [2.2, 2.2], "regular_polygon": {"circumradius": 1.0, "n_sides": 6}},
            {
                "center": [-2.2, 2.2],
                "regular_polygon": {"circumradius": 0.9, "n_sides": 4, "rotation_deg": 20.0},
            },
            {
                "center": [-2.2, -2.2],
                "regular_polygon": {"circumradius": 1.0, "n_sides": 5, "rotation_deg": 10.0},
            },
            {
                "center": [2.2, -2.2],
                "regular_polygon": {"circumradius": 1.1, "n_sides": 7, "rotation_deg": 5.0},
            },
        ]
    }
    corner = {"type": "arc", "radius": 2.0, "sweep_deg": 90.0, "speed": 1.0}
    side = {"type": "straight", "length": 5.0, "speed": 1.0}
    cfg["trajectory"] = {
        "start": {"x": -1.5, "y": -4.5, "heading_deg": 0.0},
        "segments": [
            {"type": "straight", "length": 4.0, "speed": 1.0},
            corner,
            side,
            corner,
            side,
            corner,
            side,
            corner,
            {"type": "straight", "length": 1.0, "speed": 1.0},
        ],
    }
    return cfg


_SIM2_RING_RADIUS = 3.8
_SIM2_SHAPES = [
    {"base": 0.80, "cos": [0.08, 0.05], "sin": [0.0, 0.04]},
    {"base": 0.75, "cos": [-0.06, 0.04, 0.03], "sin": [0.05, -0.02]},
    {"base": 0.85, "cos": [0.06, 0.0, -0.03], "sin": [-0.04, 0.02]},
    {"base": 0.72, "cos": [0.05, 0.08], "sin": [0.04, 0.05]},
    {"base": 0.82, "cos": [-0.07, -0.04], "sin": [0.05, 0.02]},
    {"base": 0.78, "cos": [0.06, -0.05, 0.02], "sin": [-0.03, 0.04]},
    {"base": 0.80, "cos": [0.0, 0.09], "sin": [0.08, -0.03]},
    {"base": 0.78, "cos": [-0.05, 0.04], "sin": [-0.06, -0.04, 0.03]},
]


def sim2() -> dict:
    """Eight irregular smooth shapes on a ring; loop closes at t = 20 s.

    The robot orbits the ring counterclockwise (radius 6, period 20 s),
    then cuts inward through the gap at azimuth 22.5 degrees, circles
    inside the ring to observe every inner face, returns through the
    same gap, and finishes the second outer lap near the start.
    """
    cfg = _base_config("sim2")
    objects = []
    for k, shape in enumerate(_SIM2_SHAPES):
        az = math.radians(45.0 * k)
        objects.append(
            {
                "center": [
                    _SIM2_RING_RADIUS * math.cos(az),
                    _SIM2_RING_RADIUS * math.sin(az),
                ],
                "fourier": shape,
            }
        )
    cfg["world"] = {"objects": objects}

    speed = 2.0 * math.pi * 6.0 / 20.0  # one outer lap in exactly 20 s
    pivot = 0.08
    inward = {"type": "straight", "length": 4.7, "speed": speed}
    cfg["trajectory"] = {
        "start": {"x": 6.0, "y": 0.0, "heading_deg": 90.0},
        "segments": [
            {"type": "arc", "radius": 6.0, "sweep_deg": 360.0, "speed": speed},
            {"type": "arc", "radius": 6.0, "sweep_deg": 22.5, "speed": speed},
            {"type": "arc", "radius": pivot, "sweep_deg": 90.0, "speed": speed},
            inward,
            {"type": "arc", "radius": pivot, "sweep_deg": -90.0, "speed": speed},
            {"type": "arc", "radius": 1.3, "sweep_deg": 360.0, "speed": speed},
            {"type": "arc", "radius": pivot, "sweep_deg": -90.0, "speed": speed},
            inward,
            {"type": "arc", "radius": pivot, "sweep_deg": 90.0, "speed": speed},
            {"type": "arc", "radius": 6.0, "sweep_deg": 337.5, "speed": speed},
        ],
    }
    return cfg


_BUILDERS = {"sim1": sim1, "sim2": sim2}


def builtin_names() -> list[str]:
    return sorted(_BUILDERS)


def builtin(name: str) -> dict:
    """Config dictionary of a built-in scenario by name."""
    try:
        return _BUILDERS[name]()
    except KeyError:
        raise ConfigError(
            f"unknown built-in scenario {name!r}, available: {', '.join(builtin_names())}"
        ) from None
