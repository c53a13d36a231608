"""Scenario configuration: JSON schema, validation, round-trip.

A scenario file is a single versioned JSON object describing the
world, the scripted trajectory, the sensor, and every filter knob.
Angles in JSON are degrees and carry a ``_deg`` suffix; everything
internal is radians. Validation errors name the offending field by
its path, for example ``world.objects[1].fourier.base``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .association import AssociationConfig
from .contour_gp import BasisGrid, GpHyperparams
from .errors import ConfigError, ContourSlamError
from .geometry import RobotPose
from .simulator import (
    ArcSegment,
    FourierShape,
    SensorSpec,
    StraightSegment,
    TrajectorySpec,
    WorldObject,
    regular_polygon,
)
from .slam_filter import NoiseConfig

CONFIG_VERSION = 1


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _require(d: dict, key: str, path: str):
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: expected an object")
    if key not in d:
        raise ConfigError(f"{_join(path, key)}: missing required field")
    return d[key]


def _number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{path}: expected a number, got {type(value).__name__}")
    return float(value)


def _integer(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{path}: expected an integer, got {type(value).__name__}")
    return value


def _matrix(value, path: str, shape: tuple[int, int]) -> np.ndarray:
    try:
        m = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: expected a numeric matrix") from exc
    if m.shape != shape:
        raise ConfigError(f"{path}: expected shape {shape}, got {m.shape}")
    return m


def _vector(value, path: str, n: int) -> np.ndarray:
    try:
        v = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: expected a numeric vector") from exc
    if v.shape != (n,):
        raise ConfigError(f"{path}: expected {n} numbers, got shape {v.shape}")
    return v


def _build(path: str, fn, *args, **kwargs):
    """Construct a validated object, mapping its errors onto the field path."""
    try:
        return fn(*args, **kwargs)
    except ContourSlamError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


@dataclass(slots=True)
class ReportOptions:
    """Knobs that only affect report output, never the estimate."""

    snapshot_every: int = 10
    snapshot_angles: int = 72
    band_confidence: float = 0.99
    iou_resolution: float = 0.05

    def __post_init__(self) -> None:
        if self.snapshot_every < 1 or self.snapshot_angles < 8:
            raise ConfigError("report: snapshot_every >= 1 and snapshot_angles >= 8 required")
        if not 0.0 < self.band_confidence < 1.0 or self.iou_resolution <= 0:
            raise ConfigError("report: band_confidence in (0,1) and iou_resolution > 0 required")


@dataclass(slots=True)
class ScenarioConfig:
    """Fully validated scenario: world, trajectory, sensor, filter knobs."""

    seed: int
    n_basis: int
    step_dt: float
    gp: GpHyperparams
    noise: NoiseConfig
    association: AssociationConfig
    sensor: SensorSpec
    world: list[WorldObject]
    trajectory: TrajectorySpec
    iekf_max_iter: int = 10
    iekf_tol: float = 1e-6
    report: ReportOptions = field(default_factory=ReportOptions)
    name: str = "scenario"
    out_dir: str | None = None

    def __post_init__(self) -> None:
        if self.n_basis < 4:
            raise ConfigError("n_basis: must be at least 4")
        if self.step_dt <= 0:
            raise ConfigError("step_dt: must be positive")
        if self.iekf_max_iter < 1 or self.iekf_tol <= 0:
            raise ConfigError("iekf: max_iter >= 1 and tol > 0 required")

    @property
    def grid(self) -> BasisGrid:
        return BasisGrid(self.n_basis)

    @property
    def n_steps(self) -> int:
        return int(math.floor(self.trajectory.duration / self.step_dt + 1e-9))


def _parse_gp(d: dict, path: str) -> GpHyperparams:
    defaults = GpHyperparams()
    return _build(
        path,
        GpHyperparams,
        sigma_f=_number(d.get("sigma_f", defaults.sigma_f), _join(path, "sigma_f")),
        length_scale=_number(d.get("length_scale", defaults.length_scale), _join(path, "length_scale")),
        sigma_r=_number(d.get("sigma_r", defaults.sigma_r), _join(path, "sigma_r")),
        meas_noise=_number(d.get("meas_noise", defaults.meas_noise), _join(path, "meas_noise")),
        forgetting=_number(d.get("forgetting", defaults.forgetting), _join(path, "forgetting")),
    )


def _parse_noise(d: dict, path: str) -> NoiseConfig:
    return _build(
        path,
        NoiseConfig,
        q_pose=_matrix(_require(d, "q_pose", path), _join(path, "q_pose"), (3, 3)),
        q_center=_matrix(_require(d, "q_center", path), _join(path, "q_center"), (2, 2)),
        r_xy=_matrix(_require(d, "r_xy", path), _join(path, "r_xy"), (2, 2)),
    )


def _parse_association(d: dict, path: str) -> AssociationConfig:
    defaults = AssociationConfig()
    cov = d.get("init_center_cov")
    return _build(
        path,
        AssociationConfig,
        gate_gamma=_number(d.get("gate_gamma", defaults.gate_gamma), _join(path, "gate_gamma")),
        cluster_eps=_number(d.get("cluster_eps", defaults.cluster_eps), _join(path, "cluster_eps")),
        cluster_min_pts=_integer(
            d.get("cluster_min_pts", defaults.cluster_min_pts), _join(path, "cluster_min_pts")
        ),
        min_cluster_size=_integer(
            d.get("min_cluster_size", defaults.min_cluster_size), _join(path, "min_cluster_size")
        ),
        extra_var=_number(d.get("extra_var", defaults.extra_var), _join(path, "extra_var")),
        init_center_cov=(
            defaults.init_center_cov
            if cov is None
            else _matrix(cov, _join(path, "init_center_cov"), (2, 2))
        ),
    )


def _parse_sensor(d: dict, path: str) -> SensorSpec:
    res_deg = _number(_require(d, "angular_resolution_deg", path), _join(path, "angular_resolution_deg"))
    odom = d.get("odom_noise")
    return _build(
        path,
        SensorSpec,
        angular_resolution=math.radians(res_deg),
        max_range=_number(_require(d, "max_range", path), _join(path, "max_range")),
        range_noise_std=_number(
            _require(d, "range_noise_std", path), _join(path, "range_noise_std")
        ),
        odom_noise=(
            np.zeros((3, 3)) if odom is None else _matrix(odom, _join(path, "odom_noise"), (3, 3))
        ),
    )


def _parse_object(d: dict, path: str) -> WorldObject:
    center = _vector(_require(d, "center", path), _join(path, "center"), 2)
    kinds = [k for k in ("polygon", "fourier", "regular_polygon") if k in d]
    if len(kinds) != 1:
        raise ConfigError(
            f"{path}: specify exactly one of polygon, fourier, regular_polygon, got {kinds or 'none'}"
        )
    kind = kinds[0]
    if kind == "polygon":
        verts = d["polygon"]
        if not isinstance(verts, list) or len(verts) < 3:
            raise ConfigError(f"{_join(path, 'polygon')}: expected a list of at least 3 vertices")
        rows = [_vector(v, f"{path}.polygon[{i}]", 2) for i, v in enumerate(verts)]
        return _build(path, WorldObject, center=center, polygon=np.array(rows))
    if kind == "regular_polygon":
        sub = d["regular_polygon"]
        spath = _join(path, "regular_polygon")
        return _build(
            spath,
            regular_polygon,
            center=center,
            circumradius=_number(_require(sub, "circumradius", spath), _join(spath, "circumradius")),
            n_sides=_integer(_require(sub, "n_sides", spath), _join(spath, "n_sides")),
            rotation=math.radians(_number(sub.get("rotation_deg", 0.0), _join(spath, "rotation_deg"))),
        )
    sub = d["fourier"]
    spath = _join(path, "fourier")
    base = _number(_require(sub, "base", spath), _join(spath, "base"))
    if base <= 0:
        raise ConfigError(f"{_join(spath, 'base')}: must be positive")
    cos = [_number(v, f"{spath}.cos[{i}]") for i, v in enumerate(sub.get("cos", []))]
    sin = [_number(v, f"{spath}.sin[{i}]") for i, v in enumerate(sub.get("sin", []))]
    return _build(
        path, WorldObject, center=center, fourier=FourierShape(base, tuple(cos), tuple(sin))
    )


def _parse_segment(d: dict, path: str) -> StraightSegment | ArcSegment:
    kind = _require(d, "type", path)
    speed = _number(_require(d, "speed", path), _join(path, "speed"))
    if kind == "straight":
        return _build(
            path,
            StraightSegment,
            length=_number(_require(d, "length", path), _join(path, "length")),
            speed=speed,
        )
    if kind == "arc":
        return _build(
            path,
            ArcSegment,
            radius=_number(_require(d, "radius", path), _join(path, "radius")),
            sweep=math.radians(_number(_require(d, "sweep_deg", path), _join(path, "sweep_deg"))),
            speed=speed,
        )
    raise ConfigError(f"{_join(path, 'type')}: unknown segment type {kind!r}")


def _parse_trajectory(d: dict, path: str) -> TrajectorySpec:
    start = _require(d, "start", path)
    spath = _join(path, "start")
    pose = RobotPose(
        _number(_require(start, "x", spath), _join(spath, "x")),
        _number(_require(start, "y", spath), _join(spath, "y")),
        math.radians(_number(start.get("heading_deg", 0.0), _join(spath, "heading_deg"))),
    )
    segs_raw = _require(d, "segments", path)
    if not isinstance(segs_raw, list) or not segs_raw:
        raise ConfigError(f"{_join(path, 'segments')}: expected a non-empty list")
    segments = [_parse_segment(s, f"{path}.segments[{i}]") for i, s in enumerate(segs_raw)]
    return TrajectorySpec(start=pose, segments=segments)


def _parse_report(d: dict, path: str) -> ReportOptions:
    defaults = ReportOptions()
    return _build(
        path,
        ReportOptions,
        snapshot_every=_integer(
            d.get("snapshot_every", defaults.snapshot_every), _join(path, "snapshot_every")
        ),
        snapshot_angles=_integer(
            d.get("snapshot_angles", defaults.snapshot_angles), _join(path, "snapshot_angles")
        ),
        band_confidence=_number(
            d.get("band_confidence", defaults.band_confidence), _join(path, "band_confidence")
        ),
        iou_resolution=_number(
            d.get("iou_resolution", defaults.iou_resolution), _join(path, "iou_resolution")
        ),
    )


def from_dict(d: dict) -> ScenarioConfig:
    """Validate a raw JSON object and build the scenario it describes."""
    if not isinstance(d, dict):
        raise ConfigError("config root: expected a JSON object")
    version = _integer(_require(d, "version", ""), "version")
    if version != CONFIG_VERSION:
        raise ConfigError(f"version: unsupported config version {version}, expected {CONFIG_VERSION}")
    world = _require(d, "world", "")
    objects_raw = _require(world, "objects", "world")
    if not isinstance(objects_raw, list):
        raise ConfigError("world.objects: expected a list (may be empty)")
    objects = [_parse_object(o, f"world.objects[{i}]") for i, o in enumerate(objects_raw)]
    out_dir = d.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ConfigError("out_dir: expected a string path")
    return _build(
        "config",
        ScenarioConfig,
        name=str(d.get("name", "scenario")),
        out_dir=out_dir,
        seed=_integer(d.get("seed", 0), "seed"),
        n_basis=_integer(d.get("n_basis", 50), "n_basis"),
        step_dt=_number(d.get("step_dt", 0.25), "step_dt"),
        gp=_parse_gp(d.get("gp", {}), "gp"),
        noise=_parse_noise(_require(d, "noise", ""), "noise"),
        association=_parse_association(d.get("association", {}), "association"),
        sensor=_parse_sensor(_require(d, "sensor", ""), "sensor"),
        world=objects,
        trajectory=_parse_trajectory(_require(d, "trajectory", ""), "trajectory"),
        iekf_max_iter=_integer(d.get("iekf", {}).get("max_iter", 10), "iekf.max_iter"),
        iekf_tol=_number(d.get("iekf", {}).get("tol", 1e-6), "iekf.tol"),
        report=_parse_report(d.get("report", {}), "report"),
    )


def _object_to_dict(obj: WorldObject) -> dict:
    out: dict = {"center": obj.center.tolist()}
    if obj.fourier is not None:
        out["fourier"] = {
            "base": obj.fourier.base,
            "cos": list(obj.fourier.cos),
            "sin": list(obj.fourier.sin),
        }
    else:
        out["polygon"] = obj.polygon.tolist()
    return out


def _segment_to_dict(seg: StraightSegment | ArcSegment) -> dict:
    if isinstance(seg, StraightSegment):
        return {"type": "straight", "length": seg.length, "speed": seg.speed}
    return {"type": "arc", "radius": seg.radius, "sweep_deg": math.degrees(seg.sweep), "speed": seg.speed}


def to_dict(cfg: ScenarioConfig) -> dict:
    """Canonical JSON form; ``from_dict`` of the result rebuilds ``cfg``."""
    return {
        "version": CONFIG_VERSION,
        "name": cfg.name,
        "out_dir": cfg.out_dir,
        "seed": cfg.seed,
        "n_basis": cfg.n_basis,
        "step_dt": cfg.step_dt,
        "gp": {
            "sigma_f": cfg.gp.sigma_f,
            "length_scale": cfg.gp.length_scale,
            "sigma_r": cfg.gp.sigma_r,
            "meas_noise": cfg.gp.meas_noise,
            "forgetting": cfg.gp.forgetting,
        },
        "noise": {
            "q_pose": cfg.noise.q_pose.tolist(),
            "q_center": cfg.noise.q_center.tolist(),
            "r_xy": cfg.noise.r_xy.tolist(),
        },
        "association": {
            "gate_gamma": cfg.association.gate_gamma,
            "cluster_eps": cfg.association.cluster_eps,
            "cluster_min_pts": cfg.association.cluster_min_pts,
            "min_cluster_size": cfg.association.min_cluster_size,
            "extra_var": cfg.association.extra_var,
            "init_center_cov": cfg.association.init_center_cov.tolist(),
        },
        "iekf": {"max_iter": cfg.iekf_max_iter, "tol": cfg.iekf_tol},
        "sensor": {
            "angular_resolution_deg": math.degrees(cfg.sensor.angular_resolution),
            "max_range": cfg.sensor.max_range,
            "range_noise_std": cfg.sensor.range_noise_std,
            "odom_noise": cfg.sensor.odom_noise.tolist(),
        },
        "world": {"objects": [_object_to_dict(o) for o in cfg.world]},
        "trajectory": {
            "start": {
                "x": cfg.trajectory.start.x,
                "y": cfg.trajectory.start.y,
                "heading_deg": math.degrees(cfg.trajectory.start.heading),
            },
            "segments": [_segment_to_dict(s) for s in cfg.trajectory.segments],
        },
        "report": {
            "snapshot_every": cfg.report.snapshot_every,
            "snapshot_angles": cfg.report.snapshot_angles,
            "band_confidence": cfg.report.band_confidence,
            "iou_resolution": cfg.report.iou_resolution,
        },
    }


def load(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return from_dict(raw)


def save(cfg: ScenarioConfig, path: str | Path) -> None:
    """Write a scenario back to a JSON file."""
    with open(path, "w", encoding="utf-8") as f:
        json.dump(to_dict(cfg), f, indent=2)
        f.write("\n")
