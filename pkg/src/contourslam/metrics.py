"""Run evaluation: pose RMSE, map IoU, association accuracy, run logs.

A RunLog is the complete per-step record of one run: true and
estimated poses, the scan itself, sampled contour bands of every
landmark, and the association decision for every scan point together
with its true object id. Logs serialize to newline-delimited JSON:
line 1 is a header record with the scenario configuration, then one
record per step with fields in fixed order (type, t, true_pose,
est_pose, points, landmarks, assoc_true, assoc_est), so a log file is
self-contained and byte-reproducible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path as FsPath

import numpy as np
from matplotlib.path import Path as MplPath

from .errors import InvalidArgumentError
from .geometry import normalize_angle
from .simulator import WorldObject

TWO_PI = 2.0 * math.pi
LOG_VERSION = 1


@dataclass(slots=True)
class LandmarkSnapshot:
    """One landmark's contour band sampled on uniform angles.

    ``radii`` is the posterior mean radius; ``lower``/``upper`` bound
    the confidence band at the level the run was configured with.
    """

    id: int
    center: np.ndarray
    radii: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def polygon(self, radii: np.ndarray | None = None) -> np.ndarray:
        """Sampled boundary polygon; negative radii clamp to 0."""
        r = self.radii if radii is None else radii
        n = r.shape[0]
        angles = TWO_PI * np.arange(n) / n
        r = np.maximum(r, 0.0)
        return self.center + r[:, None] * np.stack([np.cos(angles), np.sin(angles)], axis=1)


@dataclass(slots=True)
class StepRecord:
    """Everything recorded about one filter step.

    ``points`` is the scan in the robot frame; ``assoc_true`` holds the
    simulator's object id per point and ``assoc_est`` the landmark id
    the filter assigned (or -1).
    """

    t: float
    true_pose: np.ndarray
    est_pose: np.ndarray
    points: np.ndarray
    landmarks: list[LandmarkSnapshot]
    assoc_true: np.ndarray
    assoc_est: np.ndarray


@dataclass(slots=True)
class RunLog:
    """Time series of StepRecords plus the config that produced them."""

    config: dict
    steps: list[StepRecord] = field(default_factory=list)

    def to_ndjson(self, path: str | FsPath) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for line in self.to_lines():
                f.write(line)
                f.write("\n")

    def to_lines(self) -> list[str]:
        compact = {"separators": (",", ":"), "sort_keys": False}
        lines = [json.dumps({"type": "header", "version": LOG_VERSION, "config": self.config}, **compact)]
        for s in self.steps:
            record = {
                "type": "step",
                "t": s.t,
                "true_pose": s.true_pose.tolist(),
                "est_pose": s.est_pose.tolist(),
                "points": s.points.tolist(),
                "landmarks": [
                    {
                        "id": lm.id,
                        "center": lm.center.tolist(),
                        "radii": lm.radii.tolist(),
                        "lower": lm.lower.tolist(),
                        "upper": lm.upper.tolist(),
                    }
                    for lm in s.landmarks
                ],
                "assoc_true": s.assoc_true.tolist(),
                "assoc_est": s.assoc_est.tolist(),
            }
            lines.append(json.dumps(record, **compact))
        return lines

    @classmethod
    def from_ndjson(cls, path: str | FsPath) -> RunLog:
        with open(path, "r", encoding="utf-8") as f:
            lines = [line for line in f.read().splitlines() if line.strip()]
        if not lines:
            raise InvalidArgumentError(f"runlog {path} is empty")
        header = json.loads(lines[0])
        if header.get("type") != "header":
            raise InvalidArgumentError("runlog must start with a header record")
        log = cls(config=header["config"])
        for line in lines[1:]:
            rec = json.loads(line)
            points = np.array(rec["points"], dtype=float).reshape(-1, 2)
            log.steps.append(
                StepRecord(
                    t=float(rec["t"]),
                    true_pose=np.array(rec["true_pose"], dtype=float),
                    est_pose=np.array(rec["est_pose"], dtype=float),
                    points=points,
                    landmarks=[
                        LandmarkSnapshot(
                            id=int(lm["id"]),
                            center=np.array(lm["center"], dtype=float),
                            radii=np.array(lm["radii"], dtype=float),
                            lower=np.array(lm["lower"], dtype=float),
                            upper=np.array(lm["upper"], dtype=float),
                        )
                        for lm in rec["landmarks"]
                    ],
                    assoc_true=np.array(rec["assoc_true"], dtype=int),
                    assoc_est=np.array(rec["assoc_est"], dtype=int),
                )
            )
        return log


def pose_rmse(log: RunLog) -> tuple[float, float, float]:
    """Per-axis RMSE over the run: (x [m], y [m], heading [degrees])."""
    if not log.steps:
        raise InvalidArgumentError("cannot compute RMSE of an empty log")
    err = np.array(
        [
            [
                s.est_pose[0] - s.true_pose[0],
                s.est_pose[1] - s.true_pose[1],
                normalize_angle(float(s.est_pose[2] - s.true_pose[2])),
            ]
            for s in log.steps
        ]
    )
    rms = np.sqrt(np.mean(err**2, axis=0))
    return float(rms[0]), float(rms[1]), float(math.degrees(rms[2]))


def _occupancy(polygons: list[np.ndarray], grid_pts: np.ndarray) -> np.ndarray:
    mask = np.zeros(grid_pts.shape[0], dtype=bool)
    for poly in polygons:
        if poly.shape[0] >= 3:
            mask |= MplPath(poly).contains_points(grid_pts)
    return mask


def map_iou(
    estimated: list[np.ndarray],
    truth: list[WorldObject],
    resolution: float = 0.05,
) -> float:
    """Intersection-over-union of the two occupied regions.

    Both maps are rasterized on a shared grid covering their union,
    with one sample at each cell center.
    """
    if resolution <= 0:
        raise InvalidArgumentError("resolution must be positive")
    if not truth:
        raise InvalidArgumentError("truth map must contain at least one object")
    truth_polys = [obj.boundary_polyline for obj in truth]
    est_polys = [np.asarray(p, dtype=float) for p in estimated if np.asarray(p).shape[0] >= 3]
    all_pts = np.vstack(truth_polys + est_polys)
    lo = all_pts.min(axis=0) - 2 * resolution
    hi = all_pts.max(axis=0) + 2 * resolution
    xs = np.arange(lo[0] + 0.5 * resolution, hi[0], resolution)
    ys = np.arange(lo[1] + 0.5 * resolution, hi[1], resolution)
    gx, gy = np.meshgrid(xs, ys)
    grid_pts = np.stack([gx.ravel(), gy.ravel()], axis=1)

    true_mask = _occupancy(truth_polys, grid_pts)
    est_mask = _occupancy(est_polys, grid_pts)
    union = np.sum(true_mask | est_mask)
    if union == 0:
        return 0.0
    return float(np.sum(true_mask & est_mask) / union)


def association_accuracy(log: RunLog) -> float:
    """Fraction of associated points matching their landmark's majority id.

    Each estimated landmark is mapped to the ground-truth object that
    dominates its associations over the whole run (ties toward the
    lowest true id); a point counts as correct when its own true id
    equals its landmark's mapped id.
    """
    pairs: list[tuple[int, int]] = []
    for s in log.steps:
        sel = s.assoc_est >= 0
        pairs.extend(zip(s.assoc_est[sel].tolist(), s.assoc_true[sel].tolist()))
    if not pairs:
        return 0.0
    counts: dict[int, dict[int, int]] = {}
    for est_id, true_id in pairs:
        by_true = counts.setdefault(est_id, {})
        by_true[true_id] = by_true.get(true_id, 0) + 1
    dominant = {
        est_id: min((-n, tid) for tid, n in by_true.items())[1]
        for est_id, by_true in counts.items()
    }
    correct = sum(1 for est_id, true_id in pairs if dominant[est_id] == true_id)
    return correct / len(pairs)
