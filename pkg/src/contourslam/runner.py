"""Scenario execution and report generation.

The step loop runs in fixed phase order: predict the state with one
odometry increment, associate the new scan against the predicted map,
initiate landmarks from unassociated clusters, then apply the iterated
correction. New landmarks are built from their founding cluster and
enter the correction only on later scans.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import config as cfgmod
from .association import associate, cluster, initiate
from .config import ScenarioConfig
from .errors import InvalidArgumentError, NumericalFailureError
from .geometry import local_to_global, normalize_angle
from .landmark import contour_band
from .metrics import (
    LandmarkSnapshot,
    RunLog,
    StepRecord,
    _occupancy,
    association_accuracy,
    map_iou,
    pose_rmse,
)
from .simulator import WorldObject, odometry_increment, pose_at, raycast
from .slam_filter import (
    SlamState,
    assert_covariance_health,
    augment,
    iekf_update,
    predict,
)

PHASES = ("predict", "associate", "initiate", "correct")

STEP_CSV_COLUMNS = (
    "step",
    "t",
    "true_x",
    "true_y",
    "true_heading",
    "est_x",
    "est_y",
    "est_heading",
    "err_x",
    "err_y",
    "err_heading_deg",
    "iou",
)


def _snapshot_landmarks(state: SlamState, cfg: ScenarioConfig) -> list[LandmarkSnapshot]:
    snaps = []
    for lm_id in state.ids:
        band = contour_band(
            state.landmark(lm_id),
            cfg.report.snapshot_angles,
            cfg.report.band_confidence,
            state.grid,
            cfg.gp,
        )
        snaps.append(
            LandmarkSnapshot(
                id=lm_id,
                center=state.center_of(lm_id),
                radii=band.mean_radius,
                lower=band.lower,
                upper=band.upper,
            )
        )
    return snaps


def run_scenario(
    cfg: ScenarioConfig,
    seed: int | None = None,
    check_health: bool = False,
    trace: list[str] | None = None,
) -> tuple[RunLog, SlamState]:
    """Run the simulator and filter over the whole trajectory.

    ``seed`` overrides the config seed for this run (and is recorded in
    the log header, so the log stays reproducible from its own config).
    ``check_health`` verifies covariance symmetry and positive
    semidefiniteness after every step. ``trace``, when given, collects
    the phase name of every loop stage in execution order.
    """
    used_seed = cfg.seed if seed is None else int(seed)
    grid = cfg.grid
    h = cfg.gp
    header = cfgmod.to_dict(cfg)
    header["seed"] = used_seed

    scan_seq, odom_seq = np.random.SeedSequence(used_seed).spawn(2)
    rng_scan = np.random.Generator(np.random.PCG64(scan_seq))
    rng_odom = np.random.Generator(np.random.PCG64(odom_seq))

    true_prev = pose_at(cfg.trajectory, 0.0)
    state = SlamState.initial(true_prev, np.zeros((3, 3)), grid)
    log = RunLog(config=header)
    next_id = 0

    for k in range(1, cfg.n_steps + 1):
        t = k * cfg.step_dt
        try:
            true_pose = pose_at(cfg.trajectory, t)
            u = odometry_increment(true_prev, true_pose, cfg.sensor, rng_odom)
            state = predict(state, u, cfg.noise, grid, h)
            if trace is not None:
                trace.append("predict")

            scan = raycast(cfg.world, true_pose, cfg.sensor, rng_scan)
            assoc = associate(scan.points, state, cfg.association, grid, h)
            if trace is not None:
                trace.append("associate")

            if assoc.unassociated.shape[0]:
                leftovers = local_to_global(assoc.unassociated, state.pose)
                for cluster_pts in cluster(leftovers, cfg.association):
                    lm = initiate(cluster_pts, state.pose, cfg.association, grid, h, lm_id=next_id)
                    state = augment(state, lm, cfg.association.init_center_cov, grid, h)
                    next_id += 1
            if trace is not None:
                trace.append("initiate")

            state = iekf_update(state, assoc, grid, h, cfg.noise, cfg.iekf_max_iter, cfg.iekf_tol)
            for lm_id, part in assoc.per_landmark.items():
                state.hits[lm_id] = state.hits.get(lm_id, 0) + part.points.shape[0]
            if trace is not None:
                trace.append("correct")

            if check_health:
                assert_covariance_health(state.cov)

            log.steps.append(
                StepRecord(
                    t=t,
                    true_pose=true_pose.as_array(),
                    est_pose=state.mean[:3].copy(),
                    points=scan.points.copy(),
                    landmarks=_snapshot_landmarks(state, cfg),
                    assoc_true=scan.true_ids.copy(),
                    assoc_est=assoc.assigned.copy(),
                )
            )
        except NumericalFailureError as exc:
            raise NumericalFailureError(f"step {k}: {exc}") from exc
        true_prev = true_pose
    return log, state


def iou_series(log: RunLog, truth: list[WorldObject], resolution: float) -> np.ndarray:
    """Map IoU after each step; NaN when the true world is empty.

    All steps share one raster grid so the series is comparable; the
    truth mask is computed once.
    """
    if not truth:
        return np.full(len(log.steps), np.nan)
    truth_polys = [obj.boundary_polyline for obj in truth]
    est_polys_per_step = [[snap.polygon() for snap in s.landmarks] for s in log.steps]
    all_pts = np.vstack(truth_polys + [p for polys in est_polys_per_step for p in polys])
    lo = all_pts.min(axis=0) - 2 * resolution
    hi = all_pts.max(axis=0) + 2 * resolution
    xs = np.arange(lo[0] + 0.5 * resolution, hi[0], resolution)
    ys = np.arange(lo[1] + 0.5 * resolution, hi[1], resolution)
    gx, gy = np.meshgrid(xs, ys)
    grid_pts = np.stack([gx.ravel(), gy.ravel()], axis=1)
    true_mask = _occupancy(truth_polys, grid_pts)

    out = np.zeros(len(log.steps))
    for i, est_polys in enumerate(est_polys_per_step):
        est_mask = _occupancy(est_polys, grid_pts)
        union = np.sum(true_mask | est_mask)
        out[i] = float(np.sum(true_mask & est_mask) / union) if union else 0.0
    return out


def _fmt(x: float) -> str:
    return repr(float(x))


def steps_csv_lines(log: RunLog, ious: np.ndarray) -> list[str]:
    """Per-step error table; floats use shortest round-trip notation."""
    lines = [",".join(STEP_CSV_COLUMNS)]
    for i, s in enumerate(log.steps):
        err_heading = math.degrees(normalize_angle(float(s.est_pose[2] - s.true_pose[2])))
        cells = [
            str(i + 1),
            _fmt(s.t),
            _fmt(s.true_pose[0]),
            _fmt(s.true_pose[1]),
            _fmt(s.true_pose[2]),
            _fmt(s.est_pose[0]),
            _fmt(s.est_pose[1]),
            _fmt(s.est_pose[2]),
            _fmt(s.est_pose[0] - s.true_pose[0]),
            _fmt(s.est_pose[1] - s.true_pose[1]),
            _fmt(err_heading),
            _fmt(ious[i]),
        ]
        lines.append(",".join(cells))
    return lines


def summarize(log: RunLog) -> dict:
    """Headline metrics of one run, consistent with the metrics module."""
    cfg = cfgmod.from_dict(log.config)
    if not log.steps:
        raise InvalidArgumentError("cannot summarize an empty run log")
    rx, ry, rh = pose_rmse(log)
    final_polys = [snap.polygon() for snap in log.steps[-1].landmarks]
    final_iou = map_iou(final_polys, cfg.world, cfg.report.iou_resolution) if cfg.world else float("nan")
    return {
        "name": cfg.name,
        "seed": log.config["seed"],
        "n_steps": len(log.steps),
        "n_landmarks": len(log.steps[-1].landmarks),
        "rmse_x_m": rx,
        "rmse_y_m": ry,
        "rmse_heading_deg": rh,
        "final_iou": final_iou,
        "association_accuracy": association_accuracy(log),
    }


def render_snapshot(
    log: RunLog,
    step_index: int,
    truth: list[WorldObject],
    path: str | Path | None = None,
) -> dict:
    """Draw one map snapshot: truth, contour bands, both trajectories.

    Returns the axis limits and the extremes of every plotted sample so
    callers can verify the drawing stays inside its bounding box.
    """
    s = log.steps[step_index]
    fig, ax = plt.subplots(figsize=(6.4, 6.4))
    pts: list[np.ndarray] = []

    for obj in truth:
        poly = obj.boundary_polyline
        ax.fill(poly[:, 0], poly[:, 1], color="0.85", zorder=1)
        ax.plot(
            np.append(poly[:, 0], poly[0, 0]),
            np.append(poly[:, 1], poly[0, 1]),
            color="0.5",
            linewidth=1.0,
            zorder=2,
        )
        pts.append(poly)

    for j, snap in enumerate(s.landmarks):
        color = f"C{j % 10}"
        mean_poly = snap.polygon()
        outer = snap.polygon(snap.upper)
        inner = snap.polygon(snap.lower)
        ring = np.vstack([outer, inner[::-1]])
        ax.fill(ring[:, 0], ring[:, 1], color=color, alpha=0.2, linewidth=0, zorder=3)
        ax.plot(
            np.append(mean_poly[:, 0], mean_poly[0, 0]),
            np.append(mean_poly[:, 1], mean_poly[0, 1]),
            color=color,
            linewidth=1.4,
            zorder=4,
        )
        ax.plot(*snap.center, marker="+", color=color, markersize=6, zorder=4)
        pts.extend([mean_poly, outer, inner, snap.center[None, :]])

    true_tr = np.array([r.true_pose[:2] for r in log.steps[: step_index + 1]])
    est_tr = np.array([r.est_pose[:2] for r in log.steps[: step_index + 1]])
    ax.plot(true_tr[:, 0], true_tr[:, 1], "k--", linewidth=1.0, label="true path", zorder=5)
    ax.plot(est_tr[:, 0], est_tr[:, 1], "C3-", linewidth=1.0, label="estimated path", zorder=5)
    ax.plot(*est_tr[-1], marker="o", color="C3", markersize=5, zorder=6)
    pts.extend([true_tr, est_tr])

    allpts = np.vstack(pts)
    lo = allpts.min(axis=0) - 0.5
    hi = allpts.max(axis=0) + 0.5
    ax.set_xlim(lo[0], hi[0])
    ax.set_ylim(lo[1], hi[1])
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(f"t = {s.t:.2f} s")
    ax.legend(loc="upper right", fontsize=8)
    if path is not None:
        fig.savefig(path, format="svg")
    plt.close(fig)
    return {
        "xlim": (float(lo[0]), float(hi[0])),
        "ylim": (float(lo[1]), float(hi[1])),
        "data_min": (float(allpts[:, 0].min()), float(allpts[:, 1].min())),
        "data_max": (float(allpts[:, 0].max()), float(allpts[:, 1].max())),
    }


def snapshot_indices(n_steps: int, every: int) -> list[int]:
    """0-based indices to render: every Nth step plus the final step."""
    idx = [k - 1 for k in range(every, n_steps + 1, every)]
    if n_steps and (not idx or idx[-1] != n_steps - 1):
        idx.append(n_steps - 1)
    return idx


def write_report(log: RunLog, out_dir: str | Path, render: bool = True) -> dict:
    """Write steps.csv, summary.json, summary.csv, and SVG snapshots."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = cfgmod.from_dict(log.config)

    ious = iou_series(log, cfg.world, cfg.report.iou_resolution)
    (out / "steps.csv").write_text("\n".join(steps_csv_lines(log, ious)) + "\n", encoding="utf-8")

    summary = summarize(log)
    with open(out / "summary.json", "w", encoding="utf-8") as f:
        json.dump(summary, f, indent=2)
        f.write("\n")
    header = ",".join(summary.keys())
    row = ",".join(
        _fmt(v) if isinstance(v, float) else str(v) for v in summary.values()
    )
    (out / "summary.csv").write_text(header + "\n" + row + "\n", encoding="utf-8")

    if render and log.steps:
        snap_dir = out / "snapshots"
        snap_dir.mkdir(exist_ok=True)
        for i in snapshot_indices(len(log.steps), cfg.report.snapshot_every):
            render_snapshot(log, i, cfg.world, snap_dir / f"step_{i + 1:04d}.svg")
    return summary
