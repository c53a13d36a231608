"""Command line interface.

Three subcommands:

``run <config> [--seed S] [--out DIR]``
    Execute a scenario and write runlog.ndjson plus the full report
    (steps.csv, summary.json, summary.csv, SVG snapshots).
``report <runlog> [--out DIR]``
    Regenerate the report from an existing run log.
``validate <config>``
    Check a config file and print a one-line summary.

``<config>`` is a JSON file path or a built-in scenario name
(``sim1``, ``sim2``).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

from . import config as cfgmod
from . import scenarios
from .config import ScenarioConfig
from .errors import ContourSlamError
from .metrics import RunLog
from .runner import run_scenario, write_report


def _resolve_config(arg: str) -> ScenarioConfig:
    path = Path(arg)
    if path.exists():
        return cfgmod.load(path)
    if arg in scenarios.builtin_names():
        return cfgmod.from_dict(scenarios.builtin(arg))
    raise ContourSlamError(
        f"no such config file or built-in scenario: {arg!r} "
        f"(built-ins: {', '.join(scenarios.builtin_names())})"
    )


def _print_summary(summary: dict, out: Path) -> None:
    print(f"scenario:             {summary['name']} (seed {summary['seed']})")
    print(f"steps:                {summary['n_steps']}")
    print(f"landmarks:            {summary['n_landmarks']}")
    print(f"rmse x / y:           {summary['rmse_x_m']:.4f} m / {summary['rmse_y_m']:.4f} m")
    print(f"rmse heading:         {summary['rmse_heading_deg']:.4f} deg")
    iou = summary["final_iou"]
    print(f"final map IoU:        {'n/a' if math.isnan(iou) else f'{iou:.4f}'}")
    print(f"association accuracy: {summary['association_accuracy']:.4f}")
    print(f"artifacts:            {out}")


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args.config)
    log, _ = run_scenario(cfg, seed=args.seed)
    used_seed = log.config["seed"]
    out = Path(args.out or cfg.out_dir or f"runs/{cfg.name}-seed{used_seed}")
    out.mkdir(parents=True, exist_ok=True)
    log.to_ndjson(out / "runlog.ndjson")
    summary = write_report(log, out)
    _print_summary(summary, out)
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    log_path = Path(args.runlog)
    log = RunLog.from_ndjson(log_path)
    out = Path(args.out) if args.out else log_path.parent / "report"
    summary = write_report(log, out)
    _print_summary(summary, out)
    return 0


def _cmd_validate(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args.config)
    print(
        f"valid: {cfg.name} ({len(cfg.world)} objects, {cfg.n_steps} steps, "
        f"{cfg.sensor.n_beams} beams, N={cfg.n_basis}, seed {cfg.seed})"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contourslam",
        description="2D lidar SLAM with Gaussian-process object contours",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a scenario and write log + report")
    p_run.add_argument("config", help="config JSON path or built-in name (sim1, sim2)")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--out", default=None, help="output directory")
    p_run.set_defaults(fn=_cmd_run)

    p_rep = sub.add_parser("report", help="rebuild the report from a run log")
    p_rep.add_argument("runlog", help="path to runlog.ndjson")
    p_rep.add_argument("--out", default=None, help="output directory")
    p_rep.set_defaults(fn=_cmd_report)

    p_val = sub.add_parser("validate", help="validate a scenario config")
    p_val.add_argument("config", help="config JSON path or built-in name")
    p_val.set_defaults(fn=_cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ContourSlamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
