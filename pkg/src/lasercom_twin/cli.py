"""Command-line entry point: ``lasercom-twin <command> <scenario-file>``.

Exit status is 0 on success, 1 for configuration errors (bad or missing
scenario file, infeasible calibration) and 2 for failures during a run.
The seed is taken from ``--seed``, else ``$LASERCOM_SEED``, else the file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import amplifier, runner
from .errors import CalibrationError, ConfigError, LasercomError
from .scenario import load_scenario, with_seed

SEED_ENV = "LASERCOM_SEED"


def _seed(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be an integer, got {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lasercom-twin",
        description="Digital twin of a small optical communication terminal.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("scenario", help="scenario file (TOML)")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--seed", type=_seed, help=f"run seed (overrides ${SEED_ENV})")
        p.add_argument("--format", choices=("csv", "json"), help="output format")

    common(sub.add_parser("run", help="simulate the scenario and write time series + summary"))
    common(sub.add_parser("passes", help="list visibility windows"))
    p = sub.add_parser("budget", help="print the link budget at one instant")
    common(p)
    p.add_argument("--at", type=float, required=True, metavar="T", help="time in seconds")
    common(sub.add_parser("calibrate-edfa", help="fit the amplifier's thermal derating"))
    return parser


def _write(path: Path, text: str) -> str:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return str(path)


def _cmd_run(args, cfg) -> list[str]:
    out = args.out or Path("out") / Path(args.scenario).stem
    summary = runner.run_scenario(cfg, out, args.format or "csv")
    for w in summary.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return list(summary.files)


def _cmd_passes(args, cfg) -> list[str]:
    windows = runner.passes(cfg)
    rows = [
        {"rise_s": p.rise, "set_s": p.set, "duration_s": p.duration, "max_elevation_rad": p.max_elevation}
        for p in windows
    ]
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    elif args.format == "csv" or args.out:
        cols = ("rise_s", "set_s", "duration_s", "max_elevation_rad")
        text = runner.table_csv(cols, {c: [r[c] for r in rows] for c in cols})
    else:
        lines = [f"{'rise_s':>12} {'set_s':>12} {'duration_s':>10} {'max_el_deg':>10}"]
        for p in windows:
            lines.append(
                f"{p.rise:12.3f} {p.set:12.3f} {p.duration:10.3f} {p.max_elevation * 57.29577951308232:10.3f}"
            )
        lines.append(f"{len(windows)} pass(es)")
        text = "\n".join(lines) + "\n"
    if args.out:
        return [_write(args.out / f"passes.{args.format or 'csv'}", text)]
    sys.stdout.write(text)
    return []


def _cmd_budget(args, cfg) -> list[str]:
    report = runner.instant_budget(cfg, args.at)
    if args.format == "json":
        text = json.dumps(report.to_dict(), indent=2) + "\n"
    elif args.format == "csv":
        rows = [(name, value) for name, value in report.terms]
        text = runner.table_csv(("term", "db"), {"term": [r[0] for r in rows], "db": [r[1] for r in rows]})
    else:
        text = report.format() + "\n"
    if args.out:
        return [_write(args.out / f"budget.{args.format or 'txt'}", text)]
    sys.stdout.write(text)
    return []


def _cmd_calibrate(args, cfg) -> list[str]:
    if cfg.edfa is None:
        raise ConfigError("scenario has no [edfa] section to calibrate")
    result = cfg.edfa.calibration()
    m = result.model
    floor = amplifier.guarantee(m, cfg.edfa.t_start_c, cfg.edfa.t1_s)
    data = {
        "p0_w": m.p0_w,
        "slope_w_per_c": m.slope_w_per_c,
        "tau_s": m.tau_s,
        "delta_t_ss_c": m.delta_t_ss_c,
        "t_ref_c": m.t_ref_c,
        "t_env_c": m.t_env_c,
        "t1_s": cfg.edfa.t1_s,
        "min_power_to_t1_w": floor,
        "margin_w": result.margin_w,
        "underdetermined": result.underdetermined,
        "free_parameters": list(result.free_parameters),
    }
    if args.format == "json":
        text = json.dumps(data, indent=2) + "\n"
    else:
        text = "".join(f"{k:<20} {v}\n" for k, v in data.items())
    if args.out:
        return [_write(args.out / f"edfa_calibration.{'json' if args.format == 'json' else 'txt'}", text)]
    sys.stdout.write(text)
    return []


_COMMANDS = {
    "run": _cmd_run,
    "passes": _cmd_passes,
    "budget": _cmd_budget,
    "calibrate-edfa": _cmd_calibrate,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        cfg = load_scenario(args.scenario)
        seed = args.seed
        if seed is None and os.environ.get(SEED_ENV):
            seed = _seed(os.environ[SEED_ENV])
        if seed is not None:
            cfg = with_seed(cfg, seed)
        paths = _COMMANDS[args.command](args, cfg)
    except (ConfigError, CalibrationError, argparse.ArgumentTypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (LasercomError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
