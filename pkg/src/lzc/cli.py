"""Command line: ``lzc run``, ``lzc validate`` and ``lzc preset``.

Exit codes: 0 success, 1 configuration error, 2 validation failure,
3 numerical failure at a sweep point.
"""
from __future__ import annotations

import argparse
import os
import sys

from . import config as config_mod
from . import sweep
from .errors import ConfigError
from .plot import write_svg

EXIT_OK, EXIT_CONFIG, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2, 3

PRESETS = {
    "fig3a": dict(text="""\
beta = 2.02
k = 1.57, 12.4
g = 0.0, 0.425
sweep = g[0]
sweep_start = 0
sweep_stop = 4
sweep_steps = 41
""", xlabel="g1"),
    "fig3b": dict(text="""\
beta = 2.02
k = 0.27, 0.52
g = 3.4, 1.84
sweep = k[1]-k[0]
sweep_start = 0.25
sweep_stop = 10
sweep_steps = 40
""", xlabel="k2 - k1"),
}

EPILOG = "config grammar:\n" + config_mod.__doc__.split("Grammar,", 1)[1] \
    + "\ncsv columns:\n" + sweep.__doc__.split("in order", 1)[1].split(":", 1)[1] \
    + "\nLZC_THREADS caps the number of worker processes used for sweep points."


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lzc", description="Transition probabilities for a level crossing a Coulomb band.",
        epilog=EPILOG, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (("run", "evaluate a config (mode from the file)"),
                            ("validate", "compare analytic and numerical values")):
        p = sub.add_parser(name, help=help_text, epilog=EPILOG,
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        p.add_argument("config", help="path to a key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry (repeatable)")
        p.add_argument("--csv", help="CSV output path (default: stdout)")
        p.add_argument("--svg", help="SVG plot output path")

    p = sub.add_parser("preset", help="reproduce a figure sweep with validation")
    p.add_argument("name", choices=sorted(PRESETS))
    p.add_argument("--out", required=True, help="output directory for CSV and SVG")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a preset entry (repeatable)")
    return parser


def _plot(path, cfg, cols, rows, xlabel):
    x = [row["sweep_value"] for row in rows]
    skip = {"sweep_value", "err_estimate"}
    series = {c: [row[c] for row in rows] for c in cols if c not in skip}
    markers = {c for c in cols if c.endswith("_avg") or c.endswith("_numeric")}
    write_svg(path, x, series, title="Transition probabilities to level 0",
              xlabel=xlabel, ylabel="probability", markers=markers)


def execute(cfg, csv_path=None, svg_path=None, out=None, xlabel=None):
    """Run ``cfg`` and write outputs; returns an exit code."""
    out = sys.stdout if out is None else out
    try:
        rows = sweep.run_sweep(cfg)
    except sweep.PointError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    cols = sweep.columns(cfg)
    text = sweep.to_csv(cols, rows)
    csv_path = csv_path or cfg.csv
    if csv_path:
        with open(csv_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        out.write(text)
    svg_path = svg_path or cfg.svg
    if svg_path:
        if cfg.sweep is None:
            print("warning: no sweep configured, SVG skipped", file=sys.stderr)
        else:
            _plot(svg_path, cfg, cols, rows, xlabel or cfg.sweep.path)
    if cfg.mode == "validate":
        checks = sweep.validation_checks(cfg, rows)
        report = out if csv_path else sys.stderr
        print(sweep.format_checks(checks), file=report)
        failed = sum(not c.passed for c in checks)
        print(f"{len(checks) - failed}/{len(checks)} checks passed", file=report)
        if failed:
            return EXIT_VALIDATION
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "preset":
            preset = PRESETS[args.name]
            cfg = config_mod.load_config(preset["text"], f"preset {args.name}",
                                         ["mode=validate", *args.set])
            os.makedirs(args.out, exist_ok=True)
            base = os.path.join(args.out, args.name)
            return execute(cfg, base + ".csv", base + ".svg", xlabel=preset["xlabel"])
        with open(args.config, encoding="utf-8") as fh:
            text = fh.read()
        overrides = list(args.set)
        if args.command == "validate":
            overrides.append("mode=validate")
        cfg = config_mod.load_config(text, args.config, overrides)
        return execute(cfg, args.csv, args.svg)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
