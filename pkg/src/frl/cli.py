"""Command-line entry point ``frl``."""

import argparse
import json
import os
import sys

import numpy as np

from .ckpt import ArchiveError, LayoutError, analyze_checkpoint, load_layout, load_tensor_archive
from .harness import Axes, ConfigError, Series, load_config, read_columns, render_plot, run_experiment
from .spectra import DEFAULT_THRESHOLD, spectrum_report

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2


def _err(msg):
    print(f"frl: {msg}", file=sys.stderr)


def cmd_run(args):
    try:
        config = load_config(args.config)
    except ConfigError as exc:
        _err(f"config error: {exc}")
        return EXIT_CONFIG
    if args.output_dir:
        config = type(config).from_dict({**config.to_dict(), "output_dir": args.output_dir})
    result = run_experiment(config)
    for row in result.rows:
        print(f"cell {row['cell']} lambda={row['lambda']:g} status={row['status']} pseudo_rank={row['final_pseudo_rank']:g}")
    print(f"summary: {result.summary_json}")
    if result.diverged:
        _err("at least one cell diverged")
    return result.exit_code


def cmd_plot(args):
    try:
        cols = read_columns(args.trace)
    except (OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    x = cols.get("step")
    if args.y in ("s", "singular_values"):
        names = sorted((c for c in cols if c[:1] == "s" and c[1:].isdigit()), key=lambda c: int(c[1:]))
    else:
        names = [args.y]
    missing = [n for n in names if n not in cols]
    if x is None or not names or missing:
        _err(f"unknown column {(missing or [args.y])[0]!r}; available: {', '.join(cols)}")
        return EXIT_CONFIG
    series = [Series(n, tuple(x), tuple(cols[n])) for n in names]
    out = args.out or os.path.splitext(args.trace)[0] + f"_{args.y}.svg"
    try:
        render_plot(series, Axes(x_label="step", y_label=args.y, log_y=args.log, title=args.title or ""), out)
    except ValueError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    print(out)
    return EXIT_OK


def cmd_spectrum(args):
    try:
        m = np.loadtxt(args.matrix, delimiter=",", ndmin=2, dtype=np.float64)
        report = spectrum_report(m, args.threshold)
    except (OSError, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    print(json.dumps(report.to_dict(), sort_keys=True))
    return EXIT_OK


def cmd_analyze(args):
    try:
        layout = load_layout(args.layout)
        archive = load_tensor_archive(args.archive)
        result = analyze_checkpoint(archive, layout, args.threshold, args.out)
    except (ArchiveError, LayoutError, KeyError, ValueError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    for name in sorted(result.paths):
        print(result.paths[name])
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # exit code 2 is reserved for diverged cells
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="frl", description="Factorized-regularization laboratory")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="run a lambda sweep from a JSON config")
    p.add_argument("config")
    p.add_argument("--output-dir", help="override the config's output_dir")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("plot", help="render one trace column as SVG")
    p.add_argument("trace")
    p.add_argument("--y", required=True, help="column name, or 's' for all singular values")
    p.add_argument("--log", action="store_true", help="logarithmic y axis")
    p.add_argument("--out", help="output SVG path")
    p.add_argument("--title")
    p.set_defaults(func=cmd_plot)

    p = sub.add_parser("spectrum", help="spectrum report of a CSV matrix as JSON")
    p.add_argument("matrix")
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("analyze", help="attention-head diagnostics for a weight archive")
    p.add_argument("archive")
    p.add_argument("--layout", required=True)
    p.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
