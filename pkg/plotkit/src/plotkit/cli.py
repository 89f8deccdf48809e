"""plotkit command line: ``plotkit <figure_kind> --csv PATH --out PATH``.

Figure kinds: alloc-curves, profile-bars, noise-sweep, threshold-bars,
bound-margins. Exit codes: 0 on success, 1 on schema mismatch or bad usage.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import PlotJob, render
from .schemas import SchemaError

KINDS = {
    "alloc-curves": "alloc_curves",
    "profile-bars": "profile_bars",
    "noise-sweep": "noise_sweep",
    "threshold-bars": "threshold_bars",
    "bound-margins": "bound_margins",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> _Parser:
    parser = _Parser(prog="plotkit", description=__doc__)
    parser.add_argument("figure_kind", choices=sorted(KINDS))
    parser.add_argument("--csv", required=True, help="experiment CSV to read")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", help="title override")
    parser.add_argument("--linear-y", action="store_true",
                        help="use a linear error axis instead of log scale")
    return parser


def cli_main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    job = PlotJob(
        csv_path=args.csv,
        figure_kind=KINDS[args.figure_kind],
        output_image_path=args.out,
        title=args.title,
        log_y=not args.linear_y,
    )
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    try:
        info = render(job)
    except SchemaError as exc:
        print(f"plotkit: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {info.path} ({len(info.series_labels)} series)")
    return 0


def main() -> None:
    sys.exit(cli_main())
