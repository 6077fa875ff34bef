"""`plots render --csv <file> --experiment <name> --out <img>`"""

from __future__ import annotations

import argparse
import sys

from .render import FigureSpec, RenderError, render_scaling


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots", description="scaling figures from bench CSVs")
    sub = parser.add_subparsers(dest="cmd", required=True)
    p = sub.add_parser("render", help="render one experiment's scaling figure")
    p.add_argument("--csv", required=True, help="bench CSV file")
    p.add_argument("--experiment", required=True)
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--metric", help="metric name (required when the "
                                    "experiment carries several)")
    p.add_argument("--expected-slope", type=float, default=None,
                   help="reference slope to draw alongside the fit")
    args = parser.parse_args(argv)

    spec = FigureSpec(input_csv=args.csv, experiment=args.experiment,
                      output=args.out, metric=args.metric,
                      expected_slope=args.expected_slope)
    try:
        slope, stderr = render_scaling(spec)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except RenderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"slope={slope!r} stderr={stderr!r}")
    print(f"wrote {args.out} and {args.out}.slope.txt")
    return 0


if __name__ == "__main__":
    sys.exit(main())
