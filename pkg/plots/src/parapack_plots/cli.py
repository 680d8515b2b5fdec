"""Command-line figure rendering.

Usage: plots --trace <csv> --kind <kind> --out <png>

Kinds: branch-currents and estimator-error read a simulation trace;
ocv and ocv-slope read the curve sample that parapack verify writes.
Exit codes: 0 success, 1 input data does not fit the requested figure,
2 usage error.
"""

from __future__ import annotations

import argparse
import sys

from .figures import (
    branch_current_figure,
    estimator_error_figure,
    ocv_figure,
    ocv_slope_figure,
    save_figure,
)
from .traces import PlotDataError, load_ocv_curve, load_trace

KINDS = ("branch-currents", "estimator-error", "ocv", "ocv-slope")


def render(trace_path, kind: str, out_path, title: str | None = None,
           dpi: int = 150) -> None:
    """Load the input, build the requested figure and write it."""
    if kind in ("ocv", "ocv-slope"):
        curve = load_ocv_curve(trace_path)
        fig = ocv_figure(curve, title) if kind == "ocv" \
            else ocv_slope_figure(curve, title)
    else:
        trace = load_trace(trace_path)
        fig = branch_current_figure(trace, title) if kind == "branch-currents" \
            else estimator_error_figure(trace, title)
    save_figure(fig, out_path, dpi=dpi)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render figures from parapack CSV outputs.",
    )
    parser.add_argument("--trace", required=True,
                        help="input CSV (trace or OCV curve sample)")
    parser.add_argument("--kind", required=True, choices=KINDS,
                        help="figure to render")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument("--title", help="figure title override")
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        render(args.trace, args.kind, args.out, title=args.title, dpi=args.dpi)
    except PlotDataError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    print("wrote %s" % args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
