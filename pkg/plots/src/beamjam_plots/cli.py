"""plot-trace / plot-sweep entry points.

Exit codes: 0 success (the output image exists and is non-empty), 2 schema
or usage error. Inputs are never modified. SVG by default, PNG with --png.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import matplotlib.pyplot as plt

from .figures import build_sweep_figure, build_trace_figure
from .frames import SchemaError, SweepFrame, TraceFrame


def _save(fig: plt.Figure, out: str, png: bool) -> None:
    fig.savefig(out, format="png" if png else "svg")
    plt.close(fig)


def main_trace(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-trace",
        description="Render per-iteration decision-metric traces from a trace CSV "
        "plus its truth CSV.",
    )
    parser.add_argument("trace_csv", help="trace.csv written by the simulator")
    parser.add_argument("truth_csv", help="trace_truth.csv written alongside it")
    parser.add_argument("-o", "--out", required=True, help="output image path")
    parser.add_argument("--png", action="store_true", help="write PNG instead of SVG")
    args = parser.parse_args(argv)
    try:
        frame = TraceFrame.load(args.trace_csv, args.truth_csv)
        _save(build_trace_figure(frame), args.out, args.png)
    except (SchemaError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {args.out} ({len(frame.iterations)} panel(s), {len(frame.truths)} true angle(s))")
    return 0


def main_sweep(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="plot-sweep",
        description="Render P_D and conditional RMSE versus JNR from a sweep CSV.",
    )
    parser.add_argument("sweep_csv", help="sweep.csv written by the simulator")
    parser.add_argument("-o", "--out", required=True, help="output image path")
    parser.add_argument("--png", action="store_true", help="write PNG instead of SVG")
    args = parser.parse_args(argv)
    try:
        frame = SweepFrame.load(args.sweep_csv)
        _save(build_sweep_figure(frame), args.out, args.png)
    except (SchemaError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    print(f"wrote {args.out} ({len(frame.detectors)} detector(s))")
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main_trace())
