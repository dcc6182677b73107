"""Batch figure generation from the simulator's trace and sweep CSV files."""

from .figures import METRIC_FLOOR, build_sweep_figure, build_trace_figure
from .frames import (
    SchemaError,
    SweepFrame,
    SweepPoint,
    TraceCurve,
    TraceFrame,
)

__version__ = "0.1.0"

__all__ = [
    "METRIC_FLOOR",
    "SchemaError",
    "SweepFrame",
    "SweepPoint",
    "TraceCurve",
    "TraceFrame",
    "build_sweep_figure",
    "build_trace_figure",
]
