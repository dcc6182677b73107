"""Figure builders: per-iteration metric traces and P_D/RMSE-vs-JNR curves.

Batch rendering only — the Agg backend is forced at import. Every artist
carries a gid ("metric", "estimate", "truth", "p_d", "rmse") so the rendered
series can be inspected programmatically.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .frames import SweepFrame, TraceFrame

# log-scale floor: the literal GLRT metric reaches 0 exactly
METRIC_FLOOR = 1e-6


def build_trace_figure(frame: TraceFrame) -> plt.Figure:
    """One panel per loop iteration; log-scale metric curves, dashed vertical
    lines at the true angles, a marker on each accepted estimate."""
    iterations = frame.iterations
    ncols = 2 if len(iterations) > 1 else 1
    nrows = math.ceil(len(iterations) / ncols)
    fig, axes = plt.subplots(
        nrows, ncols, figsize=(4.4 * ncols, 2.4 * nrows), sharex=True, squeeze=False
    )
    flat = list(axes.flat)
    for ax in flat[len(iterations):]:
        ax.set_visible(False)

    for ax, it in zip(flat, iterations):
        for curve in frame.panel(it):
            y = np.maximum(curve.metric, METRIC_FLOOR)
            line, = ax.plot(curve.theta, y, lw=1.0, label=curve.detector, gid="metric")
            if curve.estimate_theta is not None:
                k = int(np.argmin(np.abs(curve.theta - curve.estimate_theta)))
                ax.plot(
                    [curve.estimate_theta], [y[k]],
                    marker="v", ms=7, ls="none", color=line.get_color(), gid="estimate",
                )
        for t in frame.truths:
            ax.axvline(t, ls="--", lw=0.8, color="0.35", gid="truth")
        ax.set_yscale("log")
        ax.set_title(f"iteration {it}", fontsize=9)
        ax.set_ylabel("metric", fontsize=8)
        ax.tick_params(labelsize=8)
    for ax in flat[max(len(iterations) - ncols, 0):len(iterations)]:
        ax.set_xlabel("spatial angle", fontsize=8)
    if len(frame.detectors) > 1:
        flat[0].legend(fontsize=7)
    fig.tight_layout()
    return fig


def build_sweep_figure(frame: SweepFrame) -> plt.Figure:
    """Two panels: detection probability and conditional RMSE versus JNR,
    one line per detector. Points with absent RMSE are omitted, not zeroed."""
    fig, (ax_pd, ax_rmse) = plt.subplots(1, 2, figsize=(9.2, 3.4))
    for det in frame.detectors:
        pts = frame.series(det)
        ax_pd.plot(
            [p.jnr_db for p in pts], [p.p_d for p in pts],
            marker="o", ms=4, label=det, gid="p_d",
        )
        with_rmse = [p for p in pts if p.rmse is not None]
        ax_rmse.plot(
            [p.jnr_db for p in with_rmse], [p.rmse for p in with_rmse],
            marker="o", ms=4, label=det, gid="rmse",
        )
    ax_pd.set_xlabel("JNR (dB)")
    ax_pd.set_ylabel("P_D")
    ax_pd.set_ylim(-0.02, 1.02)
    ax_pd.legend(fontsize=8)
    ax_rmse.set_xlabel("JNR (dB)")
    ax_rmse.set_ylabel("RMSE (spatial angle)")
    ax_rmse.legend(fontsize=8)
    for ax in (ax_pd, ax_rmse):
        ax.grid(True, lw=0.3, alpha=0.5)
    fig.tight_layout()
    return fig
