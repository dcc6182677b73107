"""Figure structure: panels, series, markers, floors, CLI round trips."""

import hashlib
import re

import numpy as np
import pytest

from beamjam_plots import (
    METRIC_FLOOR,
    SweepFrame,
    TraceFrame,
    build_sweep_figure,
    build_trace_figure,
)
from beamjam_plots.cli import main_sweep, main_trace
from test_frames import (
    SWEEP_HEADER,
    TRACE_HEADER,
    _sweep_file,
    _trace_lines,
    _truth_file,
    _write,
)


def _lines(ax, gid):
    return [l for l in ax.lines if l.get_gid() == gid]


def _trace_frame(tmp_path, curves, truths=(0.25, -0.5), L=5):
    trace = _write(tmp_path, "trace.csv", [TRACE_HEADER] + _trace_lines(curves, L=L))
    return TraceFrame.load(trace, _truth_file(tmp_path, truths))


FULL_SWEEP_ROWS = [
    f"{det},{jnr},{0.1 + 0.04 * i + 0.15 * j},{0.02 - 0.001 * j},500,{8.0 + i}"
    for i, det in enumerate(["glrt-sci", "msd-is", "msd-icm"])
    for j, jnr in enumerate([0.0, 5.0, 10.0, 15.0, 20.0])
]


# ----- trace figures -----

def test_trace_panels_and_artists(tmp_path):
    frame = _trace_frame(
        tmp_path, {("glrt-sci", 1): 2, ("glrt-sci", 2): None, ("msd-is", 1): 0}
    )
    fig = build_trace_figure(frame)
    panels = [ax for ax in fig.axes if ax.get_visible()]
    assert len(panels) == 2

    first, second = panels
    assert len(_lines(first, "metric")) == 2
    assert len(_lines(first, "truth")) == 2
    assert len(_lines(first, "estimate")) == 2
    assert len(_lines(second, "metric")) == 1
    assert len(_lines(second, "estimate")) == 0
    assert all(ax.get_yscale() == "log" for ax in panels)
    assert all(l.get_linestyle() == "--" for l in _lines(first, "truth"))
    assert first.get_legend() is not None
    truth_xs = sorted(l.get_xdata()[0] for l in _lines(first, "truth"))
    assert truth_xs == [-0.5, 0.25]


def test_trace_zero_metric_is_floored(tmp_path):
    thetas = np.linspace(-1, 1, 5)
    rows = [f"glrt-sci,1,{l},{float(thetas[l])!r},0.0,0" for l in range(5)]
    trace = _write(tmp_path, "trace.csv", [TRACE_HEADER] + rows)
    frame = TraceFrame.load(trace, _truth_file(tmp_path))
    fig = build_trace_figure(frame)
    (line,) = _lines(fig.axes[0], "metric")
    assert np.all(line.get_ydata() == METRIC_FLOOR)


def test_trace_single_panel(tmp_path):
    frame = _trace_frame(tmp_path, {("glrt-sci", 1): None})
    fig = build_trace_figure(frame)
    panels = [ax for ax in fig.axes if ax.get_visible()]
    assert len(panels) == 1
    assert panels[0].get_xlabel() != ""
    assert panels[0].get_legend() is None  # single detector, no legend


def test_trace_without_estimates_keeps_truth_lines(tmp_path):
    frame = _trace_frame(tmp_path, {("glrt-sci", 1): None, ("glrt-sci", 2): None})
    fig = build_trace_figure(frame)
    for ax in fig.axes:
        assert len(_lines(ax, "estimate")) == 0
        assert len(_lines(ax, "truth")) == 2


def test_trace_rebuild_has_same_shape(tmp_path):
    frame = _trace_frame(tmp_path, {("glrt-sci", 1): 1, ("glrt-sci", 2): None})
    a, b = build_trace_figure(frame), build_trace_figure(frame)
    assert len(a.axes) == len(b.axes)
    assert tuple(a.get_size_inches()) == tuple(b.get_size_inches())


def test_trace_estimate_marker_sits_on_the_curve(tmp_path):
    frame = _trace_frame(tmp_path, {("glrt-sci", 1): 3})
    fig = build_trace_figure(frame)
    (marker,) = _lines(fig.axes[0], "estimate")
    (curve,) = _lines(fig.axes[0], "metric")
    assert marker.get_xdata()[0] == frame.panel(1)[0].estimate_theta
    assert marker.get_ydata()[0] == curve.get_ydata()[3]


# ----- sweep figures -----

def test_sweep_two_panels_three_series(tmp_path):
    frame = SweepFrame.load(_sweep_file(tmp_path, FULL_SWEEP_ROWS))
    fig = build_sweep_figure(frame)
    assert len(fig.axes) == 2
    ax_pd, ax_rmse = fig.axes
    assert len(_lines(ax_pd, "p_d")) == 3
    assert len(_lines(ax_rmse, "rmse")) == 3
    assert all(len(l.get_xdata()) == 5 for l in _lines(ax_pd, "p_d"))
    assert all(len(l.get_xdata()) == 5 for l in _lines(ax_rmse, "rmse"))
    assert len(ax_pd.get_legend().get_texts()) == 3
    assert len(ax_rmse.get_legend().get_texts()) == 3


def test_sweep_absent_rmse_omits_the_point(tmp_path):
    rows = list(FULL_SWEEP_ROWS)
    cells = rows[2].split(",")
    cells[3] = ""
    rows[2] = ",".join(cells)
    frame = SweepFrame.load(_sweep_file(tmp_path, rows))
    fig = build_sweep_figure(frame)
    by_label = {l.get_label(): l for l in _lines(fig.axes[1], "rmse")}
    assert len(by_label["glrt-sci"].get_xdata()) == 4
    assert 10.0 not in by_label["glrt-sci"].get_xdata()
    pd_by_label = {l.get_label(): l for l in _lines(fig.axes[0], "p_d")}
    assert len(pd_by_label["glrt-sci"].get_xdata()) == 5


def test_sweep_single_detector_single_legend_entry(tmp_path):
    rows = [r for r in FULL_SWEEP_ROWS if r.startswith("msd-is,")]
    fig = build_sweep_figure(SweepFrame.load(_sweep_file(tmp_path, rows)))
    assert [t.get_text() for t in fig.axes[0].get_legend().get_texts()] == ["msd-is"]


# ----- CLI round trips -----

def _small_trace_files(tmp_path):
    trace = _write(
        tmp_path, "trace.csv", [TRACE_HEADER] + _trace_lines({("glrt-sci", 1): 2})
    )
    return trace, _truth_file(tmp_path)


def test_cli_trace_writes_svg_and_leaves_inputs_alone(tmp_path, capsys):
    trace, truth = _small_trace_files(tmp_path)
    before = [hashlib.sha256(p.read_bytes()).hexdigest() for p in (trace, truth)]
    out = tmp_path / "fig.svg"
    assert main_trace([str(trace), str(truth), "-o", str(out)]) == 0
    assert out.stat().st_size > 0
    assert b"<svg" in out.read_bytes()[:1024]
    after = [hashlib.sha256(p.read_bytes()).hexdigest() for p in (trace, truth)]
    assert before == after
    assert "wrote" in capsys.readouterr().out


def test_cli_trace_png_flag(tmp_path):
    trace, truth = _small_trace_files(tmp_path)
    out = tmp_path / "fig.png"
    assert main_trace([str(trace), str(truth), "-o", str(out), "--png"]) == 0
    assert out.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_cli_trace_rerun_same_dimensions(tmp_path):
    trace, truth = _small_trace_files(tmp_path)
    outs = [tmp_path / "a.svg", tmp_path / "b.svg"]
    for out in outs:
        assert main_trace([str(trace), str(truth), "-o", str(out)]) == 0
    dims = [
        re.search(rb'<svg[^>]*width="([^"]+)"[^>]*height="([^"]+)"', o.read_bytes()).groups()
        for o in outs
    ]
    assert dims[0] == dims[1]


def test_cli_sweep_happy(tmp_path, capsys):
    sweep = _sweep_file(tmp_path, FULL_SWEEP_ROWS)
    out = tmp_path / "fig2.svg"
    assert main_sweep([str(sweep), "-o", str(out)]) == 0
    assert out.stat().st_size > 0
    assert "wrote" in capsys.readouterr().out


def test_cli_sweep_bad_p_d_no_figure(tmp_path, capsys):
    rows = ["glrt-sci,0.0,1.2,0.01,500,8.1"]
    sweep = _sweep_file(tmp_path, rows)
    out = tmp_path / "fig2.svg"
    assert main_sweep([str(sweep), "-o", str(out)]) == 2
    assert not out.exists()
    err = capsys.readouterr().err
    assert "row 2" in err and "p_d" in err


def test_cli_trace_malformed_csv_exit_2(tmp_path, capsys):
    trace = _write(tmp_path, "trace.csv", [TRACE_HEADER, "glrt-sci,1,0,0.0,oops,0"])
    out = tmp_path / "fig.svg"
    assert main_trace([str(trace), str(_truth_file(tmp_path)), "-o", str(out)]) == 2
    assert not out.exists()
    assert "row 2" in capsys.readouterr().err
