"""Acceptance: the two headline figures on real simulator output.

Run with `pytest -v -s` (or `-rA`) to see the verdict lines.
"""

from beamjam_plots import SweepFrame, TraceFrame, build_sweep_figure, build_trace_figure
from beamjam_plots.cli import main_sweep, main_trace


def _report(name: str, ok: bool, detail: str) -> None:
    print(f"\n{name} {'PASS' if ok else 'FAIL'} — {detail}")
    assert ok, f"{name}: {detail}"


def test_s1_trace_figure(dense_trace, tmp_path, capsys):
    trace_csv, truth_csv = dense_trace
    out = tmp_path / "fig1.svg"
    rc = main_trace([str(trace_csv), str(truth_csv), "-o", str(out)])
    capsys.readouterr()

    frame = TraceFrame.load(trace_csv, truth_csv)
    fig = build_trace_figure(frame)
    panels = [ax for ax in fig.axes if ax.get_visible()]
    truth_counts = [
        sum(1 for l in ax.lines if l.get_gid() == "truth") for ax in panels
    ]
    log_ok = all(ax.get_yscale() == "log" for ax in panels)
    size = out.stat().st_size if out.is_file() else 0
    ok = rc == 0 and size > 0 and len(panels) == 6 and truth_counts == [6] * 6 and log_ok
    _report(
        "S1",
        ok,
        f"exit {rc}, {len(panels)} panels, truth lines per panel {truth_counts}, "
        f"log scale {log_ok}, wrote {size} bytes",
    )


def test_s2_sweep_figure(desk_sweep, tmp_path, capsys):
    out = tmp_path / "fig2.svg"
    rc = main_sweep([str(desk_sweep), "-o", str(out)])
    capsys.readouterr()

    fig = build_sweep_figure(SweepFrame.load(desk_sweep))
    ax_pd, ax_rmse = fig.axes
    pd_lines = [l for l in ax_pd.lines if l.get_gid() == "p_d"]
    rmse_lines = [l for l in ax_rmse.lines if l.get_gid() == "rmse"]

    # absent-RMSE rule, demonstrated on a doctored copy of the same file
    lines = desk_sweep.read_text().splitlines()
    target = next(i for i, ln in enumerate(lines) if i > 0 and ln.startswith("glrt-sci,"))
    cells = lines[target].split(",")
    cells[3] = ""
    lines[target] = ",".join(cells)
    doctored = tmp_path / "doctored.csv"
    doctored.write_text("\n".join(lines) + "\n")
    dfig = build_sweep_figure(SweepFrame.load(doctored))
    d_by_label = {l.get_label(): l for l in dfig.axes[1].lines if l.get_gid() == "rmse"}
    by_label = {l.get_label(): l for l in rmse_lines}
    full = len(by_label["glrt-sci"].get_xdata())
    dropped = len(d_by_label["glrt-sci"].get_xdata())

    size = out.stat().st_size if out.is_file() else 0
    ok = (
        rc == 0
        and size > 0
        and len(fig.axes) == 2
        and len(pd_lines) == 3
        and len(rmse_lines) == 3
        and dropped == full - 1
    )
    _report(
        "S2",
        ok,
        f"exit {rc}, 2 panels with {len(pd_lines)}/{len(rmse_lines)} series, "
        f"blanked RMSE cell drops its point ({full} -> {dropped}), wrote {size} bytes",
    )
