"""CSV readers for the simulator's trace and sweep outputs.

Schemas are enforced up front: the header must match exactly, every cell
must parse, and any violation raises SchemaError naming the file and the
1-based row. Figure builders only ever see validated frames.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TRACE_HEADER = ["detector", "iteration", "grid_index", "theta", "metric", "is_estimate"]
TRUTH_HEADER = ["jammer_index", "theta_true"]
SWEEP_HEADER = ["detector", "jnr_db", "p_d", "rmse", "n_trials", "kappa"]


class SchemaError(ValueError):
    """Input CSV rejected; the message names the file and row."""


def _fail(path: Path, row_no: int, msg: str) -> None:
    raise SchemaError(f"{path}, row {row_no}: {msg}")


def _read_rows(path: Path, header: list[str]) -> list[tuple[int, list[str]]]:
    """All data rows as (1-based row number, cells), header validated."""
    if not path.is_file():
        raise SchemaError(f"{path}: file not found")
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise SchemaError(f"{path}: empty file, expected header {','.join(header)}")
    if rows[0] != header:
        _fail(path, 1, f"bad header {','.join(rows[0])!r}, expected {','.join(header)!r}")
    out = []
    for i, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            _fail(path, i, f"expected {len(header)} columns, got {len(row)}")
        out.append((i, row))
    return out


def _to_int(path: Path, row_no: int, name: str, cell: str, lo: int) -> int:
    try:
        v = int(cell)
    except ValueError:
        _fail(path, row_no, f"{name}: expected an integer, got {cell!r}")
    if v < lo:
        _fail(path, row_no, f"{name}: must be >= {lo}, got {v}")
    return v


def _to_float(path: Path, row_no: int, name: str, cell: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        _fail(path, row_no, f"{name}: expected a number, got {cell!r}")
    if not math.isfinite(v):
        _fail(path, row_no, f"{name}: must be finite, got {cell!r}")
    return v


# ----- Trace frame -----

@dataclass(frozen=True)
class TraceCurve:
    """One detector's metric over the full grid at one loop iteration."""

    detector: str
    iteration: int
    theta: np.ndarray          # (L,) in grid order
    metric: np.ndarray         # (L,)
    estimate_theta: float | None   # accepted angle, None if the scan was rejected


@dataclass(frozen=True)
class TraceFrame:
    curves: tuple[TraceCurve, ...]   # sorted by (detector, iteration)
    truths: tuple[float, ...]        # true jammer angles
    grid_size: int

    @property
    def detectors(self) -> tuple[str, ...]:
        return tuple(sorted({c.detector for c in self.curves}))

    @property
    def iterations(self) -> tuple[int, ...]:
        return tuple(sorted({c.iteration for c in self.curves}))

    def panel(self, iteration: int) -> tuple[TraceCurve, ...]:
        return tuple(c for c in self.curves if c.iteration == iteration)

    @classmethod
    def load(cls, trace_path: str | Path, truth_path: str | Path) -> "TraceFrame":
        trace_path, truth_path = Path(trace_path), Path(truth_path)

        groups: dict[tuple[str, int], list[tuple[int, int, float, float, str]]] = {}
        for row_no, row in _read_rows(trace_path, TRACE_HEADER):
            det = row[0]
            if not det:
                _fail(trace_path, row_no, "detector: must be non-empty")
            it = _to_int(trace_path, row_no, "iteration", row[1], lo=1)
            gi = _to_int(trace_path, row_no, "grid_index", row[2], lo=0)
            theta = _to_float(trace_path, row_no, "theta", row[3])
            if not -1.0 <= theta <= 1.0:
                _fail(trace_path, row_no, f"theta: must lie in [-1, 1], got {theta}")
            metric = _to_float(trace_path, row_no, "metric", row[4])
            if row[5] not in ("0", "1"):
                _fail(trace_path, row_no, f"is_estimate: expected 0 or 1, got {row[5]!r}")
            groups.setdefault((det, it), []).append((row_no, gi, theta, metric, row[5]))
        if not groups:
            raise SchemaError(f"{trace_path}: no data rows")

        L = len(next(iter(groups.values())))
        curves = []
        for (det, it), rows in sorted(groups.items()):
            if len(rows) != L:
                raise SchemaError(
                    f"{trace_path}: detector {det!r} iteration {it} has {len(rows)} rows, "
                    f"expected {L} (one per grid point)"
                )
            indices = [gi for _, gi, _, _, _ in rows]
            if sorted(indices) != list(range(L)):
                raise SchemaError(
                    f"{trace_path}: detector {det!r} iteration {it} grid indices are not "
                    f"exactly 0..{L - 1}"
                )
            rows = sorted(rows, key=lambda r: r[1])
            estimates = [theta for _, _, theta, _, flag in rows if flag == "1"]
            if len(estimates) > 1:
                raise SchemaError(
                    f"{trace_path}: detector {det!r} iteration {it} marks "
                    f"{len(estimates)} estimates, at most 1 allowed"
                )
            curves.append(
                TraceCurve(
                    detector=det,
                    iteration=it,
                    theta=np.array([t for _, _, t, _, _ in rows]),
                    metric=np.array([m for _, _, _, m, _ in rows]),
                    estimate_theta=estimates[0] if estimates else None,
                )
            )

        truths = []
        for row_no, row in _read_rows(truth_path, TRUTH_HEADER):
            _to_int(truth_path, row_no, "jammer_index", row[0], lo=1)
            t = _to_float(truth_path, row_no, "theta_true", row[1])
            if not -1.0 <= t <= 1.0:
                _fail(truth_path, row_no, f"theta_true: must lie in [-1, 1], got {t}")
            truths.append(t)

        return cls(curves=tuple(curves), truths=tuple(truths), grid_size=L)


# ----- Sweep frame -----

@dataclass(frozen=True)
class SweepPoint:
    detector: str
    jnr_db: float
    p_d: float
    rmse: float | None   # None when the input cell is empty (no matched slot)
    n_trials: int
    kappa: float


@dataclass(frozen=True)
class SweepFrame:
    points: tuple[SweepPoint, ...]   # file order

    @property
    def detectors(self) -> tuple[str, ...]:
        seen: list[str] = []
        for p in self.points:
            if p.detector not in seen:
                seen.append(p.detector)
        return tuple(seen)

    def series(self, detector: str) -> tuple[SweepPoint, ...]:
        return tuple(
            sorted((p for p in self.points if p.detector == detector), key=lambda p: p.jnr_db)
        )

    @classmethod
    def load(cls, path: str | Path) -> "SweepFrame":
        path = Path(path)
        points = []
        seen: dict[tuple[str, float], int] = {}
        for row_no, row in _read_rows(path, SWEEP_HEADER):
            det = row[0]
            if not det:
                _fail(path, row_no, "detector: must be non-empty")
            jnr = _to_float(path, row_no, "jnr_db", row[1])
            if (det, jnr) in seen:
                _fail(
                    path, row_no,
                    f"duplicate (detector, jnr_db) = ({det!r}, {jnr}), first seen at "
                    f"row {seen[(det, jnr)]}",
                )
            seen[(det, jnr)] = row_no
            p_d = _to_float(path, row_no, "p_d", row[2])
            if not 0.0 <= p_d <= 1.0:
                _fail(path, row_no, f"p_d: must lie in [0, 1], got {p_d}")
            if row[3] == "":
                rmse = None
            else:
                rmse = _to_float(path, row_no, "rmse", row[3])
                if rmse < 0.0:
                    _fail(path, row_no, f"rmse: must be >= 0, got {rmse}")
            n_trials = _to_int(path, row_no, "n_trials", row[4], lo=1)
            kappa = _to_float(path, row_no, "kappa", row[5])
            points.append(
                SweepPoint(detector=det, jnr_db=jnr, p_d=p_d, rmse=rmse, n_trials=n_trials, kappa=kappa)
            )
        if not points:
            raise SchemaError(f"{path}: no data rows")
        return cls(points=tuple(points))
