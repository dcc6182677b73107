"""Command-line front end: calibrate, trace, sweep, selftest.

All data outputs (thresholds.json, trace.csv, trace_truth.csv, sweep.csv) are
byte-deterministic functions of (config, seed, code version); floats are
written in shortest round-trip form. manifest.json additionally records
wall-clock timestamps and is the one documented exception to byte identity —
its sha256 list certifies the data files instead. Field-by-field formats live
in docs/formats.md.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import ConfigError, ExperimentConfig, load_config
from .evaluation import (
    MissingThresholdError,
    ThresholdEntry,
    ThresholdTable,
    TraceRun,
    calibrate_thresholds,
    run_sweep,
    run_trace,
)
from .selftest import run_selftest

THRESHOLDS_FILE = "thresholds.json"
TRACE_FILE = "trace.csv"
TRACE_TRUTH_FILE = "trace_truth.csv"
SWEEP_FILE = "sweep.csv"
MANIFEST_FILE = "manifest.json"


def _fmt(x: float) -> str:
    """Shortest decimal that round-trips the float."""
    return repr(float(x))


def _utc_now() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _write_manifest(out_dir: Path, command: str, cfg: ExperimentConfig, seed: int, started: str,
                    outputs: list[str] | None) -> None:
    doc = {
        "schema": "beamjam-manifest-v1",
        "command": command,
        "status": "running" if outputs is None else "complete",
        "code_version": __version__,
        "seed": seed,
        "config": cfg.to_json_dict(),
        "started_utc": started,
        "finished_utc": None if outputs is None else _utc_now(),
        "outputs": [],
    }
    if outputs:
        for name in outputs:
            data = (out_dir / name).read_bytes()
            doc["outputs"].append(
                {"path": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)}
            )
    (out_dir / MANIFEST_FILE).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


# ----- Subcommands -----

def cmd_calibrate(cfg: ExperimentConfig, seed: int, out_dir: Path, threads: int) -> int:
    kappas = calibrate_thresholds(
        cfg,
        cfg.detection.detectors,
        cfg.detection.p_f,
        cfg.run.n_calib_trials,
        seed,
        threads=threads,
    )
    table = ThresholdTable.empty()
    fp = cfg.fingerprint()
    for det in cfg.detection.detectors:
        table.put(
            ThresholdEntry(
                detector=det,
                fingerprint=fp,
                p_f=cfg.detection.p_f,
                kappa=kappas[det],
                n_trials=cfg.run.n_calib_trials,
                seed=seed,
            )
        )
    table.save(out_dir / THRESHOLDS_FILE)
    for det in cfg.detection.detectors:
        print(f"calibrated {det}: kappa={_fmt(kappas[det])} "
              f"(p_f={_fmt(cfg.detection.p_f)}, n={cfg.run.n_calib_trials})")
    print(f"wrote {out_dir / THRESHOLDS_FILE}")
    return 0


def _trace_rows(trace: TraceRun, grid_points) -> list[list[str]]:
    rows: list[list[str]] = []
    for det in sorted(trace.results):
        res = trace.results[det]
        accepted = {j_idx: j.grid_index for j_idx, j in enumerate(res.jammers)}
        for it, metric in enumerate(res.traces):
            est_idx = accepted.get(it, -1)
            for l, value in enumerate(metric):
                rows.append(
                    [
                        det,
                        str(it + 1),
                        str(l),
                        _fmt(grid_points[l]),
                        _fmt(value),
                        "1" if l == est_idx else "0",
                    ]
                )
    return rows


def cmd_trace(cfg: ExperimentConfig, seed: int, out_dir: Path, threads: int) -> int:
    table = ThresholdTable.load(out_dir / THRESHOLDS_FILE)
    trace = run_trace(cfg, table, seed)
    from .glrt import Grid

    grid = Grid.uniform(cfg.detection.grid_L)
    _write_csv(
        out_dir / TRACE_FILE,
        ["detector", "iteration", "grid_index", "theta", "metric", "is_estimate"],
        _trace_rows(trace, grid.points),
    )
    truth_rows = [
        [str(j + 1), _fmt(jam.theta)] for j, jam in enumerate(trace.scenario.jammers)
    ]
    _write_csv(out_dir / TRACE_TRUTH_FILE, ["jammer_index", "theta_true"], truth_rows)
    for det in sorted(trace.results):
        res = trace.results[det]
        print(f"{det}: {len(res.jammers)} detection(s) in {res.iterations_run} iteration(s), "
              f"stopped by {res.stopped_by}")
    print(f"wrote {out_dir / TRACE_FILE} and {out_dir / TRACE_TRUTH_FILE}")
    return 0


def cmd_sweep(cfg: ExperimentConfig, seed: int, out_dir: Path, threads: int) -> int:
    jnr_points = cfg.jnr_points_db
    if not jnr_points:
        raise ConfigError("scenario: sweep needs jnr_db or jnr_list_db")
    table = ThresholdTable.load(out_dir / THRESHOLDS_FILE)
    result = run_sweep(
        cfg, jnr_points, cfg.detection.detectors, table, seed, threads=threads
    )
    rows = [
        [
            r.detector,
            _fmt(r.jnr_db),
            _fmt(r.p_d) if r.p_d is not None else "",
            _fmt(r.rmse) if r.rmse is not None else "",
            str(r.n_trials),
            _fmt(r.kappa),
        ]
        for r in result.rows
    ]
    _write_csv(
        out_dir / SWEEP_FILE,
        ["detector", "jnr_db", "p_d", "rmse", "n_trials", "kappa"],
        rows,
    )
    print(f"swept {len(jnr_points)} JNR point(s) x {len(cfg.detection.detectors)} detector(s), "
          f"{cfg.run.n_trials} trials each")
    print(f"wrote {out_dir / SWEEP_FILE}")
    return 0


# ----- Entry point -----

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamjam",
        description="Joint detection and angle estimation of multiple jammers "
        "in a beamspace massive-MIMO uplink.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("calibrate", "Monte Carlo CFAR threshold calibration"),
        ("trace", "single seeded trial, per-iteration grid traces"),
        ("sweep", "Monte Carlo P_D/RMSE sweep over JNR points"),
        ("selftest", "run the built-in invariant suites"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="path to the experiment config JSON")
        p.add_argument("--seed", type=int, help="master seed override (u64)")
        p.add_argument("--out", help="output directory override")
        p.add_argument("--threads", type=int, default=1, help="worker processes for trials")
        if name == "selftest":
            p.add_argument("--inject-fault", help=argparse.SUPPRESS)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "selftest":
            return run_selftest(getattr(args, "inject_fault", None))
        if not args.config:
            raise ConfigError(f"{args.command} requires --config")
        cfg = load_config(args.config)
        seed = args.seed if args.seed is not None else cfg.run.seed
        if not 0 <= seed < 2**64:
            raise ConfigError(f"--seed must be an unsigned 64-bit integer, got {seed}")
        if args.threads < 1:
            raise ConfigError(f"--threads must be >= 1, got {args.threads}")
        out_dir = Path(args.out if args.out else cfg.run.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)

        started = _utc_now()
        _write_manifest(out_dir, args.command, cfg, seed, started, outputs=None)
        if args.command == "calibrate":
            rc = cmd_calibrate(cfg, seed, out_dir, args.threads)
            produced = [THRESHOLDS_FILE]
        elif args.command == "trace":
            rc = cmd_trace(cfg, seed, out_dir, args.threads)
            produced = [TRACE_FILE, TRACE_TRUTH_FILE]
        elif args.command == "sweep":
            rc = cmd_sweep(cfg, seed, out_dir, args.threads)
            produced = [SWEEP_FILE]
        else:  # pragma: no cover - argparse restricts the choices
            raise ConfigError(f"unknown command {args.command!r}")
        _write_manifest(out_dir, args.command, cfg, seed, started, outputs=produced)
        return rc
    except (ConfigError, MissingThresholdError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
