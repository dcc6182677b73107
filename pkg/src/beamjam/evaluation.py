"""Monte Carlo harness: threshold calibration, matching, sweeps, traces.

Reproducibility model: a master seed plus a counter-style splitting function
give every trial its own substream, keyed on (phase, jnr-index, trial-index).
The detector is deliberately not part of the key: all detectors must see the
same scenario and noise in a given trial (paired comparison), and detection
itself is deterministic. Results are therefore independent of execution
order, which is what makes --threads > 1 safe.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .airsim import ProjectedObservation, make_pilots, project, synth_received
from .config import ExperimentConfig
from .glrt import (
    DETECTOR_GLRT_SCI,
    DetectionResult,
    Grid,
    SteeringTable,
    _glrt_metric_vec,
    build_steering,
    run_glrt_sci,
)
from .model import Combiner, Scenario, sample_scenario
from .msd import _SUBSPACE_FLOOR, DETECTOR_MSD_ICM, DETECTOR_MSD_IS, MsdVariant, run_msd

PHASE_CALIBRATE = "calibrate"
PHASE_VALIDATE = "validate"
PHASE_SWEEP = "sweep"
PHASE_TRACE = "trace"


# ----- Substream seeding -----

def substream_seed(*parts) -> int:
    """Deterministic 64-bit substream seed from an arbitrary key tuple."""
    blob = "\x1f".join(repr(p) for p in parts).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")


def trial_seeds(master_seed: int, phase: str, jnr_index: int, trial_index: int) -> tuple[int, int]:
    """(scenario_seed, synthesis_seed) for one trial substream."""
    return (
        substream_seed(master_seed, phase, jnr_index, trial_index, "scenario"),
        substream_seed(master_seed, phase, jnr_index, trial_index, "synth"),
    )


# ----- Shared trial machinery -----

@dataclass(frozen=True, eq=False)
class _Workspace:
    """Per-process cache of the deterministic heavy pieces of one config."""

    cfg: ExperimentConfig
    W: Combiner
    pilots: object
    grid: Grid
    steering: SteeringTable
    psi_norm2: np.ndarray

    @classmethod
    def build(cls, cfg: ExperimentConfig) -> "_Workspace":
        W = cfg.combiner()
        grid = Grid.uniform(cfg.detection.grid_L)
        table = build_steering(grid, W)
        return cls(
            cfg=cfg,
            W=W,
            pilots=make_pilots(cfg.tau),
            grid=grid,
            steering=table,
            psi_norm2=np.einsum("nl,nl->l", table.psi.conj(), table.psi).real,
        )


def _trial_observation(
    ws: _Workspace,
    jnr_db: float | None,
    master_seed: int,
    phase: str,
    jnr_index: int,
    trial_index: int,
    *,
    include_jamming: bool,
) -> tuple[Scenario, ProjectedObservation]:
    scn_seed, synth_seed = trial_seeds(master_seed, phase, jnr_index, trial_index)
    scn = sample_scenario(ws.cfg.scenario_spec(jnr_db), scn_seed)
    block = synth_received(
        scn, ws.pilots, ws.W, np.random.default_rng(synth_seed), include_jamming=include_jamming
    )
    return scn, project(block, ws.pilots, scn.user_power)


def run_detection(
    detector: str,
    obs: ProjectedObservation,
    grid: Grid,
    kappa: float,
    j_max: int,
    W: Combiner,
    *,
    glrt_mode: str,
    steering: SteeringTable | None = None,
) -> DetectionResult:
    """Dispatch one observation to a detector by id."""
    if detector == DETECTOR_GLRT_SCI:
        return run_glrt_sci(obs, grid, kappa, j_max, W, mode=glrt_mode, steering=steering)
    if detector == DETECTOR_MSD_IS:
        return run_msd(obs, grid, kappa, j_max, MsdVariant.IS, W, steering=steering)
    if detector == DETECTOR_MSD_ICM:
        return run_msd(obs, grid, kappa, j_max, MsdVariant.ICM, W, steering=steering)
    raise ValueError(f"unknown detector id {detector!r}")


# ----- Threshold calibration -----

def _h0_max_metrics(
    obs: ProjectedObservation,
    ws: _Workspace,
    detectors: tuple[str, ...],
    glrt_mode: str,
) -> dict[str, float]:
    """First-iteration max-over-grid statistic per detector, one H0 observation.

    All requested detectors share one matched-filter pass: with the noise-only
    model the GLRT needs Q_l = q_raw/sigma^4 and R_l = ||Psi_l||^2/sigma^2,
    while both MSD variants reduce to q_raw / ||Psi_l||^2 / sigma^2.
    """
    sigma2 = obs.sigma2
    S = obs.y @ ws.steering.psi.conj()          # tau' x L
    q_raw = np.sum(np.abs(S) ** 2, axis=0)
    out: dict[str, float] = {}
    for det in detectors:
        if det == DETECTOR_GLRT_SCI:
            R_l = ws.psi_norm2 / sigma2
            Q_l = q_raw / sigma2**2
            T = _glrt_metric_vec(Q_l, R_l, obs.tau_prime, glrt_mode)
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                T = q_raw / ws.psi_norm2 / sigma2
            # same dead-direction floor as the detector loop, so the
            # calibrated quantile sees exactly the loop's statistic
            T = np.where(ws.psi_norm2 < _SUBSPACE_FLOOR, 0.0, T)
        out[det] = float(T.max())
    return out


def _calib_chunk(payload) -> dict[str, np.ndarray]:
    cfg, detectors, master_seed, phase, lo, hi = payload
    ws = _Workspace.build(cfg)
    jnr = cfg.calibration_jnr_db
    out = {d: np.empty(hi - lo) for d in detectors}
    for t in range(lo, hi):
        _, obs = _trial_observation(ws, jnr, master_seed, phase, 0, t, include_jamming=False)
        mm = _h0_max_metrics(obs, ws, detectors, cfg.detection.glrt_mode)
        for d in detectors:
            out[d][t - lo] = mm[d]
    return out


def _chunk_bounds(n: int, threads: int) -> list[tuple[int, int]]:
    k = max(1, min(threads, n))
    step = math.ceil(n / k)
    return [(lo, min(lo + step, n)) for lo in range(0, n, step)]


def h0_max_samples(
    cfg: ExperimentConfig,
    detectors: tuple[str, ...],
    n_trials: int,
    master_seed: int,
    phase: str = PHASE_CALIBRATE,
    threads: int = 1,
) -> dict[str, np.ndarray]:
    """n_trials noise-only trials through the full pipeline; per-detector
    first-iteration max statistics in trial order."""
    bounds = _chunk_bounds(n_trials, threads)
    payloads = [(cfg, detectors, master_seed, phase, lo, hi) for lo, hi in bounds]
    if threads <= 1 or len(bounds) == 1:
        parts = [_calib_chunk(p) for p in payloads]
    else:
        with ProcessPoolExecutor(max_workers=len(bounds)) as pool:
            parts = list(pool.map(_calib_chunk, payloads))
    return {d: np.concatenate([p[d] for p in parts]) for d in detectors}


def calibrate_threshold(
    detector: str,
    cfg: ExperimentConfig,
    p_f: float,
    n_trials: int,
    master_seed: int,
    *,
    phase: str = PHASE_CALIBRATE,
    threads: int = 1,
) -> float:
    """Empirical (1 - p_f) quantile of the H0 first-iteration max statistic.

    Linear interpolation between order statistics; requires enough trials to
    resolve the tail (n_trials >= 50 / p_f).
    """
    if not 0.0 < p_f < 1.0:
        raise ValueError(f"p_f must lie strictly inside (0, 1), got {p_f}")
    if n_trials < math.ceil(50.0 / p_f):
        raise ValueError(
            f"n_trials={n_trials} too small for p_f={p_f}; need at least {math.ceil(50.0 / p_f)}"
        )
    samples = h0_max_samples(cfg, (detector,), n_trials, master_seed, phase, threads)[detector]
    return float(np.quantile(samples, 1.0 - p_f, method="linear"))


def calibrate_thresholds(
    cfg: ExperimentConfig,
    detectors: tuple[str, ...],
    p_f: float,
    n_trials: int,
    master_seed: int,
    *,
    threads: int = 1,
) -> dict[str, float]:
    """All detectors in one shared pass over the same H0 trials."""
    if not 0.0 < p_f < 1.0:
        raise ValueError(f"p_f must lie strictly inside (0, 1), got {p_f}")
    if n_trials < math.ceil(50.0 / p_f):
        raise ValueError(
            f"n_trials={n_trials} too small for p_f={p_f}; need at least {math.ceil(50.0 / p_f)}"
        )
    samples = h0_max_samples(cfg, tuple(detectors), n_trials, master_seed, PHASE_CALIBRATE, threads)
    return {d: float(np.quantile(samples[d], 1.0 - p_f, method="linear")) for d in detectors}


# ----- Threshold table persistence -----

THRESHOLD_SCHEMA = "beamjam-thresholds-v1"


class MissingThresholdError(LookupError):
    """No calibrated threshold for (detector, config fingerprint, p_f)."""


@dataclass(frozen=True)
class ThresholdEntry:
    detector: str
    fingerprint: str
    p_f: float
    kappa: float
    n_trials: int
    seed: int


@dataclass
class ThresholdTable:
    entries: dict[tuple[str, str, float], ThresholdEntry]

    @classmethod
    def empty(cls) -> "ThresholdTable":
        return cls(entries={})

    def put(self, entry: ThresholdEntry) -> None:
        self.entries[(entry.detector, entry.fingerprint, entry.p_f)] = entry

    def lookup(self, detector: str, fingerprint: str, p_f: float) -> ThresholdEntry:
        key = (detector, fingerprint, p_f)
        if key not in self.entries:
            raise MissingThresholdError(
                f"no calibrated threshold for detector={detector} fingerprint={fingerprint} p_f={p_f}; "
                "run the calibrate step first"
            )
        return self.entries[key]

    def to_json_dict(self) -> dict:
        rows = [
            {
                "detector": e.detector,
                "fingerprint": e.fingerprint,
                "p_f": e.p_f,
                "kappa": e.kappa,
                "n_trials": e.n_trials,
                "seed": e.seed,
            }
            for e in sorted(self.entries.values(), key=lambda e: (e.detector, e.fingerprint, e.p_f))
        ]
        return {"schema": THRESHOLD_SCHEMA, "entries": rows}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "ThresholdTable":
        p = Path(path)
        if not p.is_file():
            raise MissingThresholdError(f"threshold file not found: {p}; run the calibrate step first")
        raw = json.loads(p.read_text())
        if raw.get("schema") != THRESHOLD_SCHEMA:
            raise MissingThresholdError(f"unrecognized threshold file schema in {p}")
        table = cls.empty()
        for row in raw["entries"]:
            table.put(
                ThresholdEntry(
                    detector=row["detector"],
                    fingerprint=row["fingerprint"],
                    p_f=float(row["p_f"]),
                    kappa=float(row["kappa"]),
                    n_trials=int(row["n_trials"]),
                    seed=int(row["seed"]),
                )
            )
        return table


# ----- Matching and aggregation -----

@dataclass(frozen=True)
class TrialOutcome:
    """Per-trial matching record, aligned with the true jammer list."""

    true_thetas: tuple[float, ...]
    detected_thetas: tuple[float, ...]
    matches: tuple[bool, ...]
    errors: tuple[float | None, ...]  # signed error where matched, None otherwise


def match_detections(
    detected_thetas: "list[float] | tuple[float, ...]",
    true_thetas: "list[float] | tuple[float, ...]",
    N: int,
) -> TrialOutcome:
    """Nearest-detection matching with the one-beam tolerance 2/N (inclusive).

    Each true jammer independently picks its nearest estimate, so one
    detection may serve several true jammers; ties go to the earlier
    detection. Unmatched jammers contribute no error term.
    """
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    tol = 2.0 / N
    matches: list[bool] = []
    errors: list[float | None] = []
    for theta in true_thetas:
        if detected_thetas:
            err = min((d - theta for d in detected_thetas), key=abs)
            ok = abs(err) <= tol
        else:
            err, ok = 0.0, False
        matches.append(ok)
        errors.append(err if ok else None)
    return TrialOutcome(
        true_thetas=tuple(float(t) for t in true_thetas),
        detected_thetas=tuple(float(d) for d in detected_thetas),
        matches=tuple(matches),
        errors=tuple(errors),
    )


def aggregate(outcomes: "list[TrialOutcome]") -> tuple[float | None, float | None]:
    """(p_d, rmse) over trials: detected share of jammer slots, and RMSE over
    matched slots only. Either is None when its denominator is empty."""
    slots = sum(len(o.true_thetas) for o in outcomes)
    matched = sum(sum(o.matches) for o in outcomes)
    errs = [e for o in outcomes for e in o.errors if e is not None]
    p_d = (matched / slots) if slots else None
    rmse = float(np.sqrt(np.mean(np.square(errs)))) if errs else None
    return p_d, rmse


# ----- Sweep -----

@dataclass(frozen=True)
class SweepRow:
    detector: str
    jnr_db: float
    p_d: float | None
    rmse: float | None
    n_trials: int
    kappa: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple[SweepRow, ...]


def _sweep_chunk(payload) -> dict[str, list[TrialOutcome]]:
    cfg, detectors, kappas, jnr_db, jnr_index, master_seed, lo, hi = payload
    ws = _Workspace.build(cfg)
    out: dict[str, list[TrialOutcome]] = {d: [] for d in detectors}
    for t in range(lo, hi):
        scn, obs = _trial_observation(
            ws, jnr_db, master_seed, PHASE_SWEEP, jnr_index, t, include_jamming=True
        )
        for d in detectors:
            res = run_detection(
                d,
                obs,
                ws.grid,
                kappas[d],
                cfg.detection.j_max,
                ws.W,
                glrt_mode=cfg.detection.glrt_mode,
                steering=ws.steering,
            )
            out[d].append(match_detections(res.thetas, scn.true_thetas, cfg.array.N))
    return out


def run_sweep(
    cfg: ExperimentConfig,
    jnr_list_db: tuple[float, ...],
    detectors: tuple[str, ...],
    thresholds: ThresholdTable,
    master_seed: int,
    *,
    threads: int = 1,
) -> SweepResult:
    """Paired Monte Carlo sweep over JNR points.

    Every (jnr, trial) substream is shared by all detectors; rows come out
    sorted by (detector, jnr). Missing threshold entries fail before any
    trial runs.
    """
    if cfg.scenario.J < 1:
        raise ValueError("sweeps need at least one jammer (scenario.J >= 1)")
    fp = cfg.fingerprint()
    kappas = {d: thresholds.lookup(d, fp, cfg.detection.p_f).kappa for d in detectors}
    n = cfg.run.n_trials

    rows: list[SweepRow] = []
    for jnr_index, jnr_db in enumerate(jnr_list_db):
        bounds = _chunk_bounds(n, threads)
        payloads = [
            (cfg, detectors, kappas, jnr_db, jnr_index, master_seed, lo, hi) for lo, hi in bounds
        ]
        if threads <= 1 or len(bounds) == 1:
            parts = [_sweep_chunk(p) for p in payloads]
        else:
            with ProcessPoolExecutor(max_workers=len(bounds)) as pool:
                parts = list(pool.map(_sweep_chunk, payloads))
        for d in detectors:
            outcomes = [o for part in parts for o in part[d]]
            p_d, rmse = aggregate(outcomes)
            rows.append(
                SweepRow(detector=d, jnr_db=jnr_db, p_d=p_d, rmse=rmse, n_trials=n, kappa=kappas[d])
            )

    rows.sort(key=lambda r: (r.detector, r.jnr_db))
    return SweepResult(rows=tuple(rows))


# ----- Single-trial trace -----

@dataclass(frozen=True, eq=False)
class TraceRun:
    scenario: Scenario
    results: dict[str, DetectionResult]


def run_trace(cfg: ExperimentConfig, thresholds: ThresholdTable, master_seed: int) -> TraceRun:
    """One seeded trial, all configured detectors on the same observation."""
    fp = cfg.fingerprint()
    detectors = cfg.detection.detectors
    kappas = {d: thresholds.lookup(d, fp, cfg.detection.p_f).kappa for d in detectors}
    ws = _Workspace.build(cfg)
    jnr = cfg.scenario.jnr_db
    if cfg.scenario.J > 0 and jnr is None:
        raise ValueError("trace needs scenario.jnr_db (a single JNR point)")
    scn, obs = _trial_observation(ws, jnr, master_seed, PHASE_TRACE, 0, 0, include_jamming=True)
    results = {
        d: run_detection(
            d,
            obs,
            ws.grid,
            kappas[d],
            cfg.detection.j_max,
            ws.W,
            glrt_mode=cfg.detection.glrt_mode,
            steering=ws.steering,
        )
        for d in detectors
    }
    return TraceRun(scenario=scn, results=results)
