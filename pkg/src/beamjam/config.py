"""Experiment configuration: strict JSON schema, canonical form, fingerprint.

The config file is the complete experiment record. Parsing is strict: every
section and key below is required, unknown keys are rejected, and all error
messages name the offending key path. The only optionality is the JNR target:
exactly one of scenario.jnr_db / scenario.jnr_list_db when J > 0, neither when
J = 0.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .glrt import DETECTOR_GLRT_SCI, GLRT_MODES
from .model import ArrayConfig, Combiner, ScenarioSpec, dft_combiner
from .msd import DETECTOR_MSD_ICM, DETECTOR_MSD_IS

KNOWN_DETECTORS = (DETECTOR_GLRT_SCI, DETECTOR_MSD_IS, DETECTOR_MSD_ICM)

_MAX_SEED = 2**64 - 1


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending key."""


@dataclass(frozen=True)
class ScenarioSection:
    J: int
    jnr_db: float | None
    jnr_list_db: tuple[float, ...] | None
    jsr_db: float
    f_c_hz: float
    distance_range_m: tuple[float, float]
    path_loss_exponent: float
    shadow_std_db: float


@dataclass(frozen=True)
class DetectionSection:
    grid_L: int
    j_max: int
    p_f: float
    detectors: tuple[str, ...]
    glrt_mode: str


@dataclass(frozen=True)
class RunSection:
    seed: int
    n_trials: int
    n_calib_trials: int
    out_dir: str


@dataclass(frozen=True)
class ExperimentConfig:
    array: ArrayConfig
    tau: int
    scenario: ScenarioSection
    detection: DetectionSection
    run: RunSection

    # -- derived builders --

    def combiner(self) -> Combiner:
        return dft_combiner(self.array.M, self.array.N)

    def scenario_spec(self, jnr_db: float | None) -> ScenarioSpec:
        s = self.scenario
        return ScenarioSpec(
            array=self.array,
            tau=self.tau,
            n_jammers=s.J,
            jnr_db=jnr_db,
            jsr_db=s.jsr_db,
            carrier_hz=s.f_c_hz,
            distance_range_m=s.distance_range_m,
            path_loss_exponent=s.path_loss_exponent,
            shadow_std_db=s.shadow_std_db,
        )

    @property
    def calibration_jnr_db(self) -> float | None:
        """JNR used for the sigma^2 bookkeeping of H0 calibration trials.

        The calibrated statistics are noise-scale ancillary, so any point
        works; the first configured one is used for determinism.
        """
        if self.scenario.jnr_db is not None:
            return self.scenario.jnr_db
        if self.scenario.jnr_list_db:
            return self.scenario.jnr_list_db[0]
        return None

    @property
    def jnr_points_db(self) -> tuple[float, ...]:
        if self.scenario.jnr_list_db is not None:
            return self.scenario.jnr_list_db
        if self.scenario.jnr_db is not None:
            return (self.scenario.jnr_db,)
        return ()

    # -- canonical form --

    def to_json_dict(self) -> dict:
        scenario: dict = {
            "J": self.scenario.J,
            "jsr_db": self.scenario.jsr_db,
            "f_c_hz": self.scenario.f_c_hz,
            "distance_range_m": list(self.scenario.distance_range_m),
            "path_loss_exponent": self.scenario.path_loss_exponent,
            "shadow_std_db": self.scenario.shadow_std_db,
        }
        if self.scenario.jnr_db is not None:
            scenario["jnr_db"] = self.scenario.jnr_db
        if self.scenario.jnr_list_db is not None:
            scenario["jnr_list_db"] = list(self.scenario.jnr_list_db)
        return {
            "array": {"M": self.array.M, "N": self.array.N, "M_prime": self.array.M_prime},
            "pilots": {"tau": self.tau},
            "scenario": scenario,
            "detection": {
                "grid_L": self.detection.grid_L,
                "j_max": self.detection.j_max,
                "p_f": self.detection.p_f,
                "detectors": list(self.detection.detectors),
                "glrt_mode": self.detection.glrt_mode,
            },
            "run": {
                "seed": self.run.seed,
                "n_trials": self.run.n_trials,
                "n_calib_trials": self.run.n_calib_trials,
                "out_dir": self.run.out_dir,
            },
        }

    def canonical_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))

    def fingerprint(self) -> str:
        """Hash of the parameters that shape the calibrated H0 statistics.

        JNR, J, and path-loss settings are excluded: the noise-normalized
        first-iteration statistics do not depend on them under H0.
        """
        core = {
            "M": self.array.M,
            "N": self.array.N,
            "M_prime": self.array.M_prime,
            "tau": self.tau,
            "grid_L": self.detection.grid_L,
            "glrt_mode": self.detection.glrt_mode,
        }
        blob = json.dumps(core, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


# ----- Strict parsing -----

def _require_mapping(node, path: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{path}: expected an object")
    return node

def _check_keys(node: dict, path: str, required: tuple[str, ...], optional: tuple[str, ...] = ()) -> None:
    for key in required:
        if key not in node:
            raise ConfigError(f"{path}.{key}: missing required key")
    for key in node:
        if key not in required and key not in optional:
            raise ConfigError(f"{path}.{key}: unknown key")

def _as_int(node: dict, path: str, key: str, lo: int | None = None, hi: int | None = None) -> int:
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, int):
        raise ConfigError(f"{path}.{key}: expected an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ConfigError(f"{path}.{key}: must be >= {lo}, got {v}")
    if hi is not None and v > hi:
        raise ConfigError(f"{path}.{key}: must be <= {hi}, got {v}")
    return v

def _as_float(node: dict, path: str, key: str, *, positive: bool = False, nonnegative: bool = False) -> float:
    v = node[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{path}.{key}: expected a number, got {v!r}")
    v = float(v)
    if positive and v <= 0.0:
        raise ConfigError(f"{path}.{key}: must be > 0, got {v}")
    if nonnegative and v < 0.0:
        raise ConfigError(f"{path}.{key}: must be >= 0, got {v}")
    return v


def parse_config(raw: dict) -> ExperimentConfig:
    root = _require_mapping(raw, "config")
    _check_keys(root, "config", ("array", "pilots", "scenario", "detection", "run"))

    arr = _require_mapping(root["array"], "array")
    _check_keys(arr, "array", ("M", "N", "M_prime"))
    M = _as_int(arr, "array", "M", lo=1)
    N = _as_int(arr, "array", "N", lo=1)
    M_prime = _as_int(arr, "array", "M_prime", lo=1)
    if N > M:
        raise ConfigError(f"array.N: RF chains ({N}) cannot exceed antennas ({M})")

    pil = _require_mapping(root["pilots"], "pilots")
    _check_keys(pil, "pilots", ("tau",))
    tau = _as_int(pil, "pilots", "tau", lo=2)

    scn = _require_mapping(root["scenario"], "scenario")
    _check_keys(
        scn,
        "scenario",
        ("J", "jsr_db", "f_c_hz", "distance_range_m", "path_loss_exponent", "shadow_std_db"),
        optional=("jnr_db", "jnr_list_db"),
    )
    J = _as_int(scn, "scenario", "J", lo=0)
    jnr_db = _as_float(scn, "scenario", "jnr_db") if "jnr_db" in scn else None
    jnr_list: tuple[float, ...] | None = None
    if "jnr_list_db" in scn:
        v = scn["jnr_list_db"]
        if not isinstance(v, list) or not v:
            raise ConfigError("scenario.jnr_list_db: expected a non-empty array")
        vals = []
        for i, item in enumerate(v):
            if isinstance(item, bool) or not isinstance(item, (int, float)):
                raise ConfigError(f"scenario.jnr_list_db[{i}]: expected a number, got {item!r}")
            vals.append(float(item))
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ConfigError("scenario.jnr_list_db: values must be strictly increasing")
        jnr_list = tuple(vals)
    if J > 0 and (jnr_db is None) == (jnr_list is None):
        raise ConfigError("scenario: exactly one of jnr_db / jnr_list_db is required when J > 0")
    if J == 0 and (jnr_db is not None or jnr_list is not None):
        raise ConfigError("scenario: a JNR target needs at least one jammer (J > 0)")
    jsr_db = _as_float(scn, "scenario", "jsr_db")
    f_c_hz = _as_float(scn, "scenario", "f_c_hz", positive=True)
    rng_v = scn["distance_range_m"]
    if (
        not isinstance(rng_v, list)
        or len(rng_v) != 2
        or any(isinstance(x, bool) or not isinstance(x, (int, float)) for x in rng_v)
    ):
        raise ConfigError("scenario.distance_range_m: expected [min_m, max_m]")
    d0, d1 = float(rng_v[0]), float(rng_v[1])
    if not (0.0 < d0 <= d1):
        raise ConfigError(f"scenario.distance_range_m: need 0 < min <= max, got [{d0}, {d1}]")
    exponent = _as_float(scn, "scenario", "path_loss_exponent", positive=True)
    shadow = _as_float(scn, "scenario", "shadow_std_db", nonnegative=True)

    det = _require_mapping(root["detection"], "detection")
    _check_keys(det, "detection", ("grid_L", "j_max", "p_f", "detectors", "glrt_mode"))
    grid_L = _as_int(det, "detection", "grid_L", lo=2)
    j_max = _as_int(det, "detection", "j_max", lo=1)
    p_f = _as_float(det, "detection", "p_f")
    if not 0.0 < p_f < 1.0:
        raise ConfigError(f"detection.p_f: must lie strictly inside (0, 1), got {p_f}")
    dets_v = det["detectors"]
    if not isinstance(dets_v, list) or not dets_v:
        raise ConfigError("detection.detectors: expected a non-empty array")
    detectors: list[str] = []
    for i, d in enumerate(dets_v):
        if not isinstance(d, str) or d not in KNOWN_DETECTORS:
            raise ConfigError(
                f"detection.detectors[{i}]: unknown detector {d!r}; valid: {', '.join(KNOWN_DETECTORS)}"
            )
        if d in detectors:
            raise ConfigError(f"detection.detectors[{i}]: duplicate detector {d!r}")
        detectors.append(d)
    glrt_mode = det["glrt_mode"]
    if glrt_mode not in GLRT_MODES:
        raise ConfigError(
            f"detection.glrt_mode: expected one of {', '.join(GLRT_MODES)}, got {glrt_mode!r}"
        )

    run = _require_mapping(root["run"], "run")
    _check_keys(run, "run", ("seed", "n_trials", "n_calib_trials", "out_dir"))
    seed = _as_int(run, "run", "seed", lo=0, hi=_MAX_SEED)
    n_trials = _as_int(run, "run", "n_trials", lo=1)
    n_calib = _as_int(run, "run", "n_calib_trials", lo=1)
    out_dir = run["out_dir"]
    if not isinstance(out_dir, str) or not out_dir:
        raise ConfigError("run.out_dir: expected a non-empty string")

    return ExperimentConfig(
        array=ArrayConfig(M=M, N=N, M_prime=M_prime),
        tau=tau,
        scenario=ScenarioSection(
            J=J,
            jnr_db=jnr_db,
            jnr_list_db=jnr_list,
            jsr_db=jsr_db,
            f_c_hz=f_c_hz,
            distance_range_m=(d0, d1),
            path_loss_exponent=exponent,
            shadow_std_db=shadow,
        ),
        detection=DetectionSection(
            grid_L=grid_L, j_max=j_max, p_f=p_f, detectors=tuple(detectors), glrt_mode=glrt_mode
        ),
        run=RunSection(seed=seed, n_trials=n_trials, n_calib_trials=n_calib, out_dir=out_dir),
    )


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"config is not valid JSON: {e}") from e
    return parse_config(raw)
