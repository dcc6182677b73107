"""Session fixtures: real input CSVs produced by the simulator CLI.

The figure package consumes the simulator only through its documented file
formats, so these fixtures shell out to the installed `beamjam` executable
rather than importing anything from it.
"""

import copy
import json
import shutil
import subprocess

import pytest

DENSE_TRACE_CFG = {
    "array": {"M": 128, "N": 32, "M_prime": 4},
    "pilots": {"tau": 10},
    "scenario": {
        "J": 6,
        "jnr_db": 20.0,
        "jsr_db": 0.0,
        "f_c_hz": 28e9,
        "distance_range_m": [1000.0, 1500.0],
        "path_loss_exponent": 2.0,
        "shadow_std_db": 4.0,
    },
    "detection": {
        "grid_L": 500,
        "j_max": 6,
        "p_f": 0.01,
        "detectors": ["glrt-sci"],
        "glrt_mode": "literal",
    },
    "run": {"seed": 1, "n_trials": 100, "n_calib_trials": 20000, "out_dir": "out"},
}

DESK_SWEEP_CFG = {
    "array": {"M": 64, "N": 32, "M_prime": 4},
    "pilots": {"tau": 10},
    "scenario": {
        "J": 3,
        "jnr_list_db": [0.0, 5.0, 10.0, 15.0, 20.0],
        "jsr_db": 0.0,
        "f_c_hz": 28e9,
        "distance_range_m": [1000.0, 1500.0],
        "path_loss_exponent": 2.0,
        "shadow_std_db": 4.0,
    },
    "detection": {
        "grid_L": 200,
        "j_max": 6,
        "p_f": 0.01,
        "detectors": ["glrt-sci", "msd-is", "msd-icm"],
        "glrt_mode": "literal",
    },
    "run": {"seed": 1, "n_trials": 500, "n_calib_trials": 20000, "out_dir": "out"},
}


def _run_beamjam(*args: str) -> None:
    exe = shutil.which("beamjam")
    if exe is None:
        pytest.fail("beamjam executable not on PATH; install the simulator package first")
    proc = subprocess.run([exe, *args], capture_output=True, text=True)
    if proc.returncode != 0:
        pytest.fail(f"beamjam {' '.join(args)} exited {proc.returncode}:\n{proc.stderr}")


def _materialize(tmp_path_factory, label: str, cfg: dict, commands: tuple[str, ...]):
    root = tmp_path_factory.mktemp(label)
    out = root / "run"
    cfg = copy.deepcopy(cfg)
    cfg["run"]["out_dir"] = str(out)
    cfg_path = root / "cfg.json"
    cfg_path.write_text(json.dumps(cfg))
    for command in commands:
        _run_beamjam(command, "--config", str(cfg_path))
    return out


@pytest.fixture(scope="session")
def dense_trace(tmp_path_factory):
    """trace.csv + trace_truth.csv of the six-jammer, 500-point-grid run."""
    out = _materialize(tmp_path_factory, "dense", DENSE_TRACE_CFG, ("calibrate", "trace"))
    return out / "trace.csv", out / "trace_truth.csv"


@pytest.fixture(scope="session")
def desk_sweep(tmp_path_factory):
    """sweep.csv of the three-detector, five-JNR-point benchmark."""
    out = _materialize(tmp_path_factory, "desk", DESK_SWEEP_CFG, ("calibrate", "sweep"))
    return out / "sweep.csv"
