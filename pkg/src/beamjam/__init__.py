"""Beamspace jammer detection and angle estimation toolkit.

Uplink model: an M-antenna uniform linear array reduced to N RF chains by a
DFT beamspace combiner, a single pilot-protected user, and a random number of
wideband jammers. Unused pilot projections cancel the user exactly and leave
per-projection observations with known noise floor 1/(P*tau); the iterative
GLRT detector (and the matched-subspace baselines) then scan a directional
grid, peeling one jammer per iteration until the detection statistic drops
below a CFAR-calibrated threshold.
"""

from .airsim import PilotSet, ProjectedObservation, ReceivedBlock, make_pilots, project, synth_received
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .evaluation import (
    MissingThresholdError,
    SweepResult,
    SweepRow,
    ThresholdEntry,
    ThresholdTable,
    TraceRun,
    TrialOutcome,
    aggregate,
    calibrate_threshold,
    calibrate_thresholds,
    h0_max_samples,
    match_detections,
    run_detection,
    run_sweep,
    run_trace,
    substream_seed,
    trial_seeds,
)
from .glrt import (
    DETECTOR_GLRT_SCI,
    GLRT_MODE_LITERAL,
    GLRT_MODE_ONE_SIDED,
    GLRT_MODES,
    CovModel,
    DetectedJammer,
    DetectionResult,
    Grid,
    SteeringTable,
    build_steering,
    cov_update,
    gamma_mle,
    glrt_metric,
    q_stat,
    r_stat,
    run_glrt_sci,
)
from .model import (
    ArrayConfig,
    Combiner,
    JammerTruth,
    Scenario,
    ScenarioSpec,
    beamspace_steering,
    beamspace_steering_matrix,
    dft_combiner,
    path_loss_db,
    sample_scenario,
    ula_response,
    ula_response_matrix,
)
from .msd import (
    DETECTOR_MSD_ICM,
    DETECTOR_MSD_IS,
    MsdVariant,
    msd_metric,
    msd_projection,
    run_msd,
)

__version__ = "0.1.0"

__all__ = [
    "ArrayConfig",
    "Combiner",
    "ConfigError",
    "CovModel",
    "DETECTOR_GLRT_SCI",
    "DETECTOR_MSD_ICM",
    "DETECTOR_MSD_IS",
    "DetectedJammer",
    "DetectionResult",
    "ExperimentConfig",
    "GLRT_MODES",
    "GLRT_MODE_LITERAL",
    "GLRT_MODE_ONE_SIDED",
    "Grid",
    "JammerTruth",
    "MissingThresholdError",
    "MsdVariant",
    "PilotSet",
    "ProjectedObservation",
    "ReceivedBlock",
    "Scenario",
    "ScenarioSpec",
    "SteeringTable",
    "SweepResult",
    "SweepRow",
    "ThresholdEntry",
    "ThresholdTable",
    "TraceRun",
    "TrialOutcome",
    "aggregate",
    "beamspace_steering",
    "beamspace_steering_matrix",
    "build_steering",
    "calibrate_threshold",
    "calibrate_thresholds",
    "cov_update",
    "dft_combiner",
    "gamma_mle",
    "glrt_metric",
    "h0_max_samples",
    "load_config",
    "make_pilots",
    "match_detections",
    "msd_metric",
    "msd_projection",
    "parse_config",
    "path_loss_db",
    "project",
    "q_stat",
    "r_stat",
    "run_detection",
    "run_glrt_sci",
    "run_msd",
    "run_sweep",
    "run_trace",
    "sample_scenario",
    "substream_seed",
    "synth_received",
    "trial_seeds",
    "ula_response",
    "ula_response_matrix",
]
