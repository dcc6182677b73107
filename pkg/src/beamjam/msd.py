"""Matched-subspace benchmark detectors sharing the GLRT's sequential loop.

Both variants scan the same grid with

    T(theta) = sum_i |Pi^H y_i|^2 / ||Pi||^2,    Pi = Xi * Psi(theta)

and differ only in how Xi deflates the already-detected jammers:

* interference-subspace (IS):  Xi = I - Psi_det Psi_det^+, the orthogonal
  projector onto the complement of the detected steering span;
* interference-covariance (ICM):  Xi = (Psi_det Gamma_hat Psi_det^H + sigma^2 I)^{-1/2},
  a whitener built from per-jammer power estimates.

The raw T scales linearly with the noise power, so the sequential loop
compares T / sigma^2 against its calibrated threshold; that normalized value
is what lands in traces and thresholds. `msd_metric` itself returns the raw
kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .airsim import ProjectedObservation
from .glrt import (
    STOPPED_BY_MAX_ITERATIONS,
    STOPPED_BY_THRESHOLD,
    DetectedJammer,
    DetectionResult,
    Grid,
    SteeringTable,
    build_steering,
)
from .model import Combiner, beamspace_steering, beamspace_steering_matrix

# ||Pi||^2 below this means theta sits inside the detected subspace; the
# metric is defined as 0 there
_SUBSPACE_FLOOR = 1e-14
# relative rank tolerance for the detected-steering pseudo-inverse
_RANK_RTOL = 1e-10
# eigenvalue floor for the ICM whitener, relative to sigma^2
_EIG_FLOOR_REL = 1e-12


DETECTOR_MSD_IS = "msd-is"
DETECTOR_MSD_ICM = "msd-icm"


class MsdVariant(Enum):
    IS = "is"
    ICM = "icm"


@dataclass(frozen=True, eq=False)
class MsdState:
    """Detected angles so far; ICM additionally tracks per-jammer power estimates."""

    variant: MsdVariant
    detected_thetas: tuple[float, ...]
    gamma_hats: tuple[float, ...]  # empty for IS

    def __post_init__(self) -> None:
        if self.variant is MsdVariant.ICM and len(self.gamma_hats) != len(self.detected_thetas):
            raise ValueError("ICM needs one gamma estimate per detected angle")
        if self.variant is MsdVariant.IS and self.gamma_hats:
            raise ValueError("IS carries no power estimates")


def msd_projection(
    variant: MsdVariant,
    detected_thetas: tuple[float, ...],
    gamma_hats: tuple[float, ...],
    sigma2: float,
    W: Combiner,
) -> np.ndarray:
    """Deflation operator Xi for the next scan (N x N).

    IS with no detections is the identity; ICM with no detections is
    (1/sigma) * I. Duplicate detected angles make the IS pseudo-inverse
    rank-deficient and are rejected.
    """
    if sigma2 <= 0.0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    N = W.matrix.shape[1]
    if variant is MsdVariant.IS:
        if not detected_thetas:
            return np.eye(N, dtype=complex)
        Psi = beamspace_steering_matrix(np.asarray(detected_thetas), W)
        s = np.linalg.svd(Psi, compute_uv=False)
        if s[-1] <= _RANK_RTOL * s[0]:
            raise np.linalg.LinAlgError(
                "detected steering matrix is numerically rank-deficient (duplicate angle?)"
            )
        Xi = np.eye(N, dtype=complex) - Psi @ np.linalg.pinv(Psi, rcond=_RANK_RTOL)
        return 0.5 * (Xi + Xi.conj().T)

    # ICM: Hermitian inverse square root of the modeled covariance
    if len(gamma_hats) != len(detected_thetas):
        raise ValueError("need one gamma estimate per detected angle")
    if any(g < 0.0 for g in gamma_hats):
        raise ValueError("gamma estimates must be >= 0")
    Sigma = sigma2 * np.eye(N, dtype=complex)
    if detected_thetas:
        Psi = beamspace_steering_matrix(np.asarray(detected_thetas), W)
        Sigma = Sigma + (Psi * np.asarray(gamma_hats)) @ Psi.conj().T
    lam, U = np.linalg.eigh(0.5 * (Sigma + Sigma.conj().T))
    lam = np.maximum(lam, sigma2 * _EIG_FLOOR_REL)
    Xi = (U / np.sqrt(lam)) @ U.conj().T
    return 0.5 * (Xi + Xi.conj().T)


def msd_metric(obs: ProjectedObservation, theta: float, Xi: np.ndarray, W: Combiner) -> float:
    """Raw matched-subspace energy sum_i |Pi^H y_i|^2 / ||Pi||^2 at one angle."""
    if Xi.shape != (obs.n_chains, obs.n_chains):
        raise ValueError("Xi must be N x N for the observation")
    Pi = Xi @ beamspace_steering(theta, W)
    den = float(np.vdot(Pi, Pi).real)
    if den < _SUBSPACE_FLOOR:
        return 0.0
    z = obs.y @ Pi.conj()
    return float(np.sum(np.abs(z) ** 2) / den)


def _scan_msd(obs: ProjectedObservation, Xi: np.ndarray, psi_grid: np.ndarray):
    """Vectorized (T_raw_l, den_l) over the grid; T_raw is the unnormalized kernel."""
    Pi = Xi @ psi_grid                                     # N x L
    den = np.einsum("nl,nl->l", Pi.conj(), Pi).real
    Z = obs.y @ Pi.conj()                                  # tau' x L
    num = np.sum(np.abs(Z) ** 2, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        T = num / den
    return np.where(den < _SUBSPACE_FLOOR, 0.0, T), den


def run_msd(
    obs: ProjectedObservation,
    grid: Grid,
    kappa: float,
    j_max: int,
    variant: MsdVariant,
    W: Combiner,
    *,
    steering: SteeringTable | None = None,
) -> DetectionResult:
    """Sequential matched-subspace detection, mirroring the GLRT loop.

    The decision metric is the raw kernel divided by sigma^2 (noise units), so
    one calibrated threshold stays CFAR across trials with different noise
    power. For ICM each accepted angle gets a power estimate from the same
    closed form as the GLRT MLE, evaluated against the whitened statistics at
    acceptance and clamped to >= 0.
    """
    if kappa < 0.0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    if j_max < 1:
        raise ValueError(f"j_max must be >= 1, got {j_max}")
    table = steering if steering is not None else build_steering(grid, W)
    if table.psi.shape[0] != obs.n_chains:
        raise ValueError("steering table does not match the observation dimension")

    tau_prime = obs.tau_prime
    sigma2 = obs.sigma2
    detected: list[float] = []
    gammas: list[float] = []
    jammers: list[DetectedJammer] = []
    traces: list[np.ndarray] = []
    stopped_by = STOPPED_BY_MAX_ITERATIONS

    for _ in range(j_max):
        Xi = msd_projection(variant, tuple(detected), tuple(gammas), sigma2, W)
        T_raw, den = _scan_msd(obs, Xi, table.psi)
        T = T_raw / sigma2
        traces.append(T)
        idx = int(np.argmax(T))
        peak = float(T[idx])
        if peak <= 0.0 or peak < kappa:
            stopped_by = STOPPED_BY_THRESHOLD
            break
        theta_hat = float(grid.points[idx])
        gamma_hat = 0.0
        if variant is MsdVariant.ICM:
            # Xi^2 plays the role of R_hat^{-1}; reuse the GLRT's closed form
            psi = table.psi[:, idx]
            w = Xi @ (Xi @ psi)
            R_acc = float(np.vdot(psi, w).real)
            z = obs.y @ w.conj()
            Q_acc = float(np.sum(np.abs(z) ** 2))
            if R_acc > 0.0:
                gamma_hat = max(0.0, (Q_acc - tau_prime * R_acc) / (tau_prime * R_acc * R_acc))
            gammas.append(gamma_hat)
        detected.append(theta_hat)
        jammers.append(
            DetectedJammer(theta_hat=theta_hat, gamma_hat=gamma_hat, metric_peak=peak, grid_index=idx)
        )

    return DetectionResult(jammers=tuple(jammers), traces=tuple(traces), stopped_by=stopped_by)
