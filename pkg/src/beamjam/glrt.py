"""Iterative GLRT detector with sequential covariance identification.

Each iteration t holds a covariance model

    R_hat = Psi(theta_1..t-1) diag(gamma_1..t-1) Psi^H + sigma^2 I

for the already-detected jammers, scans a spatial grid with

    R(theta) = Psi^H(theta) R_hat^{-1} Psi(theta)
    Q(theta) = sum_i |Psi^H(theta) R_hat^{-1} y_i|^2

and evaluates the concentrated log-GLR

    T(theta) = -tau' * ln(Q / (tau' R)) + Q/R - tau'
             = tau' * (x - ln x - 1),   x = Q / (tau' R)

which is the binary-test statistic after substituting the closed-form MLE
gamma_hat = (Q - tau'R) / (tau' R^2). If the grid maximum clears the threshold
the argmax is accepted, the covariance absorbs it through a rank-1 update
(Woodbury inverse, so no refactorization), and the scan repeats.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .airsim import ProjectedObservation
from .model import Combiner, beamspace_steering, beamspace_steering_matrix

# residual bound for the cached-inverse invariant; exceeding it triggers a
# full refactorization of R_inv
_INV_RESIDUAL_TOL = 1e-9

GLRT_MODE_LITERAL = "literal"
GLRT_MODE_ONE_SIDED = "one_sided"
GLRT_MODES = (GLRT_MODE_LITERAL, GLRT_MODE_ONE_SIDED)

DETECTOR_GLRT_SCI = "glrt-sci"

STOPPED_BY_THRESHOLD = "threshold"
STOPPED_BY_MAX_ITERATIONS = "max_iterations"


# ----- Scan grid -----

@dataclass(frozen=True, eq=False)
class Grid:
    """Strictly increasing scan grid covering [-1, 1] endpoint to endpoint."""

    points: np.ndarray

    def __post_init__(self) -> None:
        p = self.points
        if p.ndim != 1 or p.size < 2:
            raise ValueError("grid needs at least two points")
        if p[0] != -1.0 or p[-1] != 1.0:
            raise ValueError("grid must start at -1 and end at +1")
        if not np.all(np.diff(p) > 0.0):
            raise ValueError("grid points must be strictly increasing")

    @property
    def L(self) -> int:
        return self.points.size

    @classmethod
    def uniform(cls, L: int) -> "Grid":
        if L < 2:
            raise ValueError(f"grid needs at least two points, got {L}")
        return cls(points=np.linspace(-1.0, 1.0, L))


@dataclass(frozen=True, eq=False)
class SteeringTable:
    """Precomputed beamspace steering over a grid: psi[:, l] = W^H a(theta_l)."""

    grid: Grid
    psi: np.ndarray  # N x L

    def __post_init__(self) -> None:
        if self.psi.shape[1] != self.grid.L:
            raise ValueError("one steering column per grid point required")


def build_steering(grid: Grid, W: Combiner) -> SteeringTable:
    return SteeringTable(grid=grid, psi=beamspace_steering_matrix(grid.points, W))


# ----- Covariance model -----

def _hermitize(A: np.ndarray) -> np.ndarray:
    return 0.5 * (A + A.conj().T)


@dataclass(frozen=True, eq=False)
class CovModel:
    """Covariance of the detected-so-far jamming plus noise, with cached inverse."""

    detected: tuple[tuple[float, float], ...]  # (theta_hat, gamma_hat) pairs
    sigma2: float
    R: np.ndarray
    R_inv: np.ndarray

    @classmethod
    def noise_only(cls, sigma2: float, N: int) -> "CovModel":
        if sigma2 <= 0.0:
            raise ValueError(f"sigma2 must be positive, got {sigma2}")
        eye = np.eye(N, dtype=complex)
        return cls(detected=(), sigma2=sigma2, R=sigma2 * eye, R_inv=eye / sigma2)


def cov_update(model: CovModel, theta_hat: float, gamma_hat: float, W: Combiner) -> CovModel:
    """Absorb one accepted jammer: R += gamma * psi psi^H, inverse via Woodbury.

    gamma_hat must be >= 0 (clamped upstream). gamma_hat = 0 returns an
    equivalent model with the detection recorded but the matrices unchanged.
    """
    if gamma_hat < 0.0:
        raise ValueError(f"gamma_hat must be >= 0, got {gamma_hat}")
    psi = beamspace_steering(theta_hat, W)
    if psi.shape[0] != model.R.shape[0]:
        raise ValueError("steering length does not match the model dimension")

    R_new = _hermitize(model.R + gamma_hat * np.outer(psi, psi.conj()))
    v = model.R_inv @ psi
    r = float(np.vdot(psi, v).real)
    R_inv_new = _hermitize(model.R_inv - (gamma_hat / (1.0 + gamma_hat * r)) * np.outer(v, v.conj()))

    resid = np.abs(R_new @ R_inv_new - np.eye(R_new.shape[0])).max()
    if resid > _INV_RESIDUAL_TOL:
        R_inv_new = _hermitize(np.linalg.inv(R_new))

    return CovModel(
        detected=model.detected + ((float(theta_hat), float(gamma_hat)),),
        sigma2=model.sigma2,
        R=R_new,
        R_inv=R_inv_new,
    )


# ----- Scan statistics -----

def r_stat(model: CovModel, theta: float, W: Combiner) -> float:
    """R(theta) = Psi^H R_hat^{-1} Psi; real and positive for a PD model."""
    psi = beamspace_steering(theta, W)
    return float(np.vdot(psi, model.R_inv @ psi).real)


def q_stat(model: CovModel, obs: ProjectedObservation, theta: float, W: Combiner) -> float:
    """Q(theta) = sum over unused pilots of |Psi^H R_hat^{-1} y_i|^2."""
    if obs.n_chains != model.R.shape[0]:
        raise ValueError(
            f"observation dimension {obs.n_chains} != model dimension {model.R.shape[0]}"
        )
    v = model.R_inv @ beamspace_steering(theta, W)
    z = obs.y @ v.conj()
    return float(np.sum(np.abs(z) ** 2))


def gamma_mle(Q: float, R: float, tau_prime: int) -> float:
    """Closed-form jamming-power MLE (Q - tau'R) / (tau' R^2); may be negative."""
    if R <= 0.0:
        raise ValueError(f"R must be positive, got {R}")
    if tau_prime < 1:
        raise ValueError(f"tau_prime must be >= 1, got {tau_prime}")
    return (Q - tau_prime * R) / (tau_prime * R * R)


def glrt_metric(Q: float, R: float, tau_prime: int) -> float:
    """Concentrated log-GLR tau'*(x - ln x - 1) with x = Q/(tau'R).

    Nonnegative, zero exactly at Q/R = tau'. Float-noise negatives (~1e-16)
    are clamped to 0 so the nonnegativity contract holds bitwise.
    """
    if Q <= 0.0:
        raise ValueError(f"Q must be positive, got {Q}")
    if R <= 0.0:
        raise ValueError(f"R must be positive, got {R}")
    if tau_prime < 1:
        raise ValueError(f"tau_prime must be >= 1, got {tau_prime}")
    x = Q / (tau_prime * R)
    T = tau_prime * (x - np.log(x) - 1.0)
    return float(T) if T > 0.0 else 0.0


# ----- Detection loop -----

@dataclass(frozen=True, eq=False)
class DetectedJammer:
    theta_hat: float
    gamma_hat: float
    metric_peak: float
    grid_index: int


@dataclass(frozen=True, eq=False)
class DetectionResult:
    """Accepted jammers plus the per-iteration grid traces that produced them."""

    jammers: tuple[DetectedJammer, ...]
    traces: tuple[np.ndarray, ...]
    stopped_by: str

    @property
    def iterations_run(self) -> int:
        return len(self.traces)

    @property
    def thetas(self) -> list[float]:
        return [j.theta_hat for j in self.jammers]


def _scan_stats(model: CovModel, obs: ProjectedObservation, psi_grid: np.ndarray):
    """Vectorized (R_l, Q_l) over all grid columns of psi_grid."""
    V = model.R_inv @ psi_grid                              # N x L
    R_l = np.einsum("nl,nl->l", psi_grid.conj(), V).real
    Z = obs.y @ V.conj()                                    # tau' x L
    Q_l = np.sum(np.abs(Z) ** 2, axis=0)
    return R_l, Q_l


def _glrt_metric_vec(Q_l: np.ndarray, R_l: np.ndarray, tau_prime: int, mode: str) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        x = Q_l / (tau_prime * R_l)
        T = tau_prime * (x - np.log(x) - 1.0)
    T = np.where(Q_l > 0.0, T, 0.0)
    if mode == GLRT_MODE_ONE_SIDED:
        T = np.where(x > 1.0, T, 0.0)
    return np.maximum(T, 0.0)


def run_glrt_sci(
    obs: ProjectedObservation,
    grid: Grid,
    kappa: float,
    j_max: int,
    W: Combiner,
    *,
    mode: str = GLRT_MODE_LITERAL,
    steering: SteeringTable | None = None,
) -> DetectionResult:
    """Run the full detect-estimate-update loop for up to j_max iterations.

    Iteration t scans the grid against the current covariance model, accepts
    the argmax when the peak metric reaches kappa (ties break to the lowest
    grid index), stores gamma_hat clamped to >= 0, and updates the model.
    An all-zero scan (Q = 0 everywhere) declares H0 outright.
    """
    if kappa < 0.0:
        raise ValueError(f"kappa must be >= 0, got {kappa}")
    if j_max < 1:
        raise ValueError(f"j_max must be >= 1, got {j_max}")
    if mode not in GLRT_MODES:
        raise ValueError(f"unknown GLRT mode {mode!r}")
    table = steering if steering is not None else build_steering(grid, W)
    if table.psi.shape[0] != obs.n_chains:
        raise ValueError("steering table does not match the observation dimension")

    tau_prime = obs.tau_prime
    model = CovModel.noise_only(obs.sigma2, obs.n_chains)
    jammers: list[DetectedJammer] = []
    traces: list[np.ndarray] = []
    stopped_by = STOPPED_BY_MAX_ITERATIONS

    for _ in range(j_max):
        R_l, Q_l = _scan_stats(model, obs, table.psi)
        T = _glrt_metric_vec(Q_l, R_l, tau_prime, mode)
        traces.append(T)
        idx = int(np.argmax(T))
        peak = float(T[idx])
        if not np.any(Q_l > 0.0) or peak < kappa:
            stopped_by = STOPPED_BY_THRESHOLD
            break
        theta_hat = float(grid.points[idx])
        gamma_hat = max(0.0, gamma_mle(float(Q_l[idx]), float(R_l[idx]), tau_prime))
        model = cov_update(model, theta_hat, gamma_hat, W)
        jammers.append(
            DetectedJammer(theta_hat=theta_hat, gamma_hat=gamma_hat, metric_peak=peak, grid_index=idx)
        )

    return DetectionResult(jammers=tuple(jammers), traces=tuple(traces), stopped_by=stopped_by)
