"""Array geometry, beamspace combining, path loss, and scenario sampling.

Conventions used throughout the package:

* spatial angle theta = sin(physical angle), so theta lives in [-1, 1];
* ULA response  [a(theta)]_m = (1/sqrt(M)) * exp(-j*pi*m*theta), m = 0..M-1,
  i.e. half-wavelength spacing and unit norm;
* beamspace combiner W is the M x N matrix whose n-th column is
  a(theta_bar_n) with theta_bar_n = -1 + (n-1)*2/N (1-based n);
* path gains beta are linear POWER gains; channel amplitudes use sqrt(beta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SPEED_OF_LIGHT_M_S = 299_792_458.0


# ----- Array response -----

def ula_response(theta: float, M: int) -> np.ndarray:
    """Unit-norm ULA steering vector at spatial angle theta.

    Parameters
    ----------
    theta : float
        Spatial angle sin(phi), must lie in [-1, 1].
    M : int
        Number of antennas.
    """
    if M < 1:
        raise ValueError(f"antenna count must be >= 1, got {M}")
    if not -1.0 <= theta <= 1.0:
        raise ValueError(f"spatial angle must lie in [-1, 1], got {theta}")
    m = np.arange(M)
    return np.exp(-1j * np.pi * m * theta) / np.sqrt(M)


def ula_response_matrix(thetas: np.ndarray, M: int) -> np.ndarray:
    """Stack of ULA steering vectors, one column per angle (M x len(thetas))."""
    thetas = np.asarray(thetas, dtype=float)
    if M < 1:
        raise ValueError(f"antenna count must be >= 1, got {M}")
    if thetas.size and (thetas.min() < -1.0 or thetas.max() > 1.0):
        raise ValueError("spatial angles must lie in [-1, 1]")
    m = np.arange(M)[:, None]
    return np.exp(-1j * np.pi * m * thetas[None, :]) / np.sqrt(M)


@dataclass(frozen=True, eq=False)
class ArrayConfig:
    """Base-station array: M antennas reduced to N RF chains (N <= M)."""

    M: int
    N: int
    M_prime: int = 4  # jammer-side antenna count; only its beam matters here

    def __post_init__(self) -> None:
        if self.M < 1 or self.N < 1 or self.M_prime < 1:
            raise ValueError("array sizes must be positive")
        if self.N > self.M:
            raise ValueError(f"RF chains N={self.N} cannot exceed antennas M={self.M}")


@dataclass(frozen=True, eq=False)
class Combiner:
    """Analog combiner W (M x N); columns are steering vectors at the beam angles."""

    matrix: np.ndarray
    beam_angles: np.ndarray

    def __post_init__(self) -> None:
        M, N = self.matrix.shape
        if N > M:
            raise ValueError("combiner must be tall: N <= M")
        if self.beam_angles.shape != (N,):
            raise ValueError("one beam angle per column required")


def dft_combiner(M: int, N: int) -> Combiner:
    """DFT beamspace combiner: beams at theta_bar_n = -1 + (n-1)*2/N, n = 1..N."""
    if N > M:
        raise ValueError(f"RF chains N={N} cannot exceed antennas M={M}")
    theta_bar = -1.0 + 2.0 * np.arange(N) / N
    return Combiner(matrix=ula_response_matrix(theta_bar, M), beam_angles=theta_bar)


def beamspace_steering(theta: float, W: Combiner) -> np.ndarray:
    """Beamspace steering vector Psi(theta) = W^H a(theta), length N."""
    return W.matrix.conj().T @ ula_response(theta, W.matrix.shape[0])


def beamspace_steering_matrix(thetas: np.ndarray, W: Combiner) -> np.ndarray:
    """Psi over many angles at once: N x len(thetas)."""
    return W.matrix.conj().T @ ula_response_matrix(thetas, W.matrix.shape[0])


# ----- Large-scale fading -----

def path_loss_db(
    d_m: float,
    f_c_hz: float,
    exponent: float,
    shadow_db: float = 0.0,
    c_m_s: float = SPEED_OF_LIGHT_M_S,
) -> float:
    """Log-distance path gain in dB (a negative number for far links).

    beta_dB = -20*lg(4*pi*f_c/c) - 10*exponent*lg(d) - shadow_db
    """
    if d_m <= 0.0:
        raise ValueError(f"distance must be positive, got {d_m}")
    if f_c_hz <= 0.0:
        raise ValueError(f"carrier frequency must be positive, got {f_c_hz}")
    return (
        -20.0 * np.log10(4.0 * np.pi * f_c_hz / c_m_s)
        - 10.0 * exponent * np.log10(d_m)
        - shadow_db
    )


# ----- Scenarios -----

@dataclass(frozen=True, eq=False)
class JammerTruth:
    """Ground truth for one jammer."""

    theta: float        # arrival spatial angle sin(phi_arrival)
    phi: float          # departure spatial angle at the jammer's own array
    distance_m: float
    power: float        # transmit power Q_j (linear)
    beta: float         # linear power gain from path loss + shadowing
    beta_bar: complex   # channel amplitude after beam alignment: sqrt(beta)


@dataclass(frozen=True, eq=False)
class ScenarioSpec:
    """Everything the scenario sampler needs, in linear/SI units except dB fields."""

    array: ArrayConfig
    tau: int
    n_jammers: int
    jnr_db: float | None          # target JNR anchored at the weakest jammer
    jsr_db: float = 0.0           # Q_o/P in dB; 0 dB means P = Q_o
    carrier_hz: float = 28e9
    distance_range_m: tuple[float, float] = (1000.0, 1500.0)
    path_loss_exponent: float = 2.0
    shadow_std_db: float = 4.0

    def __post_init__(self) -> None:
        if self.tau < 2:
            raise ValueError("tau must be >= 2 (one used pilot plus at least one unused)")
        if self.n_jammers < 0:
            raise ValueError("jammer count must be >= 0")
        d0, d1 = self.distance_range_m
        if not (0.0 < d0 <= d1):
            raise ValueError(f"bad distance range {self.distance_range_m}")
        if self.shadow_std_db < 0.0:
            raise ValueError("shadow std must be >= 0 dB")


@dataclass(frozen=True, eq=False)
class Scenario:
    """One sampled uplink snapshot: user, jammers, and derived powers."""

    array: ArrayConfig
    tau: int
    user_theta: float
    user_power: float       # P
    user_beta: complex      # sqrt of the user's linear path gain
    jammers: tuple[JammerTruth, ...]
    sigma2: float           # projected-domain noise variance, 1/(P*tau) exactly
    carrier_hz: float
    rng_seed: int

    def __post_init__(self) -> None:
        if self.user_power <= 0.0:
            raise ValueError("user power must be positive")
        if self.sigma2 != 1.0 / (self.user_power * self.tau):
            raise ValueError("sigma2 must equal 1/(P*tau) exactly")

    @property
    def true_thetas(self) -> list[float]:
        return [j.theta for j in self.jammers]

    def without_jamming(self) -> "Scenario":
        """Same snapshot with the jammers silenced (H0 twin); powers unchanged."""
        return Scenario(
            array=self.array,
            tau=self.tau,
            user_theta=self.user_theta,
            user_power=self.user_power,
            user_beta=self.user_beta,
            jammers=(),
            sigma2=self.sigma2,
            carrier_hz=self.carrier_hz,
            rng_seed=self.rng_seed,
        )


def sample_scenario(spec: ScenarioSpec, seed: int) -> Scenario:
    """Draw one scenario; pure function of (spec, seed).

    Angles are uniform in physical space [-pi/2, pi/2] and mapped through sin.
    Distances are uniform over the configured range. Shadow fading is
    N(0, shadow_std_db^2) in dB, drawn per link (user included).

    The weakest jammer o = argmin_j beta_j anchors the power scaling:
    Q_o = JNR / beta_o, every Q_j = Q_o, and P = Q_o / JSR.
    """
    J = spec.n_jammers
    if J == 0 and spec.jnr_db is not None:
        raise ValueError("a JNR target needs at least one jammer (J > 0)")
    if J > 0 and spec.jnr_db is None:
        raise ValueError("scenarios with jammers need a JNR target")

    rng = np.random.default_rng(seed)
    d0, d1 = spec.distance_range_m

    # fixed draw order: user link first, then jammer arrays
    user_theta = float(np.sin(rng.uniform(-np.pi / 2, np.pi / 2)))
    user_d = rng.uniform(d0, d1)
    user_shadow = rng.normal(0.0, spec.shadow_std_db)
    arrival = np.sin(rng.uniform(-np.pi / 2, np.pi / 2, size=J))
    departure = np.sin(rng.uniform(-np.pi / 2, np.pi / 2, size=J))
    dist = rng.uniform(d0, d1, size=J)
    shadow = rng.normal(0.0, spec.shadow_std_db, size=J)

    user_beta_lin = 10.0 ** (
        path_loss_db(user_d, spec.carrier_hz, spec.path_loss_exponent, user_shadow) / 10.0
    )
    beta_lin = np.array(
        [
            10.0 ** (path_loss_db(dist[j], spec.carrier_hz, spec.path_loss_exponent, shadow[j]) / 10.0)
            for j in range(J)
        ]
    )

    if J > 0:
        jnr_lin = 10.0 ** (spec.jnr_db / 10.0)
        beta_o = float(beta_lin.min())
        Q = jnr_lin / beta_o
        P = Q / 10.0 ** (spec.jsr_db / 10.0)
    else:
        P = 1.0

    jammers = tuple(
        JammerTruth(
            theta=float(arrival[j]),
            phi=float(departure[j]),
            distance_m=float(dist[j]),
            power=float(Q),
            beta=float(beta_lin[j]),
            beta_bar=complex(np.sqrt(beta_lin[j])),
        )
        for j in range(J)
    )

    return Scenario(
        array=spec.array,
        tau=spec.tau,
        user_theta=user_theta,
        user_power=float(P),
        user_beta=complex(np.sqrt(user_beta_lin)),
        jammers=jammers,
        sigma2=1.0 / (float(P) * spec.tau),
        carrier_hz=spec.carrier_hz,
        rng_seed=int(seed),
    )
