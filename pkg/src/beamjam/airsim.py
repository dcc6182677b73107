"""Over-the-air synthesis: pilots, received block, and pilot-space projection.

The received N x tau block is

    Y = sqrt(P) * W^H h phi_1^T
      + sum_j sqrt(Q_j) * W^H H_j u_j psi_j^T
      + W^H N_noise

with h = beta * a(theta_user), H_j u_j = beta_bar_j * a(theta_j) after jammer-side
beam alignment, psi_j ~ CN(0, I_tau) the jammer's random symbol stream, and
antenna noise N_noise with i.i.d. CN(0, 1) entries.

Projecting Y onto an unused pilot i (i >= 2) with y_i = (1/(sqrt(P)*tau)) * Y * conj(phi_i)
cancels the user exactly and leaves jamming plus noise with per-entry variance
sigma^2 = 1/(P*tau).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Combiner, Scenario, ula_response


@dataclass(frozen=True, eq=False)
class PilotSet:
    """tau orthogonal pilots as columns of a scaled DFT matrix; ||phi_i||^2 = tau.

    Column 0 (pilot index 1) belongs to the served user; the rest are unused.
    """

    matrix: np.ndarray

    def __post_init__(self) -> None:
        t0, t1 = self.matrix.shape
        if t0 != t1 or t0 < 2:
            raise ValueError("pilot matrix must be square with tau >= 2")

    @property
    def tau(self) -> int:
        return self.matrix.shape[0]

    @property
    def user(self) -> np.ndarray:
        return self.matrix[:, 0]

    @property
    def unused(self) -> np.ndarray:
        """tau x (tau-1) block of the unused pilots, order preserved."""
        return self.matrix[:, 1:]


def make_pilots(tau: int) -> PilotSet:
    """Unnormalized DFT pilot book: phi_i[t] = exp(-2j*pi*t*(i-1)/tau)."""
    if tau < 2:
        raise ValueError(f"need tau >= 2 pilots, got {tau}")
    t = np.arange(tau)
    return PilotSet(matrix=np.exp(-2j * np.pi * np.outer(t, t) / tau))


@dataclass(frozen=True, eq=False)
class ReceivedBlock:
    """Post-combining received signal Y (N x tau) plus bookkeeping."""

    matrix: np.ndarray
    scenario: Scenario

    def __post_init__(self) -> None:
        N, tau = self.matrix.shape
        if N != self.scenario.array.N or tau != self.scenario.tau:
            raise ValueError("received block shape must be N x tau")


def synth_received(
    scn: Scenario,
    pilots: PilotSet,
    W: Combiner,
    rng: np.random.Generator,
    *,
    include_jamming: bool = True,
    include_noise: bool = True,
) -> ReceivedBlock:
    """Synthesize one received block. The switch flags exist for H0 twins and
    zero-noise diagnostics; each skipped term also skips its RNG draws."""
    if pilots.tau != scn.tau:
        raise ValueError(f"pilot length {pilots.tau} != scenario tau {scn.tau}")
    M, N = scn.array.M, scn.array.N
    if W.matrix.shape != (M, N):
        raise ValueError("combiner shape must match the array config")

    h = scn.user_beta * ula_response(scn.user_theta, M)
    Y = np.sqrt(scn.user_power) * np.outer(W.matrix.conj().T @ h, pilots.user)

    if include_jamming and scn.jammers:
        J = len(scn.jammers)
        psi = (
            rng.standard_normal((J, scn.tau)) + 1j * rng.standard_normal((J, scn.tau))
        ) / np.sqrt(2.0)
        for j, jam in enumerate(scn.jammers):
            g = jam.beta_bar * (W.matrix.conj().T @ ula_response(jam.theta, M))
            Y = Y + np.sqrt(jam.power) * np.outer(g, psi[j])

    if include_noise:
        noise = (
            rng.standard_normal((M, scn.tau)) + 1j * rng.standard_normal((M, scn.tau))
        ) / np.sqrt(2.0)
        Y = Y + W.matrix.conj().T @ noise

    return ReceivedBlock(matrix=Y, scenario=scn)


@dataclass(frozen=True, eq=False)
class ProjectedObservation:
    """Unused-pilot projections y_2..y_tau stacked as rows of a (tau-1) x N array."""

    y: np.ndarray
    sigma2: float
    user_projection: np.ndarray | None = None  # y_1, populated only on request

    def __post_init__(self) -> None:
        if self.y.ndim != 2 or self.y.shape[0] < 1:
            raise ValueError("need at least one unused-pilot projection")
        if self.sigma2 <= 0.0:
            raise ValueError("sigma2 must be positive")

    @property
    def tau_prime(self) -> int:
        return self.y.shape[0]

    @property
    def n_chains(self) -> int:
        return self.y.shape[1]

    def stacked(self) -> np.ndarray:
        """Single tau'*N vector [y_2; ...; y_tau] for dense cross-checks."""
        return self.y.reshape(-1)


def project(
    block: ReceivedBlock,
    pilots: PilotSet,
    P: float,
    *,
    include_user_pilot: bool = False,
) -> ProjectedObservation:
    """Project the received block onto each unused pilot.

    y_i = (1/(sqrt(P)*tau)) * Y * conj(phi_i), i = 2..tau. The used-pilot
    projection (i = 1) still contains the user and is exposed only behind the
    diagnostic flag.
    """
    if P <= 0.0:
        raise ValueError(f"user power must be positive, got {P}")
    if pilots.tau != block.matrix.shape[1]:
        raise ValueError("pilot length does not match the received block")
    coeff = 1.0 / (np.sqrt(P) * pilots.tau)
    y = coeff * (block.matrix @ pilots.unused.conj())   # N x (tau-1)
    user_proj = coeff * (block.matrix @ pilots.user.conj()) if include_user_pilot else None
    return ProjectedObservation(
        y=np.ascontiguousarray(y.T),
        sigma2=1.0 / (P * pilots.tau),
        user_projection=user_proj,
    )
