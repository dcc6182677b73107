"""Built-in invariant suites behind `beamjam selftest`.

Each suite re-derives a property the library is supposed to guarantee and
checks it at small sizes, so the whole run stays well under a minute. The
optional fault injection perturbs the checked artifact inside the harness to
prove a broken invariant is caught loudly and attributed to the right suite.
"""

from __future__ import annotations

import time

import numpy as np

from .airsim import make_pilots, project, synth_received
from .evaluation import match_detections, substream_seed, trial_seeds
from .glrt import (
    CovModel,
    Grid,
    cov_update,
    gamma_mle,
    glrt_metric,
    q_stat,
    r_stat,
    run_glrt_sci,
)
from .model import (
    ArrayConfig,
    ScenarioSpec,
    beamspace_steering,
    dft_combiner,
    sample_scenario,
    ula_response,
)
from .msd import MsdVariant, msd_metric, msd_projection, run_msd

FAULT_WOODBURY = "woodbury"
KNOWN_FAULTS = (FAULT_WOODBURY,)


def _spec(M=16, N=8, tau=6, J=2, jnr_db=20.0) -> ScenarioSpec:
    return ScenarioSpec(array=ArrayConfig(M=M, N=N, M_prime=4), tau=tau, n_jammers=J, jnr_db=jnr_db)


def _planted_observation(theta, jnr_db=25.0, seed=7, M=32, N=16, tau=8):
    spec = _spec(M=M, N=N, tau=tau, J=1, jnr_db=jnr_db)
    scn = sample_scenario(spec, seed)
    scn = type(scn)(
        array=scn.array,
        tau=scn.tau,
        user_theta=scn.user_theta,
        user_power=scn.user_power,
        user_beta=scn.user_beta,
        jammers=(type(scn.jammers[0])(
            theta=theta,
            phi=scn.jammers[0].phi,
            distance_m=scn.jammers[0].distance_m,
            power=scn.jammers[0].power,
            beta=scn.jammers[0].beta,
            beta_bar=scn.jammers[0].beta_bar,
        ),),
        sigma2=scn.sigma2,
        carrier_hz=scn.carrier_hz,
        rng_seed=scn.rng_seed,
    )
    W = dft_combiner(M, N)
    pilots = make_pilots(tau)
    block = synth_received(scn, pilots, W, np.random.default_rng(seed + 1))
    return scn, project(block, pilots, scn.user_power), W


# ----- Suites -----

def suite_ula_response(inject: str | None) -> None:
    rng = np.random.default_rng(0)
    for theta in rng.uniform(-1, 1, 25):
        a = ula_response(float(theta), 32)
        assert abs(np.vdot(a, a).real - 1.0) < 1e-12, "steering vector must be unit norm"
    a0 = ula_response(0.0, 16)
    a1 = ula_response(2.0 / 16, 16)
    assert abs(np.vdot(a0, a1)) < 1e-12, "2/M-spaced angles must be orthogonal"


def suite_dft_combiner(inject: str | None) -> None:
    W = dft_combiner(64, 16)
    G = W.matrix.conj().T @ W.matrix
    assert np.abs(G - np.eye(16)).max() < 1e-10, "combiner columns must be orthonormal when N | M"
    assert W.beam_angles[0] == -1.0 and abs(W.beam_angles[-1] - (1.0 - 2.0 / 16)) < 1e-15
    psi = beamspace_steering(float(W.beam_angles[3]), W)
    e = np.zeros(16)
    e[3] = 1.0
    assert np.abs(psi - e).max() < 1e-10, "on-beam steering must be a unit coordinate vector"


def suite_scenario_sampler(inject: str | None) -> None:
    spec = _spec(J=4)
    a = sample_scenario(spec, 123)
    b = sample_scenario(spec, 123)
    assert a.user_theta == b.user_theta and a.user_power == b.user_power
    assert all(x.theta == y.theta and x.beta == y.beta for x, y in zip(a.jammers, b.jammers))
    assert a.sigma2 == 1.0 / (a.user_power * a.tau)
    beta_o = min(j.beta for j in a.jammers)
    jnr = a.jammers[0].power * beta_o
    assert abs(jnr - 10.0 ** (spec.jnr_db / 10.0)) < 1e-6 * jnr, "weakest jammer must sit at the JNR target"
    assert all(-1.0 <= j.theta <= 1.0 for j in a.jammers)
    assert all(1000.0 <= j.distance_m <= 1500.0 for j in a.jammers)


def suite_pilot_orthogonality(inject: str | None) -> None:
    for tau in (2, 5, 10):
        pil = make_pilots(tau)
        G = pil.matrix.conj().T @ pil.matrix
        assert np.abs(G - tau * np.eye(tau)).max() < 1e-10 * tau, "pilot Gram must be tau*I"


def suite_projection_nulling(inject: str | None) -> None:
    spec = _spec(J=3)
    W = dft_combiner(spec.array.M, spec.array.N)
    pilots = make_pilots(spec.tau)
    for seed in range(5):
        scn = sample_scenario(spec, seed)
        block = synth_received(
            scn, pilots, W, np.random.default_rng(seed), include_jamming=False, include_noise=False
        )
        obs = project(block, pilots, scn.user_power)
        h_b = np.linalg.norm(
            W.matrix.conj().T @ (scn.user_beta * ula_response(scn.user_theta, spec.array.M))
        )
        worst = np.abs(obs.y).max()
        assert worst <= 1e-12 * h_b, "unused-pilot projection must cancel the user"


def suite_projection_statistics(inject: str | None) -> None:
    spec = ScenarioSpec(array=ArrayConfig(M=16, N=8, M_prime=4), tau=6, n_jammers=0, jnr_db=None)
    W = dft_combiner(16, 8)
    pilots = make_pilots(6)
    vals = []
    cross = 0.0
    n_trials = 400
    for seed in range(n_trials):
        scn = sample_scenario(spec, seed)
        block = synth_received(scn, pilots, W, np.random.default_rng(10_000 + seed))
        obs = project(block, pilots, scn.user_power)
        vals.append(np.abs(obs.y) ** 2)
        cross += np.vdot(obs.y[0], obs.y[1])
    var = float(np.mean(vals))
    sigma2 = 1.0 / (1.0 * 6)
    assert abs(var - sigma2) < 0.05 * sigma2, "projected noise variance must be 1/(P*tau)"
    rho = abs(cross / n_trials) / sigma2 / 8
    assert rho < 0.02, "projections on different unused pilots must be uncorrelated"


def suite_woodbury(inject: str | None) -> None:
    rng = np.random.default_rng(11)
    W = dft_combiner(32, 8)
    for trial in range(20):
        model = CovModel.noise_only(float(rng.uniform(0.1, 2.0)), 8)
        for _ in range(rng.integers(1, 5)):
            theta = float(rng.uniform(-1, 1))
            gamma = float(rng.lognormal(0.0, 1.0))
            model = cov_update(model, theta, gamma, W)
        R_inv = model.R_inv
        if inject == FAULT_WOODBURY:
            R_inv = R_inv + 1e-6  # deliberate corruption of the cached inverse
        resid = np.abs(model.R @ R_inv - np.eye(8)).max()
        assert resid < 1e-9, f"cached inverse residual {resid:.2e} exceeds 1e-9"


def suite_determinant_lemma(inject: str | None) -> None:
    rng = np.random.default_rng(12)
    W = dft_combiner(32, 8)
    for _ in range(20):
        model = CovModel.noise_only(float(rng.uniform(0.1, 2.0)), 8)
        if rng.uniform() < 0.7:
            model = cov_update(model, float(rng.uniform(-1, 1)), float(rng.lognormal()), W)
        theta = float(rng.uniform(-1, 1))
        gamma = float(rng.lognormal())
        updated = cov_update(model, theta, gamma, W)
        lhs = np.linalg.slogdet(updated.R)[1] - np.linalg.slogdet(model.R)[1]
        rhs = np.log(1.0 + gamma * r_stat(model, theta, W))
        assert abs(lhs - rhs) < 1e-9, "rank-1 determinant identity violated"


def suite_glrt_metric(inject: str | None) -> None:
    rng = np.random.default_rng(13)
    for _ in range(200):
        R = float(rng.lognormal())
        tau_p = int(rng.integers(1, 12))
        Q = float(tau_p * R * rng.lognormal(0.0, 0.7))
        T = glrt_metric(Q, R, tau_p)
        assert T >= 0.0
    assert glrt_metric(9.0, 1.0, 9) == 0.0, "metric must vanish at Q/R = tau'"
    # substitution identity against the pre-concentration form
    for _ in range(50):
        R = float(rng.lognormal())
        tau_p = int(rng.integers(1, 12))
        Q = float(tau_p * R * rng.lognormal(0.0, 0.7))
        g = gamma_mle(Q, R, tau_p)
        direct = -tau_p * np.log1p(g * R) + g * Q / (1.0 + g * R)
        assert abs(glrt_metric(Q, R, tau_p) - direct) < 1e-10 * max(1.0, abs(direct))
    # right branch strictly increasing in Q/R
    T_prev = 0.0
    for ratio in np.linspace(1.0, 8.0, 30):
        T = glrt_metric(ratio * 5 * 2.0, 2.0, 5)
        assert T >= T_prev
        T_prev = T


def suite_glrt_loop(inject: str | None) -> None:
    scn, obs, W = _planted_observation(theta=0.25)
    grid = Grid.uniform(101)
    res = run_glrt_sci(obs, grid, kappa=25.0, j_max=4, W=W)
    assert res.iterations_run <= 4 and len(res.traces) == res.iterations_run
    assert res.jammers, "a 25 dB jammer must be detected"
    assert abs(res.jammers[0].theta_hat - 0.25) <= 2.0 / 16, "estimate must land within one beam"
    res2 = run_glrt_sci(obs, grid, kappa=25.0, j_max=4, W=W)
    assert all(np.array_equal(a, b) for a, b in zip(res.traces, res2.traces)), "loop must be deterministic"
    if len(res.traces) > 1:
        idx = res.jammers[0].grid_index
        assert res.traces[1][idx] < res.traces[0][idx], "accepted peak must be suppressed next iteration"


def suite_msd_projector(inject: str | None) -> None:
    W = dft_combiner(32, 8)
    sigma2 = 0.37
    Xi = msd_projection(MsdVariant.IS, (0.2, -0.5), (), sigma2, W)
    assert np.abs(Xi @ Xi - Xi).max() < 1e-10, "IS deflation must be idempotent"
    for theta in (0.2, -0.5):
        assert np.linalg.norm(Xi @ beamspace_steering(theta, W)) < 1e-10
    Xi0 = msd_projection(MsdVariant.ICM, (), (), sigma2, W)
    assert np.abs(Xi0 - np.eye(8) / np.sqrt(sigma2)).max() < 1e-12
    Xi1 = msd_projection(MsdVariant.ICM, (0.2,), (4.0,), sigma2, W)
    psi = beamspace_steering(0.2, W)
    Sigma = 4.0 * np.outer(psi, psi.conj()) + sigma2 * np.eye(8)
    assert np.abs(Xi1 @ Sigma @ Xi1 - np.eye(8)).max() < 1e-9, "ICM whitener must invert its covariance"


def suite_msd_scale_invariance(inject: str | None) -> None:
    scn, obs, W = _planted_observation(theta=-0.44, seed=3)
    Xi = msd_projection(MsdVariant.IS, (0.5,), (), obs.sigma2, W)
    t1 = msd_metric(obs, -0.44, Xi, W)
    t2 = msd_metric(obs, -0.44, 3.7 * Xi, W)
    assert abs(t1 - t2) < 1e-9 * max(1.0, t1), "metric must ignore the scale of Xi"


def suite_msd_loop(inject: str | None) -> None:
    scn, obs, W = _planted_observation(theta=0.25, seed=5)
    grid = Grid.uniform(101)
    res = run_msd(obs, grid, kappa=60.0, j_max=3, variant=MsdVariant.IS, W=W)
    assert res.jammers and abs(res.jammers[0].theta_hat - 0.25) <= 2.0 / 16
    if len(res.traces) > 1:
        assert res.traces[1][res.jammers[0].grid_index] == 0.0, "IS must null the accepted angle exactly"
    res_icm = run_msd(obs, grid, kappa=60.0, j_max=3, variant=MsdVariant.ICM, W=W)
    assert res_icm.jammers, "ICM must also find the planted jammer"


def suite_matching_rules(inject: str | None) -> None:
    near = match_detections([0.1, 0.7], [0.1 + 1.0 / 16, -0.3], N=16)
    assert near.matches == (True, False), "nearest rule within 2/N"
    assert abs(near.errors[0] - (-1.0 / 16)) < 1e-12 and near.errors[1] is None
    exact = match_detections([0.5 + 2.0 / 16], [0.5], N=16)
    assert exact.matches == (True,), "the 2/N bound is inclusive"
    beyond = match_detections([0.5 + 2.0 / 16 + 1e-9], [0.5], N=16)
    assert beyond.matches == (False,)
    empty = match_detections([], [0.1, 0.2], N=16)
    assert empty.matches == (False, False) and empty.errors == (None, None)


def suite_substreams(inject: str | None) -> None:
    seen = set()
    for phase in ("calibrate", "sweep"):
        for jnr in range(3):
            for t in range(50):
                seen.add(trial_seeds(1, phase, jnr, t))
    assert len(seen) == 2 * 3 * 50, "trial substreams must not collide"
    assert substream_seed(1, "sweep", 0, 0) == substream_seed(1, "sweep", 0, 0)
    assert substream_seed(1, "sweep", 0, 0) != substream_seed(2, "sweep", 0, 0)


SUITES: tuple[tuple[str, object], ...] = (
    ("ula-response", suite_ula_response),
    ("dft-combiner", suite_dft_combiner),
    ("scenario-sampler", suite_scenario_sampler),
    ("pilot-orthogonality", suite_pilot_orthogonality),
    ("projection-nulling", suite_projection_nulling),
    ("projection-statistics", suite_projection_statistics),
    ("woodbury", suite_woodbury),
    ("determinant-lemma", suite_determinant_lemma),
    ("glrt-metric", suite_glrt_metric),
    ("glrt-loop", suite_glrt_loop),
    ("msd-projector", suite_msd_projector),
    ("msd-scale-invariance", suite_msd_scale_invariance),
    ("msd-loop", suite_msd_loop),
    ("matching-rules", suite_matching_rules),
    ("substreams", suite_substreams),
)


def run_selftest(inject_fault: str | None = None, out=print) -> int:
    """Run every suite; return 0 iff all pass. Failures are named explicitly."""
    if inject_fault is not None and inject_fault not in KNOWN_FAULTS:
        out(f"unknown fault {inject_fault!r}; known: {', '.join(KNOWN_FAULTS)}")
        return 2
    failures: list[str] = []
    for name, fn in SUITES:
        t0 = time.perf_counter()
        try:
            fn(inject_fault)
        except AssertionError as e:
            out(f"[FAIL] {name} ({time.perf_counter() - t0:.2f} s): {e}")
            failures.append(name)
        else:
            out(f"[PASS] {name} ({time.perf_counter() - t0:.2f} s)")
    if failures:
        out(f"selftest FAILED: {len(failures)} suite(s): {', '.join(failures)}")
        return 1
    out(f"selftest passed: {len(SUITES)} suites")
    return 0
