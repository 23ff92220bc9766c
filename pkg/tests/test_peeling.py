"""Peeling decoder and Monte Carlo harness."""
import numpy as np
import pytest

from scldpc import ChannelSpec, DecodeStatus, EnsembleSpec, FailurePhase
from scldpc.util_deps.ensemble import sample_graph
from scldpc.util_deps.mean_evolution import integrate_mean
from scldpc.util_deps.peeling import (
    classify_failure,
    decode_trial,
    degree_distribution,
    empirical_temporal_covariance,
    peel_steps,
    r1_on_grid,
    run_monte_carlo,
    simulate_trials,
    transmit_and_initialize,
    trial_seed,
)


def _state(spec, eps, seed=1):
    return transmit_and_initialize(sample_graph(spec, seed), ChannelSpec(epsilon=eps), seed)


# =============================================================================
# DECODER STATE
# =============================================================================

def test_degree_distribution_conserves_edges(small_spec):
    state = _state(small_spec, 0.45)

    for _ in range(5):
        dd = degree_distribution(state)
        assert dd[:, 1:].sum() == small_spec.l * dd[:, 0].sum(), "edges = l * remaining variables"
        assert dd[:, 1].sum() == len(state.pool), "R_1 counts the degree-one checks"
        assert dd[:, 0].sum() == state.remaining, "V column counts remaining variables"
        if peel_steps(state, 3) == 0:
            break


def test_each_step_removes_one_variable(small_spec):
    state = _state(small_spec, 0.45)
    before = state.remaining

    done = peel_steps(state, 4)

    assert state.remaining == before - done, "one variable per peeling step"
    assert state.tau == pytest.approx(done / small_spec.M), "tau counts steps in units of M"


def test_r1_matches_pool(small_spec):
    state = _state(small_spec, 0.45)

    assert state.r1 == pytest.approx(len(state.pool) / small_spec.M), "r1 is pool size over M"
    assert sum(state.deg1_per_pos) == len(state.pool), "per-position counts sum to the pool"


def test_clone_is_independent(small_spec):
    state = _state(small_spec, 0.45)
    copy = state.clone(99)

    peel_steps(copy, 5)

    assert state.steps == 0, "original untouched by the clone's steps"
    assert copy.remaining <= state.remaining, "clone peeled on its own"


def test_no_erasures_decodes_immediately(small_spec):
    traj = decode_trial(small_spec, ChannelSpec(epsilon=0.0), seed=3)

    assert traj.status == DecodeStatus.DECODED, "nothing to decode"
    assert traj.tau_end == 0.0, "no steps taken"
    assert traj.remaining == 0, "no variables left"


def test_full_erasure_stalls(small_spec):
    traj = decode_trial(small_spec, ChannelSpec(epsilon=1.0), seed=3)
    n_checks = sum(small_spec.checks_at(u) for u in range(1, small_spec.D + 1))

    assert traj.status == DecodeStatus.STALLED, "fewer checks than variables"
    assert traj.remaining >= small_spec.L * small_spec.M - n_checks, "each check resolves at most one variable"
    assert not traj.decoded, "decoded property follows the status"


def test_trajectory_ends_with_empty_pool(small_spec):
    traj = decode_trial(small_spec, ChannelSpec(epsilon=0.45), seed=4, stride=1)

    assert traj.r1[-1] == 0.0, "decoding stops when no degree-one check is left"
    assert traj.tau[-1] == pytest.approx(traj.tau_end), "last record is the end of the run"
    assert np.all(np.diff(traj.tau) > 0), "tau strictly increasing"
    assert traj.seed == 4, "trajectory keeps its seed"


def test_record_positions_shapes(small_spec):
    traj = decode_trial(small_spec, ChannelSpec(epsilon=0.45), seed=4, stride=2, record_positions=True)

    assert traj.r1_u.shape == (len(traj.tau), small_spec.D), "one r1 profile per record"
    assert traj.v_u.shape == (len(traj.tau), small_spec.L), "one v profile per record"
    assert np.allclose(traj.r1_u.sum(axis=1), traj.r1), "profiles sum to r1"


# =============================================================================
# MONTE CARLO
# =============================================================================

def test_trial_seeds_are_stable():
    assert trial_seed(2024, 0) == trial_seed(2024, 0), "deterministic"
    assert trial_seed(2024, 0) != trial_seed(2024, 1), "distinct per index"
    assert trial_seed(2024, 0) != trial_seed(2025, 0), "distinct per base seed"


def test_simulate_rejects_zero_trials(small_spec):
    with pytest.raises(ValueError, match="trials"):
        simulate_trials(small_spec, ChannelSpec(epsilon=0.4), 0, base_seed=1)


def test_results_independent_of_parallelism(tiny_spec):
    ch = ChannelSpec(epsilon=0.5)
    serial = simulate_trials(tiny_spec, ch, 6, base_seed=5, parallelism=1)
    parallel = simulate_trials(tiny_spec, ch, 6, base_seed=5, parallelism=2)

    assert [t.seed for t in serial] == [t.seed for t in parallel], "same seeds in the same order"
    assert [t.tau_end for t in serial] == [t.tau_end for t in parallel], "same outcomes"


def test_monte_carlo_summary(small_spec):
    result = run_monte_carlo(small_spec, ChannelSpec(epsilon=0.55), 30, base_seed=7, tau_lb=0.5)

    assert result.trials == 30, "trial count kept"
    assert result.failures == len(result.stall_taus), "one stall time per failure"
    assert result.p_b == pytest.approx(result.failures / 30), "p_b is the failure fraction"
    assert result.ci_low <= result.p_b <= result.ci_high, "estimate inside its interval"
    assert sum(result.failure_phases.values()) == result.failures, "every failure classified"
    assert len(result.seeds) == 30, "seed manifest per trial"


def test_monte_carlo_low_erasure_rarely_fails(small_spec):
    low = run_monte_carlo(small_spec, ChannelSpec(epsilon=0.1), 20, base_seed=7)
    high = run_monte_carlo(small_spec, ChannelSpec(epsilon=0.9), 20, base_seed=7)

    assert low.failures <= 4, f"eps=0.1 should mostly decode, got {low.failures}/20 failures"
    assert high.failures == 20, "eps=0.9 exceeds 1 - rate and always stalls"


def test_classify_failure_phases():
    assert classify_failure(3.0, 0.48, 50, 4.0) == FailurePhase.INITIAL, "before tau_lb"
    assert classify_failure(10.0, 0.48, 50, 4.0) == FailurePhase.STEADY, "inside the steady phase"
    assert classify_failure(21.0, 0.48, 50, 4.0) == FailurePhase.FINAL, "after eps L - tau_lb"


def test_empirical_covariance_validation(small_spec):
    ch = ChannelSpec(epsilon=0.45)

    with pytest.raises(ValueError, match="trials"):
        empirical_temporal_covariance(small_spec, ch, 1, [1.0], [1.0, 2.0])
    with pytest.raises(ValueError, match="grid"):
        empirical_temporal_covariance(small_spec, ch, 5, [1.0], [1.0, 50.0])


def test_empirical_covariance_shape(small_spec):
    cov = empirical_temporal_covariance(small_spec, ChannelSpec(epsilon=0.45), 10, [0.5, 1.0], [1.0, 1.5, 2.0],
                                        base_seed=3)

    assert cov.shape == (2, 3), "(zeta, tau) grid"
    assert np.all(np.isfinite(cov)), "finite covariances"


def test_trajectories_concentrate_on_mean_evolution():
    spec, ch = EnsembleSpec(l=3, r=6, L=20, M=1000), ChannelSpec(epsilon=0.44)
    trajectories = simulate_trials(spec, ch, 20, base_seed=11, stride=50)
    grid = np.linspace(1.0, 6.0, 11)
    run = integrate_mean(spec, ch)

    samples = np.array([r1_on_grid(t, grid) for t in trajectories])
    mean_curve = np.interp(grid, run.tau, run.r1)
    spread = samples.std(axis=0, ddof=1)

    assert np.all(np.abs(samples.mean(axis=0) - mean_curve) <= 4 * spread / np.sqrt(len(samples)) + 2e-3), \
        "trajectory average follows the mean evolution"
    assert np.all(spec.M * spread ** 2 < 3.0), f"M Var[r1] stays O(1): {spec.M * spread ** 2}"
    assert np.abs(samples - mean_curve).max() < 0.1, "every trajectory stays near the mean"
