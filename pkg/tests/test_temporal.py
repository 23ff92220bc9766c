"""Temporal covariance: Gaussian DD sampling and the theta fit."""
import numpy as np
import pytest

from scldpc import CovarianceNotPSDError, EnsembleSpec, FitError, TemporalCovEstimate
from scldpc.util_deps.mean_evolution import initial_mean
from scldpc.util_deps import temporal
from scldpc.util_deps.temporal import fit_theta, phi_estimator, sample_dd_at, theta_from_trajectories, theta_param


def _synthetic(theta=0.5, zeta=5.0, scale=0.3):
    tau = zeta + np.arange(0.0, 10.0, 0.1)
    return TemporalCovEstimate(zeta=zeta, tau=tau, phi=scale * np.exp(-theta * (tau - zeta)), N=100)


# =============================================================================
# FIT
# =============================================================================

def test_fit_theta_recovers_exponential_rate():
    estimate = _synthetic(theta=0.5)

    theta = fit_theta(estimate)

    assert theta == pytest.approx(0.5, rel=1e-9), f"exact exponential, got {theta}"
    assert estimate.theta == theta, "estimate updated in place"
    assert estimate.fit_residual == pytest.approx(0.0, abs=1e-9), "no residual on a pure exponential"


def test_fit_theta_custom_window():
    estimate = _synthetic(theta=0.8)

    assert fit_theta(estimate, window=(0.1, 0.9)) == pytest.approx(0.8, rel=1e-9), "window override"
    assert estimate.fit_window == (0.1, 0.9), "window recorded"


def test_fit_theta_rejects_flat_covariance():
    tau = np.arange(0.0, 5.0, 0.1)
    estimate = TemporalCovEstimate(zeta=0.0, tau=tau, phi=np.ones_like(tau), N=10)

    with pytest.raises(FitError):
        fit_theta(estimate)


def test_fit_theta_rejects_nonpositive_variance():
    tau = np.arange(0.0, 5.0, 0.1)
    estimate = TemporalCovEstimate(zeta=0.0, tau=tau, phi=-np.exp(-tau), N=10)

    with pytest.raises(FitError, match="not positive"):
        fit_theta(estimate)


def test_estimate_normalization():
    estimate = _synthetic(scale=2.0)

    assert estimate.phi_zeta == pytest.approx(2.0), "phi at zeta"
    assert estimate.normalized[0] == pytest.approx(1.0), "normalized to one at zeta"


def test_estimate_round_trips_through_json():
    estimate = _synthetic()
    fit_theta(estimate)

    restored = TemporalCovEstimate.model_validate(estimate.model_dump(mode="json"))

    assert np.allclose(restored.phi, estimate.phi), "arrays restored from lists"
    assert restored.theta == estimate.theta, "fit kept"


# =============================================================================
# SAMPLING
# =============================================================================

def test_zero_covariance_sample_is_the_mean(small_spec, channel):
    mean = initial_mean(small_spec, channel).g
    n = mean.size

    draws = sample_dd_at(small_spec, mean, np.zeros((n, n)), rng_seed=1, size=3)

    assert draws.shape == (3,) + mean.shape, "(size, D, r+1)"
    assert np.allclose(draws, mean[None]), "no spread without covariance"


def test_samples_follow_covariance(small_spec, channel):
    mean = initial_mean(small_spec, channel).g + 10.0
    n = mean.size
    cov = np.eye(n) * small_spec.M

    draws = sample_dd_at(small_spec, mean, cov, rng_seed=2, size=4000)
    spread = draws.reshape(4000, n).std(axis=0)

    assert np.allclose(spread, 1.0, atol=0.08), "unit variance after dividing by M"
    assert np.allclose(draws.mean(axis=0), mean, atol=0.08), "centered on the mean"


def test_sampling_is_seeded(small_spec, channel):
    mean = initial_mean(small_spec, channel).g
    cov = np.eye(mean.size) * 1e-3

    a = sample_dd_at(small_spec, mean, cov, rng_seed=5, size=2)
    b = sample_dd_at(small_spec, mean, cov, rng_seed=5, size=2)

    assert np.array_equal(a, b), "same seed, same draws"


def test_non_psd_covariance_rejected(small_spec, channel):
    mean = initial_mean(small_spec, channel).g

    with pytest.raises(CovarianceNotPSDError):
        sample_dd_at(small_spec, mean, -np.eye(mean.size), rng_seed=1)


def test_phi_estimator_needs_two_samples(small_spec, channel):
    with pytest.raises(ValueError, match="N >= 2"):
        phi_estimator(small_spec, channel, zeta=1.0, N=1)


def test_phi_estimator_rejects_grid_before_zeta(small_spec, channel):
    with pytest.raises(ValueError, match="tau grid"):
        phi_estimator(small_spec, channel, zeta=1.0, tau_grid=[0.5, 1.5], N=4)


def test_phi_estimator_on_explicit_grid(small_spec, channel):
    estimate = phi_estimator(small_spec, channel, zeta=0.5, tau_grid=[0.5, 0.75, 1.0], N=8, rng_seed=3)

    assert list(estimate.tau) == [0.5, 0.75, 1.0], "grid kept as given"
    assert estimate.phi.shape == (3,), "one value per grid point"
    assert estimate.N == 8, "sample count recorded"
    assert estimate.phi[0] >= 0, "phi(zeta, zeta) is a sample variance"


def test_theta_from_trajectories_fits_empirical_covariance(small_spec, channel, monkeypatch):
    calls = {}

    def fake(spec, ch, trials, zeta_grid, tau_grid, base_seed, parallelism):
        calls.update(trials=trials, zeta=list(zeta_grid), seed=base_seed)
        return (0.2 * np.exp(-0.7 * (np.asarray(tau_grid) - zeta_grid[0])))[None, :]

    monkeypatch.setattr(temporal, "empirical_temporal_covariance", fake)
    estimate = theta_from_trajectories(small_spec, channel, trials=50, zeta=0.5, seed=9)

    assert calls == {"trials": 50, "zeta": [0.5], "seed": 9}, "simulation arguments forwarded"
    assert estimate.tau[0] == 0.5, "grid starts at zeta"
    assert estimate.theta == pytest.approx(0.7, rel=1e-9), "decay rate of the empirical covariance"


@pytest.mark.integration
def test_theta_36():
    estimate = theta_param(EnsembleSpec(l=3, r=6, L=100, M=600), reference_epsilon=0.4481, rng_seed=1)

    assert estimate.theta == pytest.approx(0.59, abs=0.1), f"(3,6) theta, got {estimate.theta}"
